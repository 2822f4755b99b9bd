//! Random-environment Kalikow decomposition for the cascade model.
//!
//! For a site `(i, t)` the level-`k` neighborhood is the space-time box
//! `V_i(k) × [t - k, t[`. Weights depend on the realized dominating measure
//! near the site, so a [`CascadeSite`] is built from a [`Prm`]. Jumps older
//! than the history horizon `H` are ignored; their expected influence on
//! the rate is bounded by the reported tail error.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::kalikow::{match_intervals, sup_oscillation, Activation, LevelLaw, LevelWeights, DEFAULT_BUDGET};
use crate::model::{GrowingNeighborhoods, ModelKind, NeighborhoodSequence, Network};
use crate::prm::{JumpFilter, Prm, SiteKey};

/// Default tolerance on the truncated history tail.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-9;

/// Network-wide settings shared by every cascade site.
#[derive(Debug)]
pub struct CascadeContext<'a> {
    network: &'a Network,
    nbhd: &'a GrowingNeighborhoods,
    horizon: f64,
    tolerance: f64,
    e_tail: Vec<f64>,
    acts: Vec<Activation>,
    budget: u64,
}

impl<'a> CascadeContext<'a> {
    /// Picks the smallest horizon whose tail error is below `tolerance` for every neuron.
    pub fn new(network: &'a Network, nbhd: &'a GrowingNeighborhoods, tolerance: f64) -> Result<Self> {
        if network.kind() != ModelKind::Cascade {
            return Err(Error::WrongModelKind { expected: "cascade" });
        }
        let mut horizon: f64 = 0.0;
        for i in 0..network.len() {
            let h = smallest_horizon(|h| tail_error(network, i, h), tolerance);
            if !h.is_finite() {
                return Err(Error::HorizonTooShort { tail: tail_error(network, i, 1e12), tolerance });
            }
            horizon = horizon.max(h);
        }
        Self::with_horizon(network, nbhd, horizon, tolerance)
    }

    /// Uses a fixed horizon, failing if its tail error exceeds `tolerance`.
    pub fn with_horizon(
        network: &'a Network,
        nbhd: &'a GrowingNeighborhoods,
        horizon: f64,
        tolerance: f64,
    ) -> Result<Self> {
        if network.kind() != ModelKind::Cascade {
            return Err(Error::WrongModelKind { expected: "cascade" });
        }
        let e_tail: Vec<f64> = (0..network.len()).map(|i| tail_error(network, i, horizon)).collect();
        if let Some(&worst) = e_tail.iter().find(|&&e| e > tolerance) {
            return Err(Error::HorizonTooShort { tail: worst, tolerance });
        }
        let acts = network.neurons().iter().map(|n| Activation::plain(n.phi.clone())).collect();
        Ok(Self { network, nbhd, horizon, tolerance, e_tail, acts, budget: DEFAULT_BUDGET })
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn network(&self) -> &Network {
        self.network
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// `γ_i Σ_j |W_{j→i}| Λ_j ∫_H^∞ g_j`.
    pub fn e_tail(&self, i: usize) -> f64 {
        self.e_tail[i]
    }

    /// Level from which the decomposition of neuron `i` has no free jumps left.
    pub fn saturation_level(&self, i: usize) -> usize {
        self.nbhd.of(i).saturation_level().max(self.horizon.ceil() as usize)
    }

    /// Materializes the environment of site `(i, t)`.
    pub fn site(&self, prm: &Prm, i: usize, t: f64) -> CascadeSite<'_> {
        let seq = self.nbhd.of(i);
        let from = t - self.horizon;
        let jumps = seq
            .members
            .iter()
            .enumerate()
            .map(|(p, &j)| {
                let w = seq.weights[p];
                let leak = self.network.neuron(j).leak();
                prm.sites_in(j, from, t, JumpFilter::All)
                    .into_iter()
                    .map(|s| EnvJump {
                        key: s.key,
                        time: s.time,
                        c: if p == 0 { 0.0 } else { w * leak.eval(t - s.time) },
                    })
                    .collect()
            })
            .collect();
        let top = self.saturation_level(i);
        CascadeSite { ctx: self, seq, neuron: i, time: t, jumps, alpha: (0..=top).map(|_| OnceLock::new()).collect() }
    }
}

fn tail_error(network: &Network, i: usize, h: f64) -> f64 {
    let gamma = network.neuron(i).phi.gamma();
    let s: f64 = network
        .inputs(i)
        .iter()
        .map(|e| {
            let n = network.neuron(e.from);
            e.weight.abs() * n.lambda * n.leak().tail(h)
        })
        .sum();
    gamma * s
}

fn smallest_horizon(err: impl Fn(f64) -> f64, tol: f64) -> f64 {
    if err(0.0) <= tol {
        return 0.0;
    }
    let mut hi = 1.0;
    while err(hi) > tol {
        hi *= 2.0;
        if hi > 1e12 {
            return f64::INFINITY;
        }
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if err(mid) > tol {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// A dominating jump near the site, with its potential contribution `W·g(t - s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvJump {
    pub key: SiteKey,
    pub time: f64,
    pub c: f64,
}

/// The decomposition at one site.
#[derive(Debug)]
pub struct CascadeSite<'c> {
    ctx: &'c CascadeContext<'c>,
    seq: &'c NeighborhoodSequence,
    neuron: usize,
    time: f64,
    /// Jumps in `[t - H, t[` of each neighborhood member, in time order.
    jumps: Vec<Vec<EnvJump>>,
    alpha: Vec<OnceLock<f64>>,
}

/// Which jumps a level fixes and which it leaves free, for one choice of `L`.
struct Split {
    fixed: Vec<EnvJump>,
    pos: f64,
    neg: f64,
}

impl<'c> CascadeSite<'c> {
    pub fn neuron(&self) -> usize {
        self.neuron
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn e_tail(&self) -> f64 {
        self.ctx.e_tail(self.neuron)
    }

    pub fn neighborhood(&self) -> &NeighborhoodSequence {
        self.seq
    }

    /// Jumps in `[t - H, t[` of neighborhood member `p` (`p = 0` is the site's own neuron).
    pub fn member_jumps(&self, p: usize) -> &[EnvJump] {
        &self.jumps[p]
    }

    fn act(&self) -> &Activation {
        &self.ctx.acts[self.neuron]
    }

    /// Start of the time window of level `k`.
    pub fn window_start(&self, k: usize) -> f64 {
        (self.time - k as f64).max(self.time - self.ctx.horizon)
    }

    /// Grid sites inside the level-`k` box, in time order.
    pub fn sites_in_box(&self, k: usize) -> Vec<EnvJump> {
        let ws = self.window_start(k);
        let mut out: Vec<EnvJump> =
            (0..self.seq.size(k)).flat_map(|p| self.jumps[p].iter().copied().filter(|j| j.time >= ws)).collect();
        out.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.key.cmp(&b.key)));
        out
    }

    /// Splits the environment at level `k` given the last spike `last` of the site's neuron.
    fn split(&self, k: usize, last: Option<f64>) -> Split {
        let ws = self.window_start(k);
        let vk = self.seq.size(k);
        let mut split = Split { fixed: Vec::new(), pos: 0.0, neg: 0.0 };
        for p in 1..self.seq.members.len() {
            for j in &self.jumps[p] {
                if last.is_some_and(|l| j.time < l) {
                    continue;
                }
                if p < vk && j.time >= ws {
                    split.fixed.push(*j);
                } else if j.c > 0.0 {
                    split.pos += j.c;
                } else {
                    split.neg += j.c;
                }
            }
        }
        split
    }

    /// The last accepted spike of the site's neuron inside the level-`k` window.
    fn last_spike(&self, k: usize, x: &dyn Fn(SiteKey) -> bool) -> Option<f64> {
        if self.seq.size(k) == 0 {
            return None;
        }
        let ws = self.window_start(k);
        self.jumps[0].iter().rev().take_while(|j| j.time >= ws).find(|j| x(j.key)).map(|j| j.time)
    }

    /// `(r1, r0)` at level `k` given decisions `x` on the grid sites of the level-`k` box.
    pub fn r_values_env(&self, k: usize, x: &dyn Fn(SiteKey) -> bool) -> (f64, f64) {
        let split = self.split(k, self.last_spike(k, x));
        let f: f64 = split.fixed.iter().filter(|j| x(j.key)).map(|j| j.c).sum();
        (self.act().eval(f + split.neg), 1.0 - self.act().eval(f + split.pos))
    }

    fn compute_alpha(&self, k: usize) -> Result<f64> {
        if k >= self.saturation_level() {
            return Ok(1.0);
        }
        let mut cases = vec![None];
        if self.seq.size(k) >= 1 {
            let ws = self.window_start(k);
            cases.extend(self.jumps[0].iter().filter(|j| j.time >= ws).map(|j| Some(j.time)));
        }
        let mut sup: f64 = 0.0;
        for last in cases {
            let split = self.split(k, last);
            let items: Vec<Vec<f64>> = split.fixed.iter().map(|j| vec![0.0, j.c]).collect();
            let s = sup_oscillation(self.act(), 0.0, &items, split.pos, split.neg, self.ctx.budget)
                .map_err(|e| Error::EnumerationBudgetExceeded { level: k, budget: e.0 })?;
            sup = sup.max(s);
        }
        Ok((1.0 - sup).clamp(0.0, 1.0))
    }

    pub fn alpha_mu_env(&self, k_max: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let alpha = (0..=k_max).map(|k| self.alpha(k)).collect::<Result<Vec<_>>>()?;
        let mu = (0..=k_max).map(|k| if k == 0 { alpha[0] } else { alpha[k] - alpha[k - 1] }).collect();
        Ok((alpha, mu))
    }

    pub fn p_k_env(&self, k: usize, x: &dyn Fn(SiteKey) -> bool) -> Result<LevelLaw> {
        let (alpha, _) = self.alpha_mu_env(k)?;
        let env: Vec<(f64, f64)> = (0..=k).map(|m| self.r_values_env(m, x)).collect();
        Ok(match_intervals(&alpha, k, &env))
    }

    /// `φ_i` of the membrane input within the horizon under decisions `x`.
    pub fn p_full(&self, x: &dyn Fn(SiteKey) -> bool) -> f64 {
        let last = self.jumps[0].iter().rev().find(|j| x(j.key)).map(|j| j.time);
        let input: f64 = self.jumps[1..]
            .iter()
            .flatten()
            .filter(|j| last.is_none_or(|l| j.time >= l) && x(j.key))
            .map(|j| j.c)
            .sum();
        self.act().eval(input)
    }

    /// Realized bound on `μ(k)`, `k ≥ 1`:
    /// `γ (Σ_{V(k-1)} |W| Σ_{[t-k, t-k+1[} g + Σ_{∂V(k-1)} |W| Σ_{[t-k, t[} g)`.
    pub fn mu_bound(&self, k: usize) -> f64 {
        let t = self.time;
        let (a, b) = (t - k as f64, t - k as f64 + 1.0);
        let inner = self.seq.size(k - 1);
        let outer = self.seq.size(k);
        let mut s = 0.0;
        for p in 1..outer {
            for j in &self.jumps[p] {
                let in_strip = j.time >= a && j.time < b;
                let in_window = j.time >= a;
                if (p < inner && in_strip) || (p >= inner && in_window) {
                    s += j.c.abs();
                }
            }
        }
        self.act().lipschitz() * s
    }

    /// Realized bound on `1 - α(k)`:
    /// `γ (Σ_{V(k)} |W| Σ_{s < t-k} g + Σ_{∉V(k)} |W| Σ g)` over jumps within the horizon.
    pub fn residual_bound(&self, k: usize) -> f64 {
        let cut = self.time - k as f64;
        let vk = self.seq.size(k);
        let mut s = 0.0;
        for p in 1..self.seq.members.len() {
            for j in &self.jumps[p] {
                if p >= vk || j.time < cut {
                    s += j.c.abs();
                }
            }
        }
        self.act().lipschitz() * s
    }
}

impl LevelWeights for CascadeSite<'_> {
    fn alpha(&self, k: usize) -> Result<f64> {
        let k = k.min(self.alpha.len() - 1);
        if let Some(&a) = self.alpha[k].get() {
            return Ok(a);
        }
        let a = self.compute_alpha(k)?;
        Ok(*self.alpha[k].get_or_init(|| a))
    }

    fn saturation_level(&self) -> usize {
        self.alpha.len() - 1
    }
}
