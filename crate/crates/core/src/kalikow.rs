//! Pieces shared by both Kalikow-type decompositions.
//!
//! For a site and a level `k`, the configuration is split into a part fixed
//! by the neighborhood and a free part. The free part can move the membrane
//! input anywhere between `s + neg` and `s + pos`, where `s` is the fixed
//! input. The minimal probabilities of spiking and not spiking are then
//! `r1 = f(s + neg)` and `r0 = 1 - f(s + pos)`, and the cumulative weight
//! `α(k)` is the infimum of `r1 + r0` over all fixed configurations, i.e.
//! `1 - sup_s [f(s + pos) - f(s + neg)]`.

use crate::model::RateFunction;

/// Default node budget for the exact supremum search.
pub const DEFAULT_BUDGET: u64 = 1_000_000;

/// Slack below which a branch cannot improve the running supremum.
const PRUNE_SLACK: f64 = 1e-15;

/// An affine transform `(φ(x) - shift)·scale` of a rate function.
///
/// The plain form decomposes `φ` itself. The residual form decomposes
/// `(φ - d)/(1 - d)`, the acceptance law of non-spontaneous jumps.
#[derive(Debug, Clone, PartialEq)]
pub struct Activation {
    phi: RateFunction,
    shift: f64,
    scale: f64,
}

impl Activation {
    pub fn plain(phi: RateFunction) -> Self {
        Self { phi, shift: 0.0, scale: 1.0 }
    }

    pub fn residual(phi: RateFunction, d: f64) -> Self {
        let scale = if d < 1.0 { 1.0 / (1.0 - d) } else { 0.0 };
        Self { phi, shift: d, scale }
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.phi.eval(x) - self.shift) * self.scale
    }

    pub fn lipschitz(&self) -> f64 {
        self.phi.gamma() * self.scale
    }

    pub fn phi(&self) -> &RateFunction {
        &self.phi
    }

    /// `sup_{s ∈ [lo, hi]} f(s + pos) - f(s + neg)`, or an upper bound of it for smooth shapes.
    fn oscillation_bound(&self, lo: f64, hi: f64, pos: f64, neg: f64) -> f64 {
        let osc = |s: f64| self.eval(s + pos) - self.eval(s + neg);
        match self.phi.breakpoints() {
            Some(knots) => {
                let mut best = osc(lo).max(osc(hi));
                for b in knots {
                    for s in [b - pos, b - neg] {
                        if s > lo && s < hi {
                            best = best.max(osc(s));
                        }
                    }
                }
                best
            }
            None => self.eval(hi + pos) - self.eval(lo + neg),
        }
    }
}

/// The search visited more nodes than allowed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BudgetExceeded(pub u64);

/// `sup f(s + pos) - f(s + neg)` over every achievable `s = offset + Σ_n c_n`,
/// where each `c_n` is drawn from `items[n]`.
///
/// Exact branch and bound: a subtree is dropped only when the supremum of the
/// oscillation over the continuous hull of its sums cannot beat the best leaf.
pub fn sup_oscillation(
    act: &Activation,
    offset: f64,
    items: &[Vec<f64>],
    pos: f64,
    neg: f64,
    budget: u64,
) -> Result<f64, BudgetExceeded> {
    let mut items: Vec<Vec<f64>> = items.iter().filter(|c| !c.is_empty()).cloned().collect();
    // fold single-choice items into the offset
    let mut offset = offset;
    items.retain(|c| {
        if c.iter().all(|&v| v == c[0]) {
            offset += c[0];
            false
        } else {
            true
        }
    });
    let spread = |c: &Vec<f64>| {
        c.iter().copied().fold(f64::NEG_INFINITY, f64::max) - c.iter().copied().fold(f64::INFINITY, f64::min)
    };
    items.sort_by(|a, b| spread(b).total_cmp(&spread(a)));
    for c in &mut items {
        c.sort_by(f64::total_cmp);
        c.dedup();
    }
    let n = items.len();
    let mut suffix_min = vec![0.0; n + 1];
    let mut suffix_max = vec![0.0; n + 1];
    for d in (0..n).rev() {
        suffix_min[d] = suffix_min[d + 1] + items[d][0];
        suffix_max[d] = suffix_max[d + 1] + items[d][items[d].len() - 1];
    }
    let osc = |s: f64| act.eval(s + pos) - act.eval(s + neg);

    struct Search<'a, F: Fn(f64) -> f64> {
        act: &'a Activation,
        items: &'a [Vec<f64>],
        suffix_min: &'a [f64],
        suffix_max: &'a [f64],
        pos: f64,
        neg: f64,
        osc: F,
        best: f64,
        nodes: u64,
        budget: u64,
    }

    impl<F: Fn(f64) -> f64> Search<'_, F> {
        fn visit(&mut self, depth: usize, cur: f64) -> Result<(), BudgetExceeded> {
            self.nodes += 1;
            if self.nodes > self.budget {
                return Err(BudgetExceeded(self.budget));
            }
            if depth == self.items.len() {
                self.best = self.best.max((self.osc)(cur));
                return Ok(());
            }
            let lo = cur + self.suffix_min[depth];
            let hi = cur + self.suffix_max[depth];
            if self.act.oscillation_bound(lo, hi, self.pos, self.neg) <= self.best + PRUNE_SLACK {
                return Ok(());
            }
            for idx in 0..self.items[depth].len() {
                let c = self.items[depth][idx];
                self.visit(depth + 1, cur + c)?;
            }
            Ok(())
        }
    }

    let mut search = Search {
        act,
        items: &items,
        suffix_min: &suffix_min,
        suffix_max: &suffix_max,
        pos,
        neg,
        osc,
        best: osc(offset + suffix_min[0]),
        nodes: 0,
        budget,
    };
    search.visit(0, offset)?;
    Ok(search.best)
}

/// Conditional law `p^[k](·|x)` of one level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelLaw {
    /// Probability of accepting.
    pub p1: f64,
    /// The level has zero weight; `p1` is an arbitrary placeholder.
    pub degenerate: bool,
}

impl LevelLaw {
    pub fn p(&self, a: u8) -> f64 {
        if a == 1 {
            self.p1
        } else {
            1.0 - self.p1
        }
    }
}

/// Interval matching of the environment masses against the deterministic ones.
///
/// `alpha[0..=k]` are the cumulative weights and `env[m] = (r1, r0)` the
/// minimal probabilities at level `m` for the current configuration, for
/// `m = 0..=k`. The environment cumulative `E(m) = r1 + r0` is non-decreasing
/// and starts at `E(0) = α(0)`. Level `k` owns the interval `]α(k-1), α(k)]`;
/// every environment piece `]E(m-1), E(m)]` overlapping it contributes its
/// normalized increments `r^[m] - r^[m-1]` in proportion to the overlap.
pub fn match_intervals(alpha: &[f64], k: usize, env: &[(f64, f64)]) -> LevelLaw {
    let lo = if k == 0 { 0.0 } else { alpha[k - 1] };
    let hi = alpha[k];
    if !(hi > lo) {
        return LevelLaw { p1: 0.5, degenerate: true };
    }
    let mut p1 = 0.0;
    let mut total = 0.0;
    let mut prev_e = 0.0;
    let mut prev_r = (0.0, 0.0);
    for &(r1, r0) in env.iter().take(k + 1) {
        let e = (r1 + r0).max(prev_e);
        let width = e - prev_e;
        let overlap = (e.min(hi) - prev_e.max(lo)).max(0.0);
        if overlap > 0.0 && width > 0.0 {
            let d1 = r1 - prev_r.0;
            let d0 = r0 - prev_r.1;
            // split the piece proportionally between its two outcomes
            let w = overlap / width;
            p1 += w * d1;
            total += w * (d1 + d0);
        }
        prev_e = e;
        prev_r = (r1, r0);
    }
    if !(total > 0.0) {
        return LevelLaw { p1: 0.5, degenerate: true };
    }
    LevelLaw { p1: p1 / total, degenerate: false }
}

/// Lazily computed cumulative weights `α(0) ≤ α(1) ≤ … ≤ α(K_sat) = 1`.
pub trait LevelWeights {
    fn alpha(&self, k: usize) -> crate::Result<f64>;
    fn saturation_level(&self) -> usize;

    fn mu(&self, k: usize) -> crate::Result<f64> {
        let a = self.alpha(k)?;
        Ok(if k == 0 { a } else { a - self.alpha(k - 1)? })
    }
}

/// Inverse-CDF draw: the smallest `k` with `α(k) ≥ u`.
pub fn sample_level<W: LevelWeights + ?Sized>(weights: &W, u: f64) -> crate::Result<usize> {
    let top = weights.saturation_level();
    for k in 0..top {
        if weights.alpha(k)? >= u {
            return Ok(k);
        }
    }
    Ok(top)
}
