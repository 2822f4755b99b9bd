//! Sufficient conditions for existence of the stationary process.
//!
//! Each checker returns a [`ConditionReport`] holding a lower and an upper
//! bound on the left-hand side of the condition, so the verdict can be
//! three-valued: a truncated series whose tail bound straddles `1/γ` is
//! reported as [`Verdict::Inconclusive`].

use serde::{Deserialize, Serialize};

use crate::model::{GrowingNeighborhoods, ModelKind, Network};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Satisfied,
    Violated,
    Inconclusive,
}

impl Verdict {
    /// Compares a bracketed quantity `[lower, upper]` against a strict threshold.
    pub fn from_bounds(lower: f64, upper: f64, threshold: f64) -> Self {
        if upper < threshold {
            Verdict::Satisfied
        } else if lower >= threshold {
            Verdict::Violated
        } else {
            Verdict::Inconclusive
        }
    }

    /// Process exit code used by the command-line tool.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Satisfied => 0,
            Verdict::Violated => 2,
            Verdict::Inconclusive => 3,
        }
    }
}

/// Left-hand side of a condition for one neuron.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuronTerm {
    pub id: u32,
    /// Partial sum up to the truncation level; a lower bound.
    pub partial: f64,
    /// Bound on the omitted terms (`+∞` when the series diverges).
    pub tail_bound: f64,
    /// Number of summed levels.
    pub truncated_at: usize,
    /// The full series is known to be infinite.
    pub divergent: bool,
}

impl NeuronTerm {
    pub fn lower(&self) -> f64 {
        if self.divergent {
            f64::INFINITY
        } else {
            self.partial
        }
    }

    pub fn upper(&self) -> f64 {
        self.partial + self.tail_bound
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition: String,
    pub model_kind: ModelKind,
    pub gamma: f64,
    /// `1/γ`.
    pub threshold: f64,
    pub k_max: usize,
    /// `sup_i` of the lower bounds: partial sums, or `+∞` for a divergent series.
    pub lhs: f64,
    /// `sup_i` of partial sum plus tail bound.
    pub lhs_upper: f64,
    pub verdict: Verdict,
    /// Neuron with the largest upper bound.
    pub worst_neuron: Option<u32>,
    pub neurons: Vec<NeuronTerm>,
}

impl ConditionReport {
    fn assemble(condition: &str, network: &Network, gamma: f64, k_max: usize, neurons: Vec<NeuronTerm>) -> Self {
        let threshold = 1.0 / gamma;
        let lhs = neurons.iter().map(NeuronTerm::lower).fold(0.0, f64::max);
        let lhs_upper = neurons.iter().map(NeuronTerm::upper).fold(0.0, f64::max);
        let worst_neuron =
            neurons.iter().max_by(|a, b| a.upper().total_cmp(&b.upper()).then(b.id.cmp(&a.id))).map(|n| n.id);
        ConditionReport {
            condition: condition.into(),
            model_kind: network.kind(),
            gamma,
            threshold,
            k_max,
            lhs,
            lhs_upper,
            verdict: Verdict::from_bounds(lhs, lhs_upper, threshold),
            worst_neuron,
            neurons,
        }
    }

    /// Plain-text table, one row per neuron.
    pub fn table(&self) -> String {
        let mut out =
            format!("{} condition: gamma = {}, threshold 1/gamma = {}\n", self.condition, self.gamma, self.threshold);
        out.push_str(&format!("{:>8}  {:>14}  {:>14}  {:>6}\n", "neuron", "partial", "tail bound", "levels"));
        for n in &self.neurons {
            out.push_str(&format!(
                "{:>8}  {:>14.6e}  {:>14.6e}  {:>6}\n",
                n.id, n.partial, n.tail_bound, n.truncated_at
            ));
        }
        out.push_str(&format!("lhs in [{:.6e}, {:.6e}] -> {:?}\n", self.lhs, self.lhs_upper, self.verdict));
        out
    }
}

/// Uniform Lipschitz constant `γ = max_i γ_i` of the network's rate functions.
pub fn network_gamma(network: &Network) -> f64 {
    network.neurons().iter().map(|n| n.phi.gamma()).fold(0.0, f64::max)
}

fn resolve_gamma(network: &Network, gamma: Option<f64>) -> Result<f64> {
    let g = gamma.unwrap_or_else(|| network_gamma(network));
    if !(g >= 0.0) || !g.is_finite() {
        return Err(Error::InvalidParam(format!("gamma must be finite and non-negative, got {g}")));
    }
    Ok(g)
}

/// Saturation-model condition, truncated at level `k_max`.
///
/// Level `k` contributes `A_k·B_k` with `A_k = Σ_{j∈V_i(k)} (Λ_j−δ_j)/δ_i`
/// and `B_k = Σ_{j∈∂V_i(k−1)} |W_{j→i}|K_{j→i}`. Since `A_k` is bounded by
/// its value on the full neighborhood, the omitted levels contribute at most
/// `A_full · Σ_{j∉V_i(k_max)} |W|K`, which vanishes once `V_i` has saturated.
pub fn check_saturation(
    network: &Network,
    nbhd: &GrowingNeighborhoods,
    k_max: usize,
    gamma: Option<f64>,
) -> Result<ConditionReport> {
    if network.kind() != ModelKind::Saturation {
        return Err(Error::WrongModelKind { expected: "saturation" });
    }
    let gamma = resolve_gamma(network, gamma)?;
    let mut terms = Vec::with_capacity(network.len());
    for i in 0..network.len() {
        let spec = network.neuron(i);
        if spec.delta <= 0.0 {
            return Err(Error::ZeroDelta { id: spec.id });
        }
        let seq = nbhd.of(i);
        let excess = |p: usize| {
            let n = network.neuron(seq.members[p]);
            (n.lambda - n.delta) / spec.delta
        };
        let mass = |p: usize| seq.weights[p].abs() * seq.thresholds[p] as f64;
        let levels = k_max.min(seq.saturation_level());
        let mut partial = 0.0;
        for k in 1..=levels {
            let a: f64 = (0..seq.size(k)).map(excess).sum();
            let b: f64 = seq.boundary(k - 1).map(mass).sum();
            partial += a * b;
        }
        let a_full: f64 = (0..seq.members.len()).map(excess).sum();
        let outside: f64 = (seq.size(k_max)..seq.members.len()).map(mass).sum();
        terms.push(NeuronTerm {
            id: spec.id,
            partial,
            // empty sums are -0.0
            tail_bound: a_full * outside + 0.0,
            truncated_at: levels,
            divergent: false,
        });
    }
    Ok(ConditionReport::assemble("saturation", network, gamma, k_max, terms))
}

/// Cascade-model condition, truncated at level `k_max`.
///
/// Terms for `k ≤ k_max` are summed exactly. For the tail, `S = Σ Λ_j` is
/// taken over the full neighborhood, and `k ≤ s + 1` on `[k−1, k]` turns the
/// sum over levels into the leak moments `∫_m^∞ s·g` and `∫_m^∞ g`. Since
/// also `k ≥ s` there, a nonzero weight on a leak with infinite first moment
/// makes the series diverge.
pub fn check_cascade(
    network: &Network,
    nbhd: &GrowingNeighborhoods,
    k_max: usize,
    gamma: Option<f64>,
) -> Result<ConditionReport> {
    if network.kind() != ModelKind::Cascade {
        return Err(Error::WrongModelKind { expected: "cascade" });
    }
    let gamma = resolve_gamma(network, gamma)?;
    let mut terms = Vec::with_capacity(network.len());
    for i in 0..network.len() {
        let spec = network.neuron(i);
        let seq = nbhd.of(i);
        let lam = |p: usize| network.neuron(seq.members[p]).lambda;
        let coef = |p: usize| seq.weights[p].abs() * lam(p);
        let mut partial = 0.0;
        for k in 1..=k_max {
            let s: f64 = (0..seq.size(k)).map(lam).sum();
            let inner: f64 = (0..seq.size(k - 1))
                .map(|p| coef(p) * network.neuron(seq.members[p]).leak().integral((k - 1) as f64, k as f64))
                .sum::<f64>()
                + seq
                    .boundary(k - 1)
                    .map(|p| coef(p) * network.neuron(seq.members[p]).leak().integral(0.0, k as f64))
                    .sum::<f64>();
            partial += (k as f64 * s + 1.0) * inner;
        }
        let s_full: f64 = (0..seq.members.len()).map(lam).sum();
        // ∫_m^∞ ((s+1)S + 1) g(s) ds, or None if the first moment diverges
        let level_tail = |leak: &crate::model::LeakFunction, m: f64| {
            leak.first_moment_tail(m).map(|m1| {
                let t = leak.tail(m);
                s_full * (m1 + t) + t
            })
        };
        let mut tail = 0.0;
        let mut divergent = false;
        for p in 0..seq.members.len() {
            let c = coef(p);
            if c == 0.0 {
                continue;
            }
            let leak = network.neuron(seq.members[p]).leak();
            let e = seq.entry_level(p) + 1;
            let extra = if e <= k_max {
                level_tail(leak, k_max as f64)
            } else {
                level_tail(leak, e as f64).map(|r| (e as f64 * s_full + 1.0) * leak.integral(0.0, e as f64) + r)
            };
            match extra {
                Some(v) => tail += c * v,
                None => {
                    tail = f64::INFINITY;
                    divergent = true;
                    break;
                }
            }
        }
        terms.push(NeuronTerm { id: spec.id, partial, tail_bound: tail, truncated_at: k_max, divergent });
    }
    Ok(ConditionReport::assemble("cascade", network, gamma, k_max, terms))
}

/// Runs the checker matching the network's model kind.
pub fn check(
    network: &Network,
    nbhd: &GrowingNeighborhoods,
    k_max: usize,
    gamma: Option<f64>,
) -> Result<ConditionReport> {
    match network.kind() {
        ModelKind::Saturation => check_saturation(network, nbhd, k_max, gamma),
        ModelKind::Cascade => check_cascade(network, nbhd, k_max, gamma),
    }
}

/// The two lattice examples of the cascade model, both with leak `e^{-a·s}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Example {
    /// Two presynaptic neighbors per neuron, weight `W`.
    NearestPair,
    /// Presynaptic weights `W/|j₁−i₁|^β` over the whole previous layer.
    PowerLaw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExampleParams {
    pub lambda: f64,
    pub a: f64,
    pub w: f64,
    pub gamma: f64,
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleReport {
    pub example: Example,
    /// Bracket on the left-hand side; `None` when the series diverges.
    pub lhs_lower: Option<f64>,
    pub lhs_upper: Option<f64>,
    pub rhs: f64,
    /// Largest weight for which the condition holds, when the series converges.
    pub w_star: Option<f64>,
    pub divergent: bool,
    pub verdict: Verdict,
}

/// Number of exactly summed terms in the power-law example.
pub const POWER_LAW_TERMS: usize = 2_000_000;

pub fn example_closed_forms(example: Example, params: &ExampleParams) -> Result<ExampleReport> {
    let ExampleParams { lambda, a, w, gamma, beta } = *params;
    for (name, v) in [("lambda", lambda), ("a", a), ("w", w), ("gamma", gamma)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidParam(format!("{name} must be positive, got {v}")));
        }
    }
    match example {
        Example::NearestPair => {
            let e1 = (-a).exp();
            let e2 = (-2.0 * a).exp();
            let lhs = (6.0 * lambda + 1.0) * (1.0 - e2) + e2 * (9.0 * lambda + 1.0 + 3.0 * lambda * e1 / (1.0 - e1));
            let rhs = a / (2.0 * lambda * w * gamma);
            Ok(ExampleReport {
                example,
                lhs_lower: Some(lhs),
                lhs_upper: Some(lhs),
                rhs,
                w_star: Some(a / (2.0 * lambda * gamma * lhs)),
                divergent: false,
                verdict: Verdict::from_bounds(lhs, lhs, rhs),
            })
        }
        Example::PowerLaw => {
            let beta = beta.ok_or_else(|| Error::InvalidParam("the power-law example needs beta".into()))?;
            if !(beta > 0.0) || !beta.is_finite() {
                return Err(Error::InvalidParam(format!("beta must be positive, got {beta}")));
            }
            let rhs = a / (2.0 * w * gamma);
            match power_law_series(lambda, a, beta, POWER_LAW_TERMS) {
                None => Ok(ExampleReport {
                    example,
                    lhs_lower: None,
                    lhs_upper: None,
                    rhs,
                    w_star: None,
                    divergent: true,
                    verdict: Verdict::Violated,
                }),
                Some((lo, hi)) => Ok(ExampleReport {
                    example,
                    lhs_lower: Some(lo),
                    lhs_upper: Some(hi),
                    rhs,
                    w_star: Some(a / (2.0 * gamma * hi)),
                    divergent: false,
                    verdict: Verdict::from_bounds(lo, hi, rhs),
                }),
            }
        }
    }
}

/// Bracket on `Σ_{k≥2} (Λk(2k+1)+1)(Λ(e^a−1)e^{−ak}·H_{k−1}(β) + Λk^{−β}(1−e^{−ak}))`.
///
/// The first `m` terms are summed; the rest is bracketed with integral
/// comparisons. `None` when `β ≤ 3`, where the series diverges.
fn power_law_series(lambda: f64, a: f64, beta: f64, m: usize) -> Option<(f64, f64)> {
    if beta <= 3.0 {
        return None;
    }
    let ea = a.exp_m1();
    let poly = |k: f64| lambda * k * (2.0 * k + 1.0) + 1.0;
    let mut harmonic = 1.0;
    let mut sum = 0.0;
    for k in 2..=m {
        let kf = k as f64;
        let decay = (-a * kf).exp();
        sum += poly(kf) * (lambda * ea * decay * harmonic + lambda * kf.powf(-beta) * (-(-a * kf).exp_m1()));
        harmonic += kf.powf(-beta);
    }
    let mf = m as f64;
    let m1 = mf + 1.0;
    let lower = lambda
        * (-(-a * m1).exp_m1())
        * (2.0 * lambda * m1.powf(3.0 - beta) / (beta - 3.0) + lambda * m1.powf(2.0 - beta) / (beta - 2.0));
    let mut upper = lambda
        * (2.0 * lambda * mf.powf(3.0 - beta) / (beta - 3.0)
            + lambda * mf.powf(2.0 - beta) / (beta - 2.0)
            + mf.powf(1.0 - beta) / (beta - 1.0));
    // exponential part, with H_{k−1}(β) ≤ ζ(β) ≤ 1 + 1/(β−1)
    let zeta = 1.0 + 1.0 / (beta - 1.0);
    let term = |k: f64| poly(k) * lambda * ea * zeta * (-a * k).exp();
    let mut k = m1;
    loop {
        let t = term(k);
        let q = term(k + 1.0) / t;
        // consecutive ratios decrease once the exponential dominates
        if q < 1.0 && term(k + 2.0) / term(k + 1.0) <= q || t == 0.0 {
            upper += if t == 0.0 { 0.0 } else { t / (1.0 - q) };
            break;
        }
        upper += t;
        k += 1.0;
    }
    Some((sum + lower, sum + upper))
}

/// Scalar quantities from the edge-process ergodicity comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiggettReport {
    /// `2(sup_i Λ_i γ Σ_k |W_{k→i}|K_{k→i} + sup_i Λ_i |𝒱_{i→·}|)`.
    pub m: f64,
    /// `2 sup_i Λ_i(γ Σ_k |W_{k→i}|K_{k→i} + |𝒱_{i→·}|)`, never larger than `m`.
    pub m_joint: f64,
    /// Infimum over single-edge perturbations; `+∞` without edges.
    pub epsilon: f64,
    pub gamma: f64,
}

/// `M` and `ε` for a saturation network. `ε` is scanned over edge values `0..=K+2`.
pub fn liggett_bounds(network: &Network, gamma: Option<f64>) -> Result<LiggettReport> {
    if network.kind() != ModelKind::Saturation {
        return Err(Error::WrongModelKind { expected: "saturation" });
    }
    let gamma = resolve_gamma(network, gamma)?;
    let mut sup_in: f64 = 0.0;
    let mut sup_out: f64 = 0.0;
    let mut m_joint: f64 = 0.0;
    for i in 0..network.len() {
        let lam = network.neuron(i).lambda;
        let inward = lam * gamma * network.input_mass(i);
        let outward = lam * network.outputs(i).len() as f64;
        sup_in = sup_in.max(inward);
        sup_out = sup_out.max(outward);
        m_joint = m_joint.max(inward + outward);
    }
    let (m, m_joint) = if network.edge_count() == 0 { (0.0, 0.0) } else { (2.0 * (sup_in + sup_out), 2.0 * m_joint) };

    let mut epsilon = f64::INFINITY;
    for to in 0..network.len() {
        for (slot, e) in network.inputs(to).iter().enumerate() {
            for v1 in 0..=e.threshold + 2 {
                for v2 in 0..=e.threshold + 2 {
                    let c = flip_rate(network, e.from, to, slot, v1, v2) + flip_rate(network, e.from, to, slot, v2, v1);
                    epsilon = epsilon.min(c);
                }
            }
        }
    }
    Ok(LiggettReport { m, m_joint, epsilon, gamma })
}

/// Smallest total rate at which edge `from → to` (in state `v`) jumps to `target`,
/// over all values of the other edges.
fn flip_rate(network: &Network, from: usize, to: usize, slot: usize, v: u32, target: u32) -> f64 {
    let mut rate = 0.0;
    // a spike of the postsynaptic neuron resets the edge
    if target == 0 {
        let e = network.inputs(to)[slot];
        let (lo, _) = network.reachable_inputs(to);
        let own_min = (e.weight * e.threshold as f64).min(0.0);
        let x = lo - own_min + e.weight * v.min(e.threshold) as f64;
        rate += network.neuron(to).lambda * network.phi_eval(to, x);
    }
    // a spike of the presynaptic neuron increments it
    if target == v + 1 {
        let (lo, _) = network.reachable_inputs(from);
        rate += network.neuron(from).lambda * network.phi_eval(from, lo);
    }
    rate
}
