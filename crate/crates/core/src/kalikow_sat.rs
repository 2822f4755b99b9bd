//! Kalikow-type decomposition for the saturation model.
//!
//! The state relevant to neuron `i` is the vector of capped edge counts
//! `x(j→i) = min(Z^j([L_t^i, t[), K_{j→i})`. Level `k` of the decomposition
//! only looks at the counts of neurons in `V_i(k)`.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::kalikow::{match_intervals, sup_oscillation, Activation, LevelLaw, LevelWeights, DEFAULT_BUDGET};
use crate::model::{GrowingNeighborhoods, ModelKind, NeighborhoodSequence, Network};

/// How non-spontaneous jumps obtain valid acceptance probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualMode {
    /// Decompose the residual law `(φ - d)/(1 - d)` directly.
    #[default]
    Strict,
    /// Decompose `φ` and clamp each residual level law `(p^[k] - d)/(1 - d)` to `[0, 1]`.
    Clamp,
}

impl ResidualMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ResidualMode::Strict => "strict",
            ResidualMode::Clamp => "clamp",
        }
    }
}

#[derive(Debug)]
pub struct SatDecomposition {
    neuron: usize,
    seq: NeighborhoodSequence,
    act: Activation,
    /// `(Pos_k, Neg_k)` for `k = 0..=K_sat`.
    free: Vec<(f64, f64)>,
    alpha: Vec<OnceLock<f64>>,
    budget: u64,
}

impl SatDecomposition {
    /// Decomposes `φ_i` itself.
    pub fn new(network: &Network, nbhd: &GrowingNeighborhoods, i: usize) -> Result<Self> {
        Self::with_activation(network, nbhd, i, Activation::plain(network.neuron(i).phi.clone()))
    }

    /// Decomposes the law the forward sweep samples from under `mode`.
    pub fn for_mode(network: &Network, nbhd: &GrowingNeighborhoods, i: usize, mode: ResidualMode) -> Result<Self> {
        let n = network.neuron(i);
        let act = match mode {
            ResidualMode::Strict => Activation::residual(n.phi.clone(), n.d()),
            ResidualMode::Clamp => Activation::plain(n.phi.clone()),
        };
        Self::with_activation(network, nbhd, i, act)
    }

    pub fn with_activation(network: &Network, nbhd: &GrowingNeighborhoods, i: usize, act: Activation) -> Result<Self> {
        if network.kind() != ModelKind::Saturation {
            return Err(Error::WrongModelKind { expected: "saturation" });
        }
        if i >= network.len() {
            return Err(Error::UnknownNeuron(i));
        }
        let seq = nbhd.of(i).clone();
        let top = seq.saturation_level();
        let free = (0..=top)
            .map(|k| {
                let mut pos = 0.0;
                let mut neg = 0.0;
                for p in seq.size(k)..seq.members.len() {
                    let v = seq.weights[p] * seq.thresholds[p] as f64;
                    if v > 0.0 {
                        pos += v;
                    } else {
                        neg += v;
                    }
                }
                (pos, neg)
            })
            .collect();
        Ok(Self {
            neuron: i,
            seq,
            act,
            free,
            alpha: (0..=top).map(|_| OnceLock::new()).collect(),
            budget: DEFAULT_BUDGET,
        })
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn neuron(&self) -> usize {
        self.neuron
    }

    pub fn neighborhood(&self) -> &NeighborhoodSequence {
        &self.seq
    }

    pub fn activation(&self) -> &Activation {
        &self.act
    }

    fn free(&self, k: usize) -> (f64, f64) {
        self.free[k.min(self.free.len() - 1)]
    }

    /// `(r1, r0)` at level `k` for edge counts `zeta`, indexed like the neighborhood members.
    pub fn r_values(&self, k: usize, zeta: &[u32]) -> Result<(f64, f64)> {
        let mut s = 0.0;
        for p in 1..self.seq.size(k) {
            let z = zeta.get(p).copied().unwrap_or(0);
            if z > self.seq.thresholds[p] {
                return Err(Error::OutOfRange {
                    from: self.seq.members[p],
                    count: z,
                    threshold: self.seq.thresholds[p],
                });
            }
            s += self.seq.weights[p] * z as f64;
        }
        let (pos, neg) = self.free(k);
        Ok((self.act.eval(s + neg), 1.0 - self.act.eval(s + pos)))
    }

    fn compute_alpha(&self, k: usize) -> Result<f64> {
        if k >= self.seq.saturation_level() {
            return Ok(1.0);
        }
        let items: Vec<Vec<f64>> = (1..self.seq.size(k))
            .map(|p| (0..=self.seq.thresholds[p]).map(|z| self.seq.weights[p] * z as f64).collect())
            .collect();
        let (pos, neg) = self.free(k);
        let sup = sup_oscillation(&self.act, 0.0, &items, pos, neg, self.budget)
            .map_err(|e| Error::EnumerationBudgetExceeded { level: k, budget: e.0 })?;
        Ok((1.0 - sup).clamp(0.0, 1.0))
    }

    /// Cumulative weights and weights up to `k_max`.
    pub fn alpha_mu(&self, k_max: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let alpha = (0..=k_max).map(|k| self.alpha(k)).collect::<Result<Vec<_>>>()?;
        let mu = (0..=k_max).map(|k| if k == 0 { alpha[0] } else { alpha[k] - alpha[k - 1] }).collect();
        Ok((alpha, mu))
    }

    /// Level law `p^[k](·|x)` for capped edge counts `counts` (indexed like the members).
    pub fn p_k(&self, k: usize, counts: &[u32]) -> Result<LevelLaw> {
        let (alpha, _) = self.alpha_mu(k)?;
        let env = (0..=k).map(|m| self.r_values(m, counts)).collect::<Result<Vec<_>>>()?;
        Ok(match_intervals(&alpha, k, &env))
    }

    /// Exact conditional probability `f(Σ_j W_j x_j)` of spiking.
    pub fn p_full(&self, counts: &[u32]) -> f64 {
        let s: f64 = (1..self.seq.members.len())
            .map(|p| self.seq.weights[p] * counts.get(p).copied().unwrap_or(0).min(self.seq.thresholds[p]) as f64)
            .sum();
        self.act.eval(s)
    }

    /// `|p(1|x) - Σ_{k ≤ k_max} μ(k) p^[k](1|x)| - (1 - α(k_max))`.
    pub fn verify_decomposition(&self, counts: &[u32], k_max: usize) -> Result<f64> {
        let (alpha, mu) = self.alpha_mu(k_max)?;
        let mut mix = 0.0;
        for (k, &m) in mu.iter().enumerate() {
            if m > 0.0 {
                mix += m * self.p_k(k, counts)?.p1;
            }
        }
        Ok((self.p_full(counts) - mix).abs() - (1.0 - alpha[k_max]))
    }

    /// `γ_f · Σ_{j ∈ ∂V(k-1)} |W|K`, the bound on `μ(k)` for `k ≥ 1`.
    pub fn mu_bound(&self, k: usize) -> f64 {
        let r = self.seq.boundary(k - 1);
        let mass: f64 = r.map(|p| self.seq.weights[p].abs() * self.seq.thresholds[p] as f64).sum();
        self.act.lipschitz() * mass
    }
}

impl LevelWeights for SatDecomposition {
    fn alpha(&self, k: usize) -> Result<f64> {
        let k = k.min(self.alpha.len() - 1);
        if let Some(&a) = self.alpha[k].get() {
            return Ok(a);
        }
        let a = self.compute_alpha(k)?;
        Ok(*self.alpha[k].get_or_init(|| a))
    }

    fn saturation_level(&self) -> usize {
        self.seq.saturation_level()
    }
}

/// Decompositions for every neuron of a saturation network.
pub fn decompose_all(
    network: &Network,
    nbhd: &GrowingNeighborhoods,
    mode: ResidualMode,
) -> Result<Vec<SatDecomposition>> {
    (0..network.len()).map(|i| SatDecomposition::for_mode(network, nbhd, i, mode)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{e1, saturation_net};
    use crate::model::NeighborhoodPolicy;
    use proptest::prelude::*;

    fn e1_decomp() -> SatDecomposition {
        let net = e1(1.0, 2);
        let nb = net.neighborhoods(NeighborhoodPolicy::Influence);
        SatDecomposition::new(&net, &nb, 0).unwrap()
    }

    #[test]
    fn e1_r_values() {
        let d = e1_decomp();
        let (r1, r0) = d.r_values(0, &[]).unwrap();
        assert!((r1 - 0.2).abs() < 1e-15 && (r0 - 0.6).abs() < 1e-15);
        let (r1, r0) = d.r_values(2, &[0, 2]).unwrap();
        assert!((r1 - 0.4).abs() < 1e-15 && (r0 - 0.6).abs() < 1e-15);
        assert!(matches!(d.r_values(2, &[0, 3]), Err(Error::OutOfRange { count: 3, threshold: 2, .. })));
    }

    #[test]
    fn e1_weights() {
        let d = e1_decomp();
        let (alpha, mu) = d.alpha_mu(2).unwrap();
        for (a, b) in alpha.iter().zip([0.8, 0.8, 1.0]) {
            assert!((a - b).abs() < 1e-12, "{alpha:?}");
        }
        for (a, b) in mu.iter().zip([0.8, 0.0, 0.2]) {
            assert!((a - b).abs() < 1e-12, "{mu:?}");
        }
        // the weight bound is tight here
        assert!((d.mu_bound(2) - 0.2).abs() < 1e-15);
        assert!(mu[2] <= d.mu_bound(2) + 1e-12);
    }

    #[test]
    fn e1_level_laws() {
        let d = e1_decomp();
        assert!((d.p_k(0, &[0, 2]).unwrap().p1 - 0.25).abs() < 1e-12);
        assert!(d.p_k(1, &[0, 2]).unwrap().degenerate);
        assert!((d.p_k(2, &[0, 2]).unwrap().p1 - 1.0).abs() < 1e-12);
        assert!((d.p_k(2, &[0, 1]).unwrap().p1 - 0.5).abs() < 1e-12);
        for x in 0..=2 {
            assert!(d.verify_decomposition(&[0, x], 2).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn isolated_neuron() {
        let net = saturation_net(&[(0, 1.0, 0.1)], &[]);
        let nb = net.neighborhoods(NeighborhoodPolicy::Influence);
        let d = SatDecomposition::new(&net, &nb, 0).unwrap();
        let (r1, r0) = d.r_values(3, &[]).unwrap();
        assert!((r1 + r0 - 1.0).abs() < 1e-15);
        let (_, mu) = d.alpha_mu(3).unwrap();
        assert_eq!(mu, vec![1.0, 0.0, 0.0, 0.0]);
        assert!(d.verify_decomposition(&[], 0).unwrap().abs() <= 1e-15);
    }

    #[test]
    fn strict_mode_decomposes_the_residual() {
        let net = e1(1.0, 2);
        let nb = net.neighborhoods(NeighborhoodPolicy::Influence);
        let d = SatDecomposition::for_mode(&net, &nb, 0, ResidualMode::Strict).unwrap();
        let (alpha, _) = d.alpha_mu(2).unwrap();
        assert!((alpha[0] - 0.75).abs() < 1e-12);
        for x in 0..=2u32 {
            for k in [0, 2] {
                let p = d.p_k(k, &[0, x]).unwrap().p1;
                assert!((-1e-12..=1.0 + 1e-12).contains(&p));
            }
            assert!(d.verify_decomposition(&[0, x], 2).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn rejects_cascade() {
        let net = crate::fixtures::cascade_net(&[(0, 0)], &[], 0.1, 0.5, 1.0);
        let nb = net.neighborhoods(NeighborhoodPolicy::Influence);
        assert!(matches!(SatDecomposition::new(&net, &nb, 0), Err(Error::WrongModelKind { .. })));
    }

    fn random_net(ws: &[(f64, u32)], base: f64, slope: f64) -> Network {
        // keep φ positive on every reachable input
        let lo: f64 = ws.iter().map(|&(w, k)| (w * k as f64).min(0.0)).sum();
        let slope = if lo < 0.0 { slope.min(0.5 * base / -lo) } else { slope };
        let mut c = saturation_net(&[(0, 1.0, 0.01)], &[]).to_config();
        for (n, &(w, k)) in ws.iter().enumerate() {
            let mut nc = c.neurons[0].clone();
            nc.id = n as u32 + 1;
            c.neurons.push(nc);
            c.edges.push(crate::model::EdgeConfig { from: n as u32 + 1, to: 0, w, k: Some(k) });
        }
        for nc in &mut c.neurons {
            nc.phi = crate::model::RateFunction::clipped_affine(base, slope);
            nc.delta = None;
        }
        // δ at half the smallest reachable rate keeps the rate bound valid
        let floor = crate::model::RateFunction::clipped_affine(base, slope).eval(lo);
        for nc in &mut c.neurons {
            nc.delta = Some(0.5 * floor);
        }
        crate::model::build_network(&c).unwrap()
    }

    proptest! {
        #[test]
        fn decomposition_identity_and_bounds(
            ws in proptest::collection::vec((-1.0f64..1.0, 1u32..3), 0..4),
            base in 0.2f64..0.6, slope in 0.01f64..0.5,
            strict in any::<bool>(),
        ) {
            let net = random_net(&ws, base, slope);
            let nb = net.neighborhoods(NeighborhoodPolicy::Influence);
            let mode = if strict { ResidualMode::Strict } else { ResidualMode::Clamp };
            let d = SatDecomposition::for_mode(&net, &nb, 0, mode).unwrap();
            let top = d.saturation_level();
            let (alpha, mu) = d.alpha_mu(top).unwrap();
            prop_assert!((alpha[top] - 1.0).abs() < 1e-15);
            for k in 1..=top {
                prop_assert!(alpha[k - 1] <= alpha[k] + 1e-15);
                prop_assert!(mu[k] <= d.mu_bound(k) + 1e-12);
            }
            // every configuration of capped counts
            let seq = d.neighborhood().clone();
            let mut counts = vec![0u32; seq.members.len()];
            loop {
                prop_assert!(d.verify_decomposition(&counts, top).unwrap() <= 1e-12);
                // level laws ignore counts outside the neighborhood
                for k in 0..top {
                    let law = d.p_k(k, &counts).unwrap();
                    let mut other = counts.clone();
                    for (p, c) in other.iter_mut().enumerate().skip(seq.size(k)) {
                        *c = (*c + 1) % (seq.thresholds[p] + 1);
                    }
                    prop_assert_eq!(law, d.p_k(k, &other).unwrap());
                }
                let mut p = 1;
                while p < counts.len() {
                    if counts[p] < seq.thresholds[p] {
                        counts[p] += 1;
                        break;
                    }
                    counts[p] = 0;
                    p += 1;
                }
                if p >= counts.len() {
                    break;
                }
            }
        }
    }
}
