//! Networks of interacting neurons for the saturation and cascade model families.

mod config;
mod functions;
mod neighborhoods;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub use config::{EdgeConfig, NetworkConfig, NeuronConfig, PatternConfig, WeightRule};
pub use functions::{adaptive_simpson, LeakFunction, RateFunction, RateShape, QUADRATURE_TOLERANCE};
pub use neighborhoods::{GrowingNeighborhoods, NeighborhoodPolicy, NeighborhoodSequence};

use crate::error::{Error, Result, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Interactions `W·min(x, K)` with no leak; spontaneous floor `δ`.
    #[serde(alias = "Saturation")]
    Saturation,
    /// Layered interactions `W·Σ g(t - s)` with a leak kernel.
    #[serde(alias = "Cascade")]
    Cascade,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Saturation => "saturation",
            ModelKind::Cascade => "cascade",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeuronSpec {
    pub id: u32,
    /// Maximal rate `Λ`.
    pub lambda: f64,
    /// Spontaneous rate `δ`; zero for cascade neurons.
    pub delta: f64,
    pub phi: RateFunction,
    pub leak: Option<LeakFunction>,
}

impl NeuronSpec {
    /// Spontaneous fraction `d = δ / Λ`.
    pub fn d(&self) -> f64 {
        self.delta / self.lambda
    }

    pub fn leak(&self) -> &LeakFunction {
        self.leak.as_ref().expect("cascade neurons carry a leak function")
    }
}

/// Incoming edge `from → ·` with weight `W` and threshold `K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InEdge {
    pub from: usize,
    pub weight: f64,
    pub threshold: u32,
}

/// A validated, immutable network. Neurons are addressed by dense index;
/// `NeuronSpec::id` is the external label.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    kind: ModelKind,
    neurons: Vec<NeuronSpec>,
    index: HashMap<u32, usize>,
    inputs: Vec<Vec<InEdge>>,
    outputs: Vec<Vec<usize>>,
    layers: Option<Vec<i64>>,
}

impl Network {
    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.neurons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neurons.is_empty()
    }

    pub fn neurons(&self) -> &[NeuronSpec] {
        &self.neurons
    }

    pub fn neuron(&self, i: usize) -> &NeuronSpec {
        &self.neurons[i]
    }

    pub fn index_of(&self, id: u32) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn inputs(&self, i: usize) -> &[InEdge] {
        &self.inputs[i]
    }

    /// Postsynaptic neurons of `i`.
    pub fn outputs(&self, i: usize) -> &[usize] {
        &self.outputs[i]
    }

    pub fn layer(&self, i: usize) -> Option<i64> {
        self.layers.as_ref().map(|l| l[i])
    }

    pub fn edge_count(&self) -> usize {
        self.inputs.iter().map(Vec::len).sum()
    }

    pub fn phi_eval(&self, i: usize, x: f64) -> f64 {
        self.neurons[i].phi.eval(x)
    }

    /// `Σ_j |W_{j→i}|·K_{j→i}` (saturation) or `Σ_j |W_{j→i}|` (cascade).
    pub fn input_mass(&self, i: usize) -> f64 {
        self.inputs[i].iter().map(|e| e.weight.abs() * self.cap(e)).sum()
    }

    /// Smallest and largest membrane input reachable for a saturation neuron.
    pub fn reachable_inputs(&self, i: usize) -> (f64, f64) {
        let mut lo = 0.0;
        let mut hi = 0.0;
        for e in &self.inputs[i] {
            let v = e.weight * e.threshold as f64;
            if v < 0.0 {
                lo += v;
            } else {
                hi += v;
            }
        }
        (lo, hi)
    }

    fn cap(&self, e: &InEdge) -> f64 {
        match self.kind {
            ModelKind::Saturation => e.threshold as f64,
            ModelKind::Cascade => 1.0,
        }
    }

    pub fn neighborhoods(&self, policy: NeighborhoodPolicy) -> GrowingNeighborhoods {
        GrowingNeighborhoods::new(self, policy)
    }

    /// Converts back to an explicit configuration.
    pub fn to_config(&self) -> NetworkConfig {
        let neurons = self
            .neurons
            .iter()
            .map(|n| NeuronConfig {
                id: n.id,
                lambda: n.lambda,
                delta: (self.kind == ModelKind::Saturation).then_some(n.delta),
                phi: n.phi.clone(),
                leak: n.leak.clone(),
            })
            .collect();
        let mut edges = Vec::new();
        for (i, ins) in self.inputs.iter().enumerate() {
            for e in ins {
                edges.push(EdgeConfig {
                    from: self.neurons[e.from].id,
                    to: self.neurons[i].id,
                    w: e.weight,
                    k: (self.kind == ModelKind::Saturation).then_some(e.threshold),
                });
            }
        }
        let layers =
            self.layers.as_ref().map(|l| l.iter().enumerate().map(|(i, &h)| (self.neurons[i].id, h)).collect());
        NetworkConfig { model_kind: self.kind, neurons, edges, layers, pattern: None }
    }
}

/// Validates a configuration and builds the network, collecting every violation.
pub fn build_network(config: &NetworkConfig) -> Result<Network> {
    let config = config.expanded()?;
    let kind = config.model_kind;
    let mut violations = Vec::new();
    let mut index = HashMap::new();
    let mut neurons = Vec::with_capacity(config.neurons.len());

    for n in &config.neurons {
        if index.contains_key(&n.id) {
            violations.push(Violation::DuplicateNeuron { id: n.id });
            continue;
        }
        index.insert(n.id, neurons.len());
        let bad = |message: String| Violation::InvalidParameter { id: Some(n.id), message };
        if !(n.lambda > 0.0) || !n.lambda.is_finite() {
            violations.push(bad(format!("lambda must be positive and finite, got {}", n.lambda)));
        }
        if let Err(m) = n.phi.validate() {
            violations.push(bad(m));
        }
        let delta = match kind {
            ModelKind::Saturation => {
                if n.leak.is_some() {
                    violations.push(bad("leak functions apply to cascade networks only".into()));
                }
                match n.delta {
                    Some(d) if d > 0.0 && d <= n.lambda => d,
                    Some(d) => {
                        violations.push(bad(format!("delta must satisfy 0 < delta <= lambda, got {d}")));
                        d
                    }
                    None => {
                        violations.push(bad("saturation neurons need a spontaneous rate delta".into()));
                        0.0
                    }
                }
            }
            ModelKind::Cascade => {
                if n.delta.is_some() {
                    violations.push(bad("delta applies to saturation networks only".into()));
                }
                match &n.leak {
                    Some(g) => {
                        if let Err(m) = g.validate() {
                            violations.push(bad(m));
                        }
                    }
                    None => violations.push(bad("cascade neurons need a leak function".into())),
                }
                0.0
            }
        };
        neurons.push(NeuronSpec { id: n.id, lambda: n.lambda, delta, phi: n.phi.clone(), leak: n.leak.clone() });
    }

    let mut inputs: Vec<Vec<InEdge>> = vec![Vec::new(); neurons.len()];
    let mut outputs: Vec<Vec<usize>> = vec![Vec::new(); neurons.len()];
    for e in &config.edges {
        let (from, to) = match (index.get(&e.from), index.get(&e.to)) {
            (Some(&f), Some(&t)) => (f, t),
            (f, t) => {
                if f.is_none() {
                    violations.push(Violation::MissingNeuron { id: e.from, context: "an edge source" });
                }
                if t.is_none() {
                    violations.push(Violation::MissingNeuron { id: e.to, context: "an edge target" });
                }
                continue;
            }
        };
        if from == to {
            if e.w != 0.0 {
                violations.push(Violation::SelfLoopWeight { id: e.from });
            }
            continue;
        }
        if !e.w.is_finite() {
            violations.push(Violation::NonSummableWeights { id: e.to, sum: e.w });
            continue;
        }
        let threshold = match kind {
            ModelKind::Saturation => match e.k {
                Some(k) if k >= 1 => k,
                _ => {
                    violations.push(Violation::InvalidParameter {
                        id: Some(e.to),
                        message: format!("edge {}->{} needs a threshold k >= 1", e.from, e.to),
                    });
                    continue;
                }
            },
            ModelKind::Cascade => 1,
        };
        if e.w == 0.0 {
            continue;
        }
        if inputs[to].iter().any(|x| x.from == from) {
            violations.push(Violation::InvalidParameter {
                id: Some(e.to),
                message: format!("edge {}->{} is listed twice", e.from, e.to),
            });
            continue;
        }
        inputs[to].push(InEdge { from, weight: e.w, threshold });
        outputs[from].push(to);
    }
    for ins in &mut inputs {
        ins.sort_by_key(|e| e.from);
    }
    for outs in &mut outputs {
        outs.sort_unstable();
    }

    let layers = match kind {
        ModelKind::Saturation => {
            if config.layers.is_some() {
                violations.push(Violation::InvalidParameter {
                    id: None,
                    message: "layers apply to cascade networks only".into(),
                });
            }
            None
        }
        ModelKind::Cascade => {
            let map = config.layers.clone().unwrap_or_default();
            for id in map.keys() {
                if !index.contains_key(id) {
                    violations.push(Violation::MissingNeuron { id: *id, context: "the layer map" });
                }
            }
            let mut layers = vec![0i64; neurons.len()];
            for (i, n) in neurons.iter().enumerate() {
                match map.get(&n.id) {
                    Some(&h) => layers[i] = h,
                    None if inputs[i].is_empty() && outputs[i].is_empty() => {}
                    None => violations.push(Violation::MissingLayer { id: n.id }),
                }
            }
            for (i, ins) in inputs.iter().enumerate() {
                for e in ins {
                    let (a, b) = (map.get(&neurons[e.from].id), map.get(&neurons[i].id));
                    if let (Some(&a), Some(&b)) = (a, b) {
                        if a != b - 1 {
                            violations.push(Violation::LayerViolation {
                                from: neurons[e.from].id,
                                to: neurons[i].id,
                                from_layer: a,
                                to_layer: b,
                            });
                        }
                    }
                }
            }
            Some(layers)
        }
    };

    let network = Network { kind, neurons, index, inputs, outputs, layers };
    for i in 0..network.len() {
        let mass = network.input_mass(i);
        if !mass.is_finite() {
            violations.push(Violation::NonSummableWeights { id: network.neurons[i].id, sum: mass });
        }
    }
    if kind == ModelKind::Saturation {
        for (i, n) in network.neurons.iter().enumerate() {
            if n.delta <= 0.0 || n.phi.validate().is_err() {
                continue;
            }
            let (lo, _) = network.reachable_inputs(i);
            let inf_psi = n.lambda * n.phi.eval(lo);
            if n.delta > inf_psi + 1e-12 {
                violations.push(Violation::RateBoundViolation { id: n.id, delta: n.delta, inf_psi });
            }
        }
    }

    if violations.is_empty() {
        Ok(network)
    } else {
        Err(Error::InvalidNetwork(violations))
    }
}

/// Parses and validates a JSON network description.
pub fn network_from_json(text: &str) -> Result<Network> {
    build_network(&NetworkConfig::from_json(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{e1, saturation_net};
    use proptest::prelude::*;

    fn violations(c: &NetworkConfig) -> Vec<Violation> {
        match build_network(c) {
            Err(Error::InvalidNetwork(v)) => v,
            other => panic!("expected violations, got {other:?}"),
        }
    }

    #[test]
    fn empty_network_is_valid() {
        for kind in [ModelKind::Saturation, ModelKind::Cascade] {
            let c = NetworkConfig { model_kind: kind, neurons: vec![], edges: vec![], layers: None, pattern: None };
            let net = build_network(&c).unwrap();
            assert!(net.is_empty());
            assert_eq!(net.edge_count(), 0);
        }
    }

    #[test]
    fn e1_is_valid() {
        let net = e1(1.0, 2);
        assert_eq!(net.len(), 2);
        assert_eq!(net.inputs(0), &[InEdge { from: 1, weight: 1.0, threshold: 2 }]);
        assert_eq!(net.outputs(1), &[0]);
        assert!((net.input_mass(0) - 2.0).abs() < 1e-15);
        assert!((net.phi_eval(0, 0.0) - 0.2).abs() < 1e-15);
        assert!((net.phi_eval(0, 2.0) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn layer_violation() {
        let text = r#"{
            "model_kind": "cascade",
            "neurons": [
                {"id": 1, "lambda": 1, "phi": {"kind": "clipped_affine", "params": {"base": 0.1, "slope": 1}},
                 "leak": {"kind": "exponential", "params": {"amplitude": 1, "rate": 1}}},
                {"id": 2, "lambda": 1, "phi": {"kind": "clipped_affine", "params": {"base": 0.1, "slope": 1}},
                 "leak": {"kind": "exponential", "params": {"amplitude": 1, "rate": 1}}}
            ],
            "edges": [{"from": 1, "to": 2, "w": 0.3}],
            "layers": {"1": 0, "2": 0}
        }"#;
        let v = violations(&NetworkConfig::from_json(text).unwrap());
        assert!(matches!(v[..], [Violation::LayerViolation { from: 1, to: 2, .. }]), "{v:?}");
    }

    #[test]
    fn collects_several_violations() {
        let mut c = e1(1.0, 2).to_config();
        c.edges.push(EdgeConfig { from: 0, to: 0, w: 0.5, k: Some(1) });
        c.edges.push(EdgeConfig { from: 7, to: 0, w: 0.5, k: Some(1) });
        c.neurons[1].delta = Some(0.9);
        let v = violations(&c);
        assert!(v.contains(&Violation::SelfLoopWeight { id: 0 }));
        assert!(v.contains(&Violation::MissingNeuron { id: 7, context: "an edge source" }));
        assert!(v.iter().any(|x| matches!(x, Violation::RateBoundViolation { id: 1, .. })));
    }

    #[test]
    fn rate_bound_uses_reachable_inputs() {
        // inhibitory input can push φ below d
        let net = saturation_net(&[(0, 1.0, 0.2), (1, 1.0, 0.2)], &[(1, 0, 1.0, 2)]);
        assert_eq!(net.reachable_inputs(0), (0.0, 2.0));
        let mut c = net.to_config();
        c.edges[0].w = -3.0;
        let v = violations(&c);
        assert!(matches!(v[..], [Violation::RateBoundViolation { id: 0, .. }]));
    }

    #[test]
    fn config_round_trip() {
        let net = e1(0.1, 1);
        let again = build_network(&net.to_config()).unwrap();
        assert_eq!(again, net);
    }

    proptest! {
        #[test]
        fn phi_is_monotone_and_lipschitz(
            base in -1.0f64..1.5, slope in 0.0f64..3.0,
            x in -20.0f64..20.0, dx in 0.0f64..10.0,
            f in 0.0f64..0.5, c in 0.5f64..1.0, s in 0.0f64..5.0, m in -3.0f64..3.0,
        ) {
            let shapes = [
                RateFunction::clipped_affine(base, slope),
                RateFunction::logistic(f, c, s, m),
                RateFunction::piecewise_linear(vec![[-1.0, f], [m.abs() + 0.5, c], [10.0, 1.0]]),
            ];
            for phi in shapes {
                let (a, b) = (phi.eval(x), phi.eval(x + dx));
                prop_assert!(a <= b);
                prop_assert!((0.0..=1.0).contains(&a));
                prop_assert!((b - a).abs() <= phi.gamma() * dx + 1e-12);
            }
        }

        #[test]
        fn input_mass_matches_stored_edges(ws in proptest::collection::vec((-2.0f64..2.0, 1u32..4), 1..5)) {
            let mut neurons = vec![(0u32, 1.0, 0.05)];
            let mut edges = Vec::new();
            for (n, &(w, k)) in ws.iter().enumerate() {
                neurons.push((n as u32 + 1, 1.0, 0.05));
                edges.push((n as u32 + 1, 0u32, w, k));
            }
            let mut c = saturation_net(&neurons, &[]).to_config();
            for &(from, to, w, k) in &edges {
                c.edges.push(EdgeConfig { from, to, w, k: Some(k) });
            }
            for n in &mut c.neurons {
                n.phi = RateFunction::clipped_affine(0.5, 0.01);
            }
            let net = build_network(&c).unwrap();
            let expect: f64 = edges.iter().filter(|e| e.2 != 0.0).map(|e| e.2.abs() * e.3 as f64).sum();
            prop_assert!((net.input_mass(0) - expect).abs() < 1e-12);
        }
    }
}
