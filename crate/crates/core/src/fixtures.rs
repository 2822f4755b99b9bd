//! Small reference networks shared by tests, benchmarks and examples.

use crate::model::{
    build_network, EdgeConfig, LeakFunction, ModelKind, Network, NetworkConfig, NeuronConfig, RateFunction,
};

/// Two-neuron saturation network `1 → 0` with weight `w` and threshold `k`.
///
/// Both neurons have `Λ = 1`, `δ = 0.2` and `φ = clip(0.2 + 0.1·x, 0, 1)`
/// with declared Lipschitz constant 0.1. Neuron id 0 is the receiving neuron.
pub fn e1(w: f64, k: u32) -> Network {
    let phi = RateFunction::clipped_affine(0.2, 0.1).with_lipschitz(0.1);
    let neuron = |id| NeuronConfig { id, lambda: 1.0, delta: Some(0.2), phi: phi.clone(), leak: None };
    let config = NetworkConfig {
        model_kind: ModelKind::Saturation,
        neurons: vec![neuron(0), neuron(1)],
        edges: vec![EdgeConfig { from: 1, to: 0, w, k: Some(k) }],
        layers: None,
        pattern: None,
    };
    build_network(&config).expect("E1 is valid")
}

/// Saturation network with `φ = clip(0.3 + 0.05·x)` on every neuron.
///
/// `neurons` holds `(id, Λ, δ)`; `edges` holds `(from, to, W, K)`.
pub fn saturation_net(neurons: &[(u32, f64, f64)], edges: &[(u32, u32, f64, u32)]) -> Network {
    let config = NetworkConfig {
        model_kind: ModelKind::Saturation,
        neurons: neurons
            .iter()
            .map(|&(id, lambda, delta)| NeuronConfig {
                id,
                lambda,
                delta: Some(delta),
                phi: RateFunction::clipped_affine(0.3, 0.05),
                leak: None,
            })
            .collect(),
        edges: edges.iter().map(|&(from, to, w, k)| EdgeConfig { from, to, w, k: Some(k) }).collect(),
        layers: None,
        pattern: None,
    };
    build_network(&config).expect("valid saturation network")
}

/// Cascade network with `φ = clip(base + slope·x)`, `Λ = 1` and leak `exp(-a·s)`.
///
/// `neurons` holds `(id, layer)`; `edges` holds `(from, to, W)`.
pub fn cascade_net(neurons: &[(u32, i64)], edges: &[(u32, u32, f64)], base: f64, slope: f64, a: f64) -> Network {
    let config = NetworkConfig {
        model_kind: ModelKind::Cascade,
        neurons: neurons
            .iter()
            .map(|&(id, _)| NeuronConfig {
                id,
                lambda: 1.0,
                delta: None,
                phi: RateFunction::clipped_affine(base, slope),
                leak: Some(LeakFunction::exponential(a)),
            })
            .collect(),
        edges: edges.iter().map(|&(from, to, w)| EdgeConfig { from, to, w, k: None }).collect(),
        layers: Some(neurons.iter().copied().collect()),
        pattern: None,
    };
    build_network(&config).expect("valid cascade network")
}
