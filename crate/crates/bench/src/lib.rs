//! Network families shared by the benchmarks.

use vlm_hawkes::model::{EdgeConfig, LeakFunction, NeuronConfig, PatternConfig, WeightRule};
use vlm_hawkes::{build_network, ModelKind, Network, NetworkConfig, RateFunction};

/// Saturation ring of `n` neurons where each neuron listens to its two
/// neighbours with weight `w` and threshold 1.
pub fn saturation_ring(n: u32, w: f64) -> Network {
    let neurons = (0..n)
        .map(|id| NeuronConfig {
            id,
            lambda: 1.0,
            delta: Some(0.2),
            phi: RateFunction::clipped_affine(0.3, 0.05),
            leak: None,
        })
        .collect();
    let edges = (0..n)
        .flat_map(|i| [(i + 1) % n, (i + n - 1) % n].map(|from| EdgeConfig { from, to: i, w, k: Some(1) }))
        .collect();
    let config = NetworkConfig { model_kind: ModelKind::Saturation, neurons, edges, layers: None, pattern: None };
    build_network(&config).expect("ring is valid")
}

/// Periodic cascade lattice with nearest-pair weights `w` and leak `exp(-2s)`.
pub fn cascade_lattice(sites: u32, layers: u32, w: f64) -> Network {
    let config = NetworkConfig {
        model_kind: ModelKind::Cascade,
        neurons: Vec::new(),
        edges: Vec::new(),
        layers: None,
        pattern: Some(PatternConfig {
            sites,
            layers,
            periodic: true,
            lambda: 1.0,
            phi: RateFunction::clipped_affine(0.3, 0.2),
            leak: LeakFunction::exponential(2.0),
            weights: WeightRule::NearestPair { w },
        }),
    };
    build_network(&config).expect("lattice is valid")
}
