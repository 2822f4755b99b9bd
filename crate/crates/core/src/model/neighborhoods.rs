//! Growing neighborhoods `V_i(0) ⊂ V_i(1) ⊂ …` of presynaptic neurons.

use super::{ModelKind, Network};

/// How presynaptic neurons are added to a growing neighborhood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NeighborhoodPolicy {
    /// One neuron per level, by decreasing influence weight, ties by ascending id.
    #[default]
    Influence,
    /// Same order, but neurons with equal influence weight enter at the same level.
    GroupTies,
}

/// `V_i(k)` for one neuron `i`.
///
/// `members[0]` is `i` itself, with zero weight. `V_i(k)` is
/// `members[..ends[k]]`; beyond the last stored level the neighborhood stays
/// at its full size.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodSequence {
    pub neuron: usize,
    pub members: Vec<usize>,
    /// Weight `W_{j→i}` aligned with `members`.
    pub weights: Vec<f64>,
    /// Threshold `K_{j→i}` aligned with `members` (1 for cascade networks).
    pub thresholds: Vec<u32>,
    ends: Vec<usize>,
}

impl NeighborhoodSequence {
    /// Smallest `k` with `V_i(k)` equal to the full neighborhood.
    pub fn saturation_level(&self) -> usize {
        self.ends.len() - 1
    }

    /// Number of members in `V_i(k)`.
    pub fn size(&self, k: usize) -> usize {
        self.ends[k.min(self.ends.len() - 1)]
    }

    /// Members of `V_i(k)`.
    pub fn level(&self, k: usize) -> &[usize] {
        &self.members[..self.size(k)]
    }

    /// Members of `∂V_i(k) = V_i(k+1) \ V_i(k)`, as a range into `members`.
    pub fn boundary(&self, k: usize) -> std::ops::Range<usize> {
        self.size(k)..self.size(k + 1)
    }

    /// Position of neuron `j` in `members`, if present.
    pub fn position(&self, j: usize) -> Option<usize> {
        self.members.iter().position(|&m| m == j)
    }

    /// Level at which member position `p` first appears.
    pub fn entry_level(&self, p: usize) -> usize {
        self.ends.partition_point(|&e| e <= p)
    }
}

/// Neighborhood sequences for every neuron of a network.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowingNeighborhoods {
    pub policy: NeighborhoodPolicy,
    seqs: Vec<NeighborhoodSequence>,
}

impl GrowingNeighborhoods {
    pub fn new(network: &Network, policy: NeighborhoodPolicy) -> Self {
        let seqs = (0..network.len()).map(|i| build_sequence(network, i, policy)).collect();
        Self { policy, seqs }
    }

    pub fn of(&self, i: usize) -> &NeighborhoodSequence {
        &self.seqs[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &NeighborhoodSequence> {
        self.seqs.iter()
    }

    pub fn len(&self) -> usize {
        self.seqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seqs.is_empty()
    }
}

fn build_sequence(network: &Network, i: usize, policy: NeighborhoodPolicy) -> NeighborhoodSequence {
    let influence = |w: f64, k: u32| match network.kind() {
        ModelKind::Saturation => w.abs() * k as f64,
        ModelKind::Cascade => w.abs(),
    };
    let mut inputs: Vec<(f64, u32, usize, f64, u32)> = network
        .inputs(i)
        .iter()
        .map(|e| (influence(e.weight, e.threshold), network.neuron(e.from).id, e.from, e.weight, e.threshold))
        .collect();
    inputs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let mut members = vec![i];
    let mut weights = vec![0.0];
    let mut thresholds = vec![0];
    let mut ends = vec![0, 1];
    let mut last_influence = f64::NAN;
    for (infl, _, from, w, k) in inputs {
        members.push(from);
        weights.push(w);
        thresholds.push(k);
        if policy == NeighborhoodPolicy::GroupTies && infl == last_influence {
            *ends.last_mut().unwrap() += 1;
        } else {
            ends.push(members.len());
        }
        last_influence = infl;
    }
    NeighborhoodSequence { neuron: i, members, weights, thresholds, ends }
}
