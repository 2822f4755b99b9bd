//! Forward simulators used as ground truth, and a comparator for spike trains.
//!
//! [`gillespie_edges`] simulates the saturation model as a continuous-time
//! Markov chain on capped edge counts. [`ogata_forward`] thins a dominating
//! Poisson stream with the exact conditional rate, for either model. Neither
//! uses the dominating measure of [`crate::prm`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kalikow_cascade::CascadeContext;
use crate::model::{ModelKind, NeighborhoodPolicy, Network};
use crate::perfect::SpikeSample;
use crate::stats::{ks_two_sample, median, KsResult, MeanSe, Moments};

const TAG_GILLESPIE: u64 = 0x4749_4c4c;
const TAG_OGATA: u64 = 0x4f47_4154;

fn oracle_rng(seed: u64, tag: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tag);
    rng
}

/// Capped counts `η(j→i) ∈ {0, …, K_{j→i}}`, aligned with `Network::inputs(i)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeState {
    counts: Vec<Vec<u32>>,
}

impl EdgeState {
    pub fn zeros(network: &Network) -> Self {
        Self { counts: (0..network.len()).map(|i| vec![0; network.inputs(i).len()]).collect() }
    }

    /// Count on the edge `from → to`, if it exists.
    pub fn get(&self, network: &Network, from: usize, to: usize) -> Option<u32> {
        let slot = network.inputs(to).iter().position(|e| e.from == from)?;
        Some(self.counts[to][slot])
    }

    pub fn set(&mut self, network: &Network, from: usize, to: usize, value: u32) -> Result<()> {
        let Some(slot) = network.inputs(to).iter().position(|e| e.from == from) else {
            return Err(Error::InvalidParam(format!("no edge {from} -> {to}")));
        };
        let k = network.inputs(to)[slot].threshold;
        if value > k {
            return Err(Error::OutOfRange { from, count: value, threshold: k });
        }
        self.counts[to][slot] = value;
        Ok(())
    }

    /// Counts on the in-edges of `i`.
    pub fn inputs_of(&self, i: usize) -> &[u32] {
        &self.counts[i]
    }

    fn drive(&self, network: &Network, i: usize) -> f64 {
        network.inputs(i).iter().zip(&self.counts[i]).map(|(e, &c)| e.weight * c as f64).sum()
    }

    /// Applies a spike of `i`: in-edges reset, out-edges incremented up to their threshold.
    fn spike(&mut self, network: &Network, out_slots: &[Vec<(usize, usize)>], i: usize) {
        self.counts[i].iter_mut().for_each(|c| *c = 0);
        for &(l, slot) in &out_slots[i] {
            let k = network.inputs(l)[slot].threshold;
            let c = &mut self.counts[l][slot];
            *c = (*c + 1).min(k);
        }
    }
}

fn out_slots(network: &Network) -> Vec<Vec<(usize, usize)>> {
    let mut out = vec![Vec::new(); network.len()];
    for l in 0..network.len() {
        for (slot, e) in network.inputs(l).iter().enumerate() {
            out[e.from].push((l, slot));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    /// External neuron id.
    pub neuron: u32,
}

/// A forward trajectory on `[0, horizon)`, burn-in already removed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardRun {
    pub horizon: f64,
    pub burn_in: f64,
    pub events: Vec<Event>,
}

impl ForwardRun {
    pub fn spikes(&self, id: u32) -> Vec<f64> {
        self.events.iter().filter(|e| e.neuron == id).map(|e| e.time).collect()
    }

    /// Spike count over horizon, per neuron id.
    pub fn rate(&self, id: u32) -> f64 {
        self.events.iter().filter(|e| e.neuron == id).count() as f64 / self.horizon
    }
}

/// Exact simulation of the edge-count chain on `[0, burn_in + horizon)`.
///
/// `on_event(t, i, state)` sees the state right after each spike; events
/// before `burn_in` are dropped from the returned run.
pub fn gillespie_edges_with(
    network: &Network,
    horizon: f64,
    burn_in: f64,
    init: &EdgeState,
    seed: u64,
    mut on_event: impl FnMut(f64, usize, &EdgeState),
) -> Result<ForwardRun> {
    if network.kind() != ModelKind::Saturation {
        return Err(Error::WrongModelKind { expected: "saturation" });
    }
    if !(horizon > 0.0) || !(burn_in >= 0.0) {
        return Err(Error::InvalidParam("horizon must be positive and burn-in non-negative".into()));
    }
    let slots = out_slots(network);
    let mut rng = oracle_rng(seed, TAG_GILLESPIE);
    let mut state = init.clone();
    let rate = |state: &EdgeState, i: usize| -> Result<f64> {
        let r = network.neuron(i).lambda * network.phi_eval(i, state.drive(network, i));
        if r.is_finite() && r >= 0.0 {
            Ok(r)
        } else {
            Err(Error::NonFiniteRate { neuron: i, rate: r })
        }
    };
    let mut rates = (0..network.len()).map(|i| rate(&state, i)).collect::<Result<Vec<_>>>()?;
    let end = burn_in + horizon;
    let mut t = 0.0;
    let mut events = Vec::new();
    loop {
        let total: f64 = rates.iter().sum();
        if total <= 0.0 {
            break;
        }
        t += -(1.0 - rng.random::<f64>()).ln() / total;
        if t >= end {
            break;
        }
        let mut pick = rng.random::<f64>() * total;
        let mut i = rates.len() - 1;
        for (j, &r) in rates.iter().enumerate() {
            if pick < r {
                i = j;
                break;
            }
            pick -= r;
        }
        state.spike(network, &slots, i);
        rates[i] = rate(&state, i)?;
        for &(l, _) in &slots[i] {
            rates[l] = rate(&state, l)?;
        }
        on_event(t, i, &state);
        if t >= burn_in {
            events.push(Event { time: t - burn_in, neuron: network.neuron(i).id });
        }
    }
    Ok(ForwardRun { horizon, burn_in, events })
}

pub fn gillespie_edges(
    network: &Network,
    horizon: f64,
    burn_in: f64,
    init: &EdgeState,
    seed: u64,
) -> Result<ForwardRun> {
    gillespie_edges_with(network, horizon, burn_in, init, seed, |_, _, _| {})
}

/// History horizon used by [`ogata_forward`] for cascade networks.
pub fn cascade_horizon(network: &Network, tolerance: f64) -> Result<f64> {
    let nbhd = network.neighborhoods(NeighborhoodPolicy::Influence);
    Ok(CascadeContext::new(network, &nbhd, tolerance)?.horizon())
}

/// Forward thinning simulation on `[0, burn_in + horizon)` from an empty past.
///
/// Candidate jumps of neuron `i` arrive at rate `Λ_i` and are accepted with
/// probability `φ_i` of the membrane input accumulated since the last
/// accepted spike of `i`. Cascade inputs older than the history horizon
/// for `tolerance` are dropped.
pub fn ogata_forward(network: &Network, horizon: f64, burn_in: f64, seed: u64, tolerance: f64) -> Result<ForwardRun> {
    if !(horizon > 0.0) || !(burn_in >= 0.0) {
        return Err(Error::InvalidParam("horizon must be positive and burn-in non-negative".into()));
    }
    let mut rng = oracle_rng(seed, TAG_OGATA);
    let n = network.len();
    let total: f64 = network.neurons().iter().map(|s| s.lambda).sum();
    let end = burn_in + horizon;
    let mut events = Vec::new();
    if total <= 0.0 {
        return Ok(ForwardRun { horizon, burn_in, events });
    }
    let lambdas: Vec<f64> = network.neurons().iter().map(|s| s.lambda).collect();
    let pick = |rng: &mut ChaCha8Rng| {
        let mut u = rng.random::<f64>() * total;
        for (j, &l) in lambdas.iter().enumerate() {
            if u < l {
                return j;
            }
            u -= l;
        }
        n - 1
    };
    let mut t = 0.0;
    match network.kind() {
        ModelKind::Saturation => {
            let slots = out_slots(network);
            let mut state = EdgeState::zeros(network);
            loop {
                t += -(1.0 - rng.random::<f64>()).ln() / total;
                if t >= end {
                    break;
                }
                let i = pick(&mut rng);
                let p = network.phi_eval(i, state.drive(network, i));
                if rng.random::<f64>() < p {
                    state.spike(network, &slots, i);
                    if t >= burn_in {
                        events.push(Event { time: t - burn_in, neuron: network.neuron(i).id });
                    }
                }
            }
        }
        ModelKind::Cascade => {
            let h = cascade_horizon(network, tolerance)?;
            let mut history: Vec<std::collections::VecDeque<f64>> = vec![Default::default(); n];
            let mut last: Vec<f64> = vec![f64::NEG_INFINITY; n];
            loop {
                t += -(1.0 - rng.random::<f64>()).ln() / total;
                if t >= end {
                    break;
                }
                let i = pick(&mut rng);
                let from = last[i].max(t - h);
                let mut x = 0.0;
                for e in network.inputs(i) {
                    let leak = network.neuron(e.from).leak();
                    let hist = &mut history[e.from];
                    while hist.front().is_some_and(|&s| s < t - h) {
                        hist.pop_front();
                    }
                    x += e.weight
                        * hist.iter().rev().take_while(|&&s| s >= from).map(|&s| leak.eval(t - s)).sum::<f64>();
                }
                let p = network.phi_eval(i, x);
                if rng.random::<f64>() < p {
                    last[i] = t;
                    history[i].push_back(t);
                    if t >= burn_in {
                        events.push(Event { time: t - burn_in, neuron: network.neuron(i).id });
                    }
                }
            }
        }
    }
    Ok(ForwardRun { horizon, burn_in, events })
}

/// Forward oracle for the network's model kind: Gillespie for saturation
/// networks, thinning for cascade networks.
pub fn forward(network: &Network, horizon: f64, burn_in: f64, seed: u64, tolerance: f64) -> Result<ForwardRun> {
    match network.kind() {
        ModelKind::Saturation => gillespie_edges(network, horizon, burn_in, &EdgeState::zeros(network), seed),
        ModelKind::Cascade => ogata_forward(network, horizon, burn_in, seed, tolerance),
    }
}

/// Burn-in of ten times a pilot estimate of the mixing time.
///
/// A pilot run of length `pilot` from the empty past is cut into 20 batches.
/// The mixing estimate is the end of the first batch whose total rate lies
/// within three standard errors of the mean over the second half.
pub fn default_burn_in(network: &Network, pilot: f64, seed: u64, tolerance: f64) -> Result<f64> {
    const BATCHES: usize = 20;
    let run = forward(network, pilot, 0.0, seed, tolerance)?;
    let width = pilot / BATCHES as f64;
    let mut rates = [0.0; BATCHES];
    for e in &run.events {
        rates[((e.time / width) as usize).min(BATCHES - 1)] += 1.0 / width;
    }
    let tail = rates[BATCHES / 2..].iter().copied().collect::<Moments>();
    let sd = tail.variance().sqrt();
    let first = rates.iter().position(|&r| (r - tail.mean()).abs() <= 3.0 * sd).unwrap_or(BATCHES / 2);
    Ok(10.0 * width * (first + 1) as f64)
}

/// Spike trains cut into equal-length windows, times relative to each window start.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeWindows {
    pub length: f64,
    pub ids: Vec<u32>,
    /// `windows[w][n]` holds the spikes of neuron `ids[n]` in window `w`.
    pub windows: Vec<Vec<Vec<f64>>>,
}

impl SpikeWindows {
    /// One window per perfect sample; all windows must share one length.
    pub fn from_samples(ids: &[u32], samples: &[SpikeSample]) -> Result<Self> {
        let Some(first) = samples.first() else {
            return Err(Error::InsufficientSamples("no perfect samples".into()));
        };
        let length = first.window[1] - first.window[0];
        let mut windows = Vec::with_capacity(samples.len());
        for s in samples {
            let len = s.window[1] - s.window[0];
            if (len - length).abs() > 1e-9 * length.max(1.0) {
                return Err(Error::InvalidParam("perfect samples have different window lengths".into()));
            }
            windows.push(ids.iter().map(|&id| s.spikes(id).iter().map(|t| t - s.window[0]).collect()).collect());
        }
        Ok(Self { length, ids: ids.to_vec(), windows })
    }

    /// One window per stored perfect trajectory.
    pub fn from_trajectories(ids: &[u32], trajectories: &[crate::output::Trajectory]) -> Result<Self> {
        let mut length = None;
        let mut windows = Vec::with_capacity(trajectories.len());
        for t in trajectories {
            let meta = t.meta.as_ref().ok_or_else(|| Error::Config("trajectory has no metadata".into()))?;
            let len = meta.window[1] - meta.window[0];
            if length.is_some_and(|l: f64| (len - l).abs() > 1e-9 * l.max(1.0)) {
                return Err(Error::InvalidParam("trajectories have different window lengths".into()));
            }
            length = Some(len);
            windows.push(
                ids.iter()
                    .map(|&id| {
                        t.records.iter().filter(|r| r.a == 1 && r.i == id).map(|r| r.t - meta.window[0]).collect()
                    })
                    .collect(),
            );
        }
        let length = length.ok_or_else(|| Error::InsufficientSamples("no perfect trajectories".into()))?;
        Ok(Self { length, ids: ids.to_vec(), windows })
    }

    /// Cuts a forward trajectory into consecutive windows of `length`.
    pub fn from_run(ids: &[u32], run: &ForwardRun, length: f64) -> Result<Self> {
        if !(length > 0.0) {
            return Err(Error::InvalidParam("window length must be positive".into()));
        }
        let count = (run.horizon / length).floor() as usize;
        let mut windows = vec![vec![Vec::new(); ids.len()]; count];
        for e in &run.events {
            let w = (e.time / length).floor() as usize;
            if w < count {
                if let Some(n) = ids.iter().position(|&id| id == e.neuron) {
                    windows[w][n].push(e.time - w as f64 * length);
                }
            }
        }
        Ok(Self { length, ids: ids.to_vec(), windows })
    }

    /// Splits the windows into a first and a second half.
    pub fn halves(&self) -> (Self, Self) {
        let mid = self.windows.len() / 2;
        let part = |w: &[Vec<Vec<f64>>]| Self { length: self.length, ids: self.ids.clone(), windows: w.to_vec() };
        (part(&self.windows[..mid]), part(&self.windows[mid..]))
    }

    /// Batch-means estimate of the rate of neuron slot `n`.
    fn rate(&self, n: usize, batches: usize) -> MeanSe {
        let per_window: Vec<f64> = self.windows.iter().map(|w| w[n].len() as f64 / self.length).collect();
        let b = batches.clamp(1, per_window.len().max(1));
        let size = per_window.len() / b;
        if size == 0 {
            return per_window.iter().copied().collect::<Moments>().summary();
        }
        let means: Moments = per_window.chunks(size).take(b).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
        let mut s = means.summary();
        s.mean = per_window.iter().sum::<f64>() / per_window.len() as f64;
        s
    }

    fn intervals(&self, n: usize) -> Vec<f64> {
        self.windows.iter().flat_map(|w| w[n].windows(2).map(|p| p[1] - p[0]).collect::<Vec<_>>()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareOptions {
    /// Allowed rate difference in standard errors.
    pub z_level: f64,
    /// Minimal interspike KS p-value.
    pub ks_level: f64,
    /// Number of batches for rate standard errors.
    pub batches: usize,
    /// Interspike intervals needed on each side before the KS test runs.
    pub min_intervals: usize,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self { z_level: 3.0, ks_level: 0.01, batches: 20, min_intervals: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuronComparison {
    pub id: u32,
    pub rate_a: MeanSe,
    pub rate_b: MeanSe,
    /// Rate difference in standard-error units.
    pub z: f64,
    pub rate_pass: bool,
    pub ks: Option<KsResult>,
    pub ks_pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub options: CompareOptions,
    pub neurons: Vec<NeuronComparison>,
    pub pass: bool,
}

impl CompareReport {
    /// Median KS p-value over neurons that had enough intervals.
    pub fn median_ks_p(&self) -> Option<f64> {
        let ps: Vec<f64> = self.neurons.iter().filter_map(|n| n.ks.map(|k| k.p_value)).collect();
        (!ps.is_empty()).then(|| median(&ps))
    }
}

/// Compares per-neuron rates and interspike-interval laws of two window sets.
pub fn compare(a: &SpikeWindows, b: &SpikeWindows, options: &CompareOptions) -> Result<CompareReport> {
    if a.ids != b.ids {
        return Err(Error::InvalidParam("window sets cover different neurons".into()));
    }
    if a.windows.len() < 2 || b.windows.len() < 2 {
        return Err(Error::InsufficientSamples("each side needs at least two windows".into()));
    }
    let same_length = (a.length - b.length).abs() <= 1e-9 * a.length.max(1.0);
    let mut neurons = Vec::with_capacity(a.ids.len());
    for (n, &id) in a.ids.iter().enumerate() {
        let (ra, rb) = (a.rate(n, options.batches), b.rate(n, options.batches));
        let se = (ra.se * ra.se + rb.se * rb.se).sqrt();
        let diff = ra.mean - rb.mean;
        let z = if diff == 0.0 { 0.0 } else { diff / se };
        let (ia, ib) = (a.intervals(n), b.intervals(n));
        let ks = (same_length && ia.len() >= options.min_intervals && ib.len() >= options.min_intervals)
            .then(|| ks_two_sample(&ia, &ib));
        neurons.push(NeuronComparison {
            id,
            rate_a: ra,
            rate_b: rb,
            z,
            rate_pass: z.abs() <= options.z_level,
            ks_pass: ks.is_none_or(|k| k.p_value > options.ks_level),
            ks,
        });
    }
    let pass = neurons.iter().all(|n| n.rate_pass && n.ks_pass);
    Ok(CompareReport { options: *options, neurons, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{cascade_net, e1, saturation_net};
    use crate::kalikow_cascade::DEFAULT_TAIL_TOLERANCE;
    use crate::model::RateFunction;
    use crate::perfect::{perfect_sample, SamplerOptions};
    use crate::stats::mean_se;

    #[test]
    fn constant_rate_counts_are_poisson() {
        let mut c = saturation_net(&[(0, 2.0, 0.5)], &[]).to_config();
        c.neurons[0].phi = RateFunction::clipped_affine(0.75, 0.0);
        let net = crate::build_network(&c).unwrap();
        let init = EdgeState::zeros(&net);
        let counts: Vec<f64> =
            (0..1000).map(|s| gillespie_edges(&net, 10.0, 0.0, &init, s).unwrap().events.len() as f64).collect();
        let m = mean_se(&counts);
        assert!((m.mean - 15.0).abs() < 3.0 * m.se, "{m:?}");
        // Poisson: variance equals mean
        let var = m.se * m.se * 1000.0;
        assert!((var - 15.0).abs() < 2.0, "{var}");
    }

    #[test]
    fn spikes_reset_in_edges_and_stay_capped() {
        let net = saturation_net(
            &[(0, 1.0, 0.1), (1, 1.0, 0.1), (2, 1.0, 0.1)],
            &[(1, 0, 0.5, 2), (2, 0, -0.5, 1), (0, 1, 0.4, 3), (0, 2, 0.2, 1)],
        );
        let mut events = 0;
        gillespie_edges_with(&net, 500.0, 0.0, &EdgeState::zeros(&net), 4, |_, i, s| {
            events += 1;
            assert!(s.inputs_of(i).iter().all(|&c| c == 0));
            for l in 0..net.len() {
                for (e, &c) in net.inputs(l).iter().zip(s.inputs_of(l)) {
                    assert!(c <= e.threshold);
                }
            }
        })
        .unwrap();
        assert!(events > 100);
    }

    #[test]
    fn e1_long_run_rate_is_seed_stable() {
        let net = e1(0.1, 1);
        let a = gillespie_edges(&net, 20_000.0, 100.0, &EdgeState::zeros(&net), 1).unwrap();
        let b = gillespie_edges(&net, 20_000.0, 100.0, &EdgeState::zeros(&net), 2).unwrap();
        let (wa, wb) =
            (SpikeWindows::from_run(&[0, 1], &a, 100.0).unwrap(), SpikeWindows::from_run(&[0, 1], &b, 100.0).unwrap());
        assert!(compare(&wa, &wb, &CompareOptions::default()).unwrap().pass);
    }

    #[test]
    fn ogata_matches_gillespie_on_saturation() {
        let net = saturation_net(&[(0, 1.0, 0.1), (1, 1.0, 0.1)], &[(1, 0, 1.0, 2), (0, 1, -1.0, 1)]);
        let g = gillespie_edges(&net, 20_000.0, 100.0, &EdgeState::zeros(&net), 5).unwrap();
        let o = ogata_forward(&net, 20_000.0, 100.0, 5, DEFAULT_TAIL_TOLERANCE).unwrap();
        let r = compare(
            &SpikeWindows::from_run(&[0, 1], &g, 50.0).unwrap(),
            &SpikeWindows::from_run(&[0, 1], &o, 50.0).unwrap(),
            &CompareOptions::default(),
        )
        .unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn ogata_zero_weights_rate() {
        let net = cascade_net(&[(0, 0), (1, 1)], &[], 0.3, 0.2, 2.0);
        let run = ogata_forward(&net, 10_000.0, 0.0, 3, DEFAULT_TAIL_TOLERANCE).unwrap();
        for id in [0, 1] {
            let c = run.spikes(id).len() as f64;
            assert!((c - 3000.0).abs() < 3.0 * 3000f64.sqrt(), "{c}");
        }
    }

    #[test]
    fn cascade_extinction_dichotomy() {
        let silent = cascade_net(&[(0, 0), (1, 0), (2, 1)], &[(0, 2, 0.5), (1, 2, 0.5)], 0.0, 0.3, 1.0);
        assert!(ogata_forward(&silent, 1000.0, 0.0, 1, DEFAULT_TAIL_TOLERANCE).unwrap().events.is_empty());

        let mut c = silent.to_config();
        c.neurons[0].phi = RateFunction::clipped_affine(0.2, 0.3);
        let driven = crate::build_network(&c).unwrap();
        let run = ogata_forward(&driven, 2000.0, 0.0, 1, DEFAULT_TAIL_TOLERANCE).unwrap();
        assert!(run.rate(0) > 0.1);
        assert!(run.rate(2) > 0.0);
        assert_eq!(run.rate(1), 0.0);
    }

    #[test]
    fn self_comparison_passes_and_mismatch_fails() {
        let net = e1(0.1, 1);
        let run = gillespie_edges(&net, 40_000.0, 100.0, &EdgeState::zeros(&net), 8).unwrap();
        let w = SpikeWindows::from_run(&[0, 1], &run, 100.0).unwrap();
        let (h1, h2) = w.halves();
        assert!(compare(&h1, &h2, &CompareOptions::default()).unwrap().pass);

        // no interaction against a strongly driven receiver
        let quiet = saturation_net(&[(0, 1.0, 0.1), (1, 1.0, 0.1)], &[]);
        let mut c = quiet.to_config();
        c.edges.push(crate::model::EdgeConfig { from: 1, to: 0, w: 0.1 * 40.0, k: Some(2) });
        let loud = crate::build_network(&c).unwrap();
        let qa = gillespie_edges(&quiet, 10_000.0, 10.0, &EdgeState::zeros(&quiet), 1).unwrap();
        let la = gillespie_edges(&loud, 10_000.0, 10.0, &EdgeState::zeros(&loud), 1).unwrap();
        let r = compare(
            &SpikeWindows::from_run(&[0, 1], &qa, 100.0).unwrap(),
            &SpikeWindows::from_run(&[0, 1], &la, 100.0).unwrap(),
            &CompareOptions::default(),
        )
        .unwrap();
        assert!(!r.pass);
        assert!(!r.neurons[0].rate_pass);
    }

    #[test]
    fn perfect_windows_against_gillespie() {
        let net = e1(0.1, 1);
        let samples: Vec<_> =
            (0..400).map(|s| perfect_sample(&net, (0.0, 10.0), s, &SamplerOptions::default()).unwrap()).collect();
        let p = SpikeWindows::from_samples(&[0, 1], &samples).unwrap();
        let run = gillespie_edges(&net, 20_000.0, 100.0, &EdgeState::zeros(&net), 7).unwrap();
        let g = SpikeWindows::from_run(&[0, 1], &run, 10.0).unwrap();
        let r = compare(&p, &g, &CompareOptions::default()).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn burn_in_is_positive_and_bounded() {
        let net = e1(0.1, 1);
        let b = default_burn_in(&net, 1000.0, 1, DEFAULT_TAIL_TOLERANCE).unwrap();
        assert!((500.0..=5500.0).contains(&b), "{b}");
    }

    #[test]
    fn compare_needs_windows() {
        let empty = SpikeWindows { length: 1.0, ids: vec![0], windows: vec![] };
        assert!(matches!(compare(&empty, &empty, &CompareOptions::default()), Err(Error::InsufficientSamples(_))));
        assert!(SpikeWindows::from_samples(&[0], &[]).is_err());
    }
}
