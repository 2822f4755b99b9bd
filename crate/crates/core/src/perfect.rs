//! Perfect simulation: backward clan of ancestors, forward decisions.
//!
//! Every dominating jump `(i, t)` draws a neighborhood level `K` from its
//! Kalikow weights. Its first-generation ancestors `C_1` are the jumps whose
//! decisions the level-`K` law reads. Ancestors are collected generation by
//! generation until a generation is empty, then decided in time order.
//!
//! The level and the acceptance uniform of a site come from the site's own
//! random stream, so a decision does not depend on which root reached it
//! first. Decisions are cached and shared by all clans of one sample.

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use dashmap::DashMap;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conditions;
use crate::error::{Error, Result};
use crate::kalikow::sample_level;
use crate::kalikow_cascade::{CascadeContext, CascadeSite, DEFAULT_TAIL_TOLERANCE};
use crate::kalikow_sat::{decompose_all, ResidualMode, SatDecomposition};
use crate::model::{ModelKind, NeighborhoodPolicy, Network};
use crate::prm::{replica_seed, JumpFilter, Prm, Site, SiteKey, DEFAULT_BACK_SCAN_CAP};
use crate::stats::{MeanSe, Moments};

/// Slack allowed on level probabilities before they are reported as invalid.
pub const PROBABILITY_SLACK: f64 = 1e-9;
pub const DEFAULT_MAX_GENERATIONS: usize = 10_000;
pub const DEFAULT_MAX_SITES: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerOptions {
    pub mode: ResidualMode,
    pub policy: NeighborhoodPolicySetting,
    pub max_generations: usize,
    pub max_sites: usize,
    pub tail_tolerance: f64,
    pub window_length: f64,
    pub back_scan_cap: u64,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

/// Serializable mirror of [`NeighborhoodPolicy`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborhoodPolicySetting {
    #[default]
    Influence,
    GroupTies,
}

impl From<NeighborhoodPolicySetting> for NeighborhoodPolicy {
    fn from(p: NeighborhoodPolicySetting) -> Self {
        match p {
            NeighborhoodPolicySetting::Influence => NeighborhoodPolicy::Influence,
            NeighborhoodPolicySetting::GroupTies => NeighborhoodPolicy::GroupTies,
        }
    }
}

impl Default for SamplerOptions {
    fn default() -> Self {
        Self {
            mode: ResidualMode::Strict,
            policy: NeighborhoodPolicySetting::Influence,
            max_generations: DEFAULT_MAX_GENERATIONS,
            max_sites: DEFAULT_MAX_SITES,
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
            window_length: 1.0,
            back_scan_cap: DEFAULT_BACK_SCAN_CAP,
            threads: None,
        }
    }
}

/// Outcome of deciding one site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub accepted: bool,
    pub level: usize,
    /// The residual probability was clamped into `[0, 1]`.
    pub clamped: bool,
}

/// Clan of ancestors of one root.
#[derive(Debug, Clone, PartialEq)]
pub struct Clan {
    pub root: Site,
    /// Level drawn at the root; `None` for spontaneous roots.
    pub level: Option<usize>,
    /// `C_1, C_2, …`, pairwise disjoint; the last one is non-empty.
    pub generations: Vec<Vec<Site>>,
}

impl Clan {
    /// Index of the first empty generation.
    pub fn n_stop(&self) -> usize {
        self.generations.len() + 1
    }

    pub fn size(&self) -> usize {
        self.generations.iter().map(Vec::len).sum()
    }

    fn sites_by_time(&self) -> Vec<Site> {
        let mut all: Vec<Site> = self.generations.iter().flatten().copied().collect();
        all.push(self.root);
        all.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.key.cmp(&b.key)));
        all
    }
}

#[derive(Clone, Copy)]
enum Model<'a> {
    Saturation(&'a [SatDecomposition]),
    Cascade(&'a CascadeContext<'a>),
}

enum Plan<'a> {
    Spontaneous,
    Saturation {
        level: usize,
        u: f64,
        l_hat: f64,
        /// Ancestors with their member position in `V_i(K)`.
        c1: Vec<(usize, Site)>,
    },
    Cascade {
        level: usize,
        u: f64,
        site: Box<CascadeSite<'a>>,
        c1: Vec<Site>,
    },
}

impl Plan<'_> {
    fn level(&self) -> Option<usize> {
        match self {
            Plan::Spontaneous => None,
            Plan::Saturation { level, .. } | Plan::Cascade { level, .. } => Some(*level),
        }
    }

    fn ancestors(&self) -> Vec<Site> {
        match self {
            Plan::Spontaneous => Vec::new(),
            Plan::Saturation { c1, .. } => c1.iter().map(|&(_, s)| s).collect(),
            Plan::Cascade { c1, .. } => c1.clone(),
        }
    }
}

/// Shared state for sampling on one dominating measure.
pub struct Sampler<'a> {
    network: &'a Network,
    prm: &'a Prm,
    model: Model<'a>,
    options: SamplerOptions,
    plans: DashMap<SiteKey, Arc<Plan<'a>>>,
    decisions: DashMap<SiteKey, Record>,
}

impl<'a> Sampler<'a> {
    pub fn saturation(
        network: &'a Network,
        prm: &'a Prm,
        decomps: &'a [SatDecomposition],
        options: SamplerOptions,
    ) -> Self {
        Self::build(network, prm, Model::Saturation(decomps), options)
    }

    pub fn cascade(network: &'a Network, prm: &'a Prm, ctx: &'a CascadeContext<'a>, options: SamplerOptions) -> Self {
        Self::build(network, prm, Model::Cascade(ctx), options)
    }

    fn build(network: &'a Network, prm: &'a Prm, model: Model<'a>, options: SamplerOptions) -> Self {
        Self { network, prm, model, options, plans: DashMap::new(), decisions: DashMap::new() }
    }

    pub fn prm(&self) -> &Prm {
        self.prm
    }

    /// Sites that must be decided to sample: every jump for cascades, the
    /// non-spontaneous ones for saturation networks.
    fn needs_clan(&self, site: &Site) -> bool {
        !site.spontaneous
    }

    fn plan(&self, site: Site) -> Result<Arc<Plan<'a>>> {
        if let Some(p) = self.plans.get(&site.key) {
            return Ok(p.clone());
        }
        let plan = Arc::new(self.make_plan(site)?);
        Ok(self.plans.entry(site.key).or_insert(plan).clone())
    }

    fn make_plan(&self, site: Site) -> Result<Plan<'a>> {
        if !self.needs_clan(&site) {
            return Ok(Plan::Spontaneous);
        }
        let i = site.neuron();
        let t = site.time;
        let mut rng = self.prm.site_rng(site.key);
        // u in ]0, 1] so that a zero-weight level is never drawn
        let u_level = 1.0 - rng.random::<f64>();
        let u = rng.random::<f64>();
        match self.model {
            Model::Saturation(decomps) => {
                let decomp = &decomps[i];
                let level = sample_level(decomp, u_level)?;
                let l_hat = self.prm.last_spontaneous_before(i, t)?;
                let mut c1 = Vec::new();
                if level > 0 {
                    let seq = decomp.neighborhood();
                    for p in 0..seq.size(level) {
                        for s in self.prm.sites_in(seq.members[p], l_hat, t, JumpFilter::NonSpontaneous) {
                            c1.push((p, s));
                        }
                    }
                }
                Ok(Plan::Saturation { level, u, l_hat, c1 })
            }
            Model::Cascade(ctx) => {
                let cs = ctx.site(self.prm, i, t);
                let level = sample_level(&cs, u_level)?;
                let c1 = if level == 0 {
                    Vec::new()
                } else {
                    cs.sites_in_box(level)
                        .into_iter()
                        .map(|j| Site { key: j.key, time: j.time, spontaneous: false })
                        .collect()
                };
                Ok(Plan::Cascade { level, u, site: Box::new(cs), c1 })
            }
        }
    }

    /// First-generation ancestors of `site`.
    pub fn first_generation(&self, site: Site) -> Result<Vec<Site>> {
        Ok(self.plan(site)?.ancestors())
    }

    /// Level drawn at `site`; `None` for spontaneous jumps.
    pub fn level(&self, site: Site) -> Result<Option<usize>> {
        Ok(self.plan(site)?.level())
    }

    /// Builds the clan of ancestors of `root` generation by generation.
    pub fn clan(&self, root: Site) -> Result<Clan> {
        let plan = self.plan(root)?;
        let mut seen: HashSet<SiteKey> = HashSet::from([root.key]);
        let mut generations: Vec<Vec<Site>> = Vec::new();
        let mut current: Vec<Site> = plan.ancestors().into_iter().filter(|s| seen.insert(s.key)).collect();
        let mut total = 0;
        while !current.is_empty() {
            total += current.len();
            if generations.len() >= self.options.max_generations {
                return Err(Error::GenerationCapExceeded {
                    what: format!("{} generations", self.options.max_generations),
                });
            }
            if total > self.options.max_sites {
                return Err(Error::GenerationCapExceeded { what: format!("{} sites", self.options.max_sites) });
            }
            let mut next = Vec::new();
            for s in &current {
                for a in self.first_generation(*s)? {
                    if seen.insert(a.key) {
                        next.push(a);
                    }
                }
            }
            generations.push(std::mem::take(&mut current));
            current = next;
        }
        Ok(Clan { root, level: plan.level(), generations })
    }

    /// Decides every site of `clan` in time order and returns the root's record.
    pub fn resolve(&self, clan: &Clan) -> Result<Record> {
        for site in clan.sites_by_time() {
            if self.decisions.contains_key(&site.key) {
                continue;
            }
            let rec = self.decide(site)?;
            self.decisions.entry(site.key).or_insert(rec);
        }
        Ok(*self.decisions.get(&clan.root.key).expect("root decided"))
    }

    /// Clan plus forward resolution for one root.
    pub fn sample_root(&self, root: Site) -> Result<(Record, Clan)> {
        let clan = self.clan(root)?;
        let rec = self.resolve(&clan)?;
        Ok((rec, clan))
    }

    pub fn decision(&self, key: SiteKey) -> Option<Record> {
        self.decisions.get(&key).map(|r| *r)
    }

    /// Number of cached decisions whose residual probability was clamped.
    pub fn clamp_events(&self) -> u64 {
        self.decisions.iter().filter(|r| r.clamped).count() as u64
    }

    pub fn decided_count(&self) -> usize {
        self.decisions.len()
    }

    fn accepted(&self, key: SiteKey) -> Result<bool> {
        self.decisions.get(&key).map(|r| r.accepted).ok_or(Error::Deadlock { pending: 1 })
    }

    fn decide(&self, site: Site) -> Result<Record> {
        let plan = self.plan(site)?;
        let i = site.neuron();
        match (&*plan, &self.model) {
            (Plan::Spontaneous, _) => Ok(Record { accepted: true, level: 0, clamped: false }),
            (Plan::Saturation { level, u, l_hat, c1 }, Model::Saturation(decomps)) => {
                let decomp = &decomps[i];
                let k = *level;
                let law = if k == 0 {
                    decomp.p_k(0, &[])?
                } else {
                    let seq = decomp.neighborhood();
                    let mut last = *l_hat;
                    for (p, s) in c1 {
                        if *p == 0 && s.time > last && self.accepted(s.key)? {
                            last = s.time;
                        }
                    }
                    let mut counts = vec![0u32; seq.size(k)];
                    for (p, count) in counts.iter_mut().enumerate().skip(1) {
                        *count =
                            self.prm.sites_in(seq.members[p], last, site.time, JumpFilter::Spontaneous).len() as u32;
                    }
                    for (p, s) in c1 {
                        if *p > 0 && s.time >= last && self.accepted(s.key)? {
                            counts[*p] += 1;
                        }
                    }
                    for (p, count) in counts.iter_mut().enumerate() {
                        *count = (*count).min(seq.thresholds[p]);
                    }
                    decomp.p_k(k, &counts)?
                };
                let p = checked(law.p1, i, k)?;
                let (q, clamped) = match self.options.mode {
                    ResidualMode::Strict => (p.clamp(0.0, 1.0), false),
                    ResidualMode::Clamp => {
                        let d = self.network.neuron(i).d();
                        let q = if d < 1.0 { (p - d) / (1.0 - d) } else { 1.0 };
                        (q.clamp(0.0, 1.0), !(0.0..=1.0).contains(&q))
                    }
                };
                Ok(Record { accepted: *u < q, level: k, clamped })
            }
            (Plan::Cascade { level, u, site: cs, .. }, Model::Cascade(_)) => {
                let x = |key: SiteKey| self.decisions.get(&key).map(|r| r.accepted).unwrap_or(false);
                let law = cs.p_k_env(*level, &x)?;
                let p = checked(law.p1, i, *level)?.clamp(0.0, 1.0);
                Ok(Record { accepted: *u < p, level: *level, clamped: false })
            }
            _ => unreachable!("plan kind follows the model kind"),
        }
    }
}

fn checked(p: f64, neuron: usize, level: usize) -> Result<f64> {
    if p.is_finite() && (-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&p) {
        Ok(p)
    } else {
        Err(Error::InvalidProbability { value: p, neuron, level })
    }
}

/// One decided dominating jump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikeRecord {
    pub time: f64,
    /// External neuron id.
    pub neuron: u32,
    pub accepted: bool,
}

/// Decisions on every dominating jump in a time window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeSample {
    pub window: [f64; 2],
    pub seed: u64,
    pub model_kind: ModelKind,
    pub mode: ResidualMode,
    /// History horizon and tail tolerance of cascade samples.
    pub horizon: Option<f64>,
    pub tail_tolerance: Option<f64>,
    pub records: Vec<SpikeRecord>,
    pub clamp_events: u64,
    /// `N^Stop` counts over the roots that needed a clan.
    pub n_stop_histogram: BTreeMap<usize, u64>,
    /// Sites decided in total, ancestors outside the window included.
    pub decided_sites: usize,
}

impl SpikeSample {
    /// Accepted spike times of neuron `id`.
    pub fn spikes(&self, id: u32) -> Vec<f64> {
        self.records.iter().filter(|r| r.accepted && r.neuron == id).map(|r| r.time).collect()
    }

    pub fn spike_count(&self, id: u32) -> usize {
        self.records.iter().filter(|r| r.accepted && r.neuron == id).count()
    }

    pub fn accepted(&self) -> impl Iterator<Item = &SpikeRecord> {
        self.records.iter().filter(|r| r.accepted)
    }
}

/// Draws an exact sample of the stationary process on `[a, b)`.
///
/// Cascade samples are exact up to the history tail tolerance of the options.
pub fn perfect_sample(
    network: &Network,
    window: (f64, f64),
    seed: u64,
    options: &SamplerOptions,
) -> Result<SpikeSample> {
    let (a, b) = window;
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::InvalidParam(format!("window [{a}, {b}] is not a finite interval")));
    }
    let nbhd = network.neighborhoods(options.policy.into());
    let prm = Prm::with_window_length(network, seed, options.window_length).with_back_scan_cap(options.back_scan_cap);
    let run = |sampler: &Sampler<'_>| run_window(network, sampler, a, b, options);
    let (records, hist, clamp, decided, horizon) = match network.kind() {
        ModelKind::Saturation => {
            let decomps = decompose_all(network, &nbhd, options.mode)?;
            let sampler = Sampler::saturation(network, &prm, &decomps, options.clone());
            let (r, h) = run(&sampler)?;
            (r, h, sampler.clamp_events(), sampler.decided_count(), None)
        }
        ModelKind::Cascade => {
            let ctx = CascadeContext::new(network, &nbhd, options.tail_tolerance)?;
            let sampler = Sampler::cascade(network, &prm, &ctx, options.clone());
            let (r, h) = run(&sampler)?;
            (r, h, 0, sampler.decided_count(), Some(ctx.horizon()))
        }
    };
    Ok(SpikeSample {
        window: [a, b],
        seed,
        model_kind: network.kind(),
        mode: options.mode,
        horizon,
        tail_tolerance: horizon.map(|_| options.tail_tolerance),
        records,
        clamp_events: clamp,
        n_stop_histogram: hist,
        decided_sites: decided,
    })
}

type WindowRun = (Vec<SpikeRecord>, BTreeMap<usize, u64>);

fn run_window(network: &Network, sampler: &Sampler<'_>, a: f64, b: f64, options: &SamplerOptions) -> Result<WindowRun> {
    let mut roots: Vec<Site> =
        (0..network.len()).flat_map(|i| sampler.prm.sites_in(i, a, b, JumpFilter::All)).collect();
    roots.sort_by(|x, y| x.time.total_cmp(&y.time).then(x.key.cmp(&y.key)));
    let work = || -> Result<Vec<(bool, Option<usize>)>> {
        roots
            .par_iter()
            .map(|&root| {
                if !sampler.needs_clan(&root) {
                    return Ok((true, None));
                }
                let (rec, clan) = sampler.sample_root(root)?;
                Ok((rec.accepted, Some(clan.n_stop())))
            })
            .collect()
    };
    let outcomes = match options.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidParam(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let mut hist = BTreeMap::new();
    let records = roots
        .iter()
        .zip(outcomes)
        .map(|(s, (accepted, n_stop))| {
            if let Some(n) = n_stop {
                *hist.entry(n).or_insert(0) += 1;
            }
            SpikeRecord { time: s.time, neuron: network.neuron(s.neuron()).id, accepted }
        })
        .collect();
    Ok((records, hist))
}

/// Monte Carlo statistics of clan sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClanStats {
    pub replicas: usize,
    /// Mean first-generation size, the empirical offspring mean `M̂`.
    pub offspring: MeanSe,
    /// `E|C_n|` for `n = 1, 2, …`.
    pub generation_means: Vec<MeanSe>,
    pub n_stop_histogram: BTreeMap<usize, u64>,
    /// `γ·LHS` of the existence condition, with the Lipschitz constant of
    /// the decomposed law.
    pub bound: f64,
}

/// Builds `n_replicas` independent clans, rooted at the first eligible jump
/// after time 0 of neuron `r mod n` under replica seed `r`.
pub fn clan_stats(network: &Network, n_replicas: usize, seed: u64, options: &SamplerOptions) -> Result<ClanStats> {
    if network.is_empty() {
        return Err(Error::InsufficientSamples("network has no neurons".into()));
    }
    let nbhd = network.neighborhoods(options.policy.into());
    let (sizes, bound) = match network.kind() {
        ModelKind::Saturation => {
            let decomps = decompose_all(network, &nbhd, options.mode)?;
            let gamma = decomps.iter().map(|d| d.activation().lipschitz()).fold(0.0, f64::max);
            let k_max = nbhd.iter().map(|s| s.saturation_level()).max().unwrap_or(0);
            let bound = gamma * conditions::check_saturation(network, &nbhd, k_max, Some(gamma))?.lhs_upper;
            let sizes = replicate(network, n_replicas, seed, options, Model::Saturation(&decomps))?;
            (sizes, bound)
        }
        ModelKind::Cascade => {
            let ctx = CascadeContext::new(network, &nbhd, options.tail_tolerance)?;
            let gamma = conditions::network_gamma(network);
            let k_max = (0..network.len()).map(|i| ctx.saturation_level(i)).max().unwrap_or(0).max(64);
            let bound = gamma * conditions::check_cascade(network, &nbhd, k_max, None)?.lhs_upper;
            let sizes = replicate(network, n_replicas, seed, options, Model::Cascade(&ctx))?;
            (sizes, bound)
        }
    };
    let depth = sizes.iter().map(Vec::len).max().unwrap_or(0);
    let generation_means = (0..depth)
        .map(|n| sizes.iter().map(|g| g.get(n).copied().unwrap_or(0) as f64).collect::<Moments>().summary())
        .collect();
    let offspring = sizes.iter().map(|g| g.first().copied().unwrap_or(0) as f64).collect::<Moments>().summary();
    let mut n_stop_histogram = BTreeMap::new();
    for g in &sizes {
        *n_stop_histogram.entry(g.len() + 1).or_insert(0) += 1;
    }
    Ok(ClanStats { replicas: n_replicas, offspring, generation_means, n_stop_histogram, bound })
}

/// Generation sizes of one clan per replica.
fn replicate(
    network: &Network,
    n: usize,
    seed: u64,
    options: &SamplerOptions,
    model: Model<'_>,
) -> Result<Vec<Vec<usize>>> {
    (0..n)
        .into_par_iter()
        .map(|r| {
            let prm = Prm::with_window_length(network, replica_seed(seed, r as u64), options.window_length)
                .with_back_scan_cap(options.back_scan_cap);
            let sampler = Sampler::build(network, &prm, model, options.clone());
            let Some(root) = first_root(&sampler, r % network.len())? else {
                return Ok(Vec::new());
            };
            let clan = sampler.clan(root)?;
            Ok(clan.generations.iter().map(Vec::len).collect())
        })
        .collect()
}

/// The first jump at or after time 0 of `neuron` that needs a clan.
fn first_root(sampler: &Sampler<'_>, neuron: usize) -> Result<Option<Site>> {
    let prm = sampler.prm;
    let filter = match sampler.network.kind() {
        ModelKind::Saturation if sampler.network.neuron(neuron).d() >= 1.0 => return Ok(None),
        ModelKind::Saturation => JumpFilter::NonSpontaneous,
        ModelKind::Cascade => JumpFilter::All,
    };
    let l = prm.window_length();
    for w in 0..prm.back_scan_cap() {
        if let Some(s) = prm.sites_in(neuron, w as f64 * l, (w + 1) as f64 * l, filter).first() {
            return Ok(Some(*s));
        }
    }
    Err(Error::InsufficientSamples(format!("no eligible jump of neuron {neuron} found")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{cascade_net, e1, saturation_net};
    use crate::model::RateFunction;
    use crate::stats::mean_se;

    fn constant_phi(level: f64, lambda: f64, delta: f64) -> Network {
        let mut c = saturation_net(&[(0, lambda, 0.1)], &[]).to_config();
        c.neurons[0].phi = RateFunction::clipped_affine(level, 0.0);
        c.neurons[0].delta = Some(delta);
        crate::build_network(&c).unwrap()
    }

    fn sat_sampler_parts(net: &Network, mode: ResidualMode) -> Vec<SatDecomposition> {
        decompose_all(net, &net.neighborhoods(NeighborhoodPolicy::Influence), mode).unwrap()
    }

    #[test]
    fn empty_window_is_empty() {
        let s = perfect_sample(&e1(0.1, 1), (3.0, 3.0), 1, &SamplerOptions::default()).unwrap();
        assert!(s.records.is_empty());
        assert!(s.n_stop_histogram.is_empty());
        assert!(perfect_sample(&e1(0.1, 1), (3.0, 2.0), 1, &SamplerOptions::default()).is_err());
    }

    #[test]
    fn residual_acceptance_of_isolated_neuron() {
        // φ ≡ 0.5, d = 0.2: non-spontaneous jumps are accepted with probability 0.375
        let net = constant_phi(0.5, 1.0, 0.2);
        let decomps = sat_sampler_parts(&net, ResidualMode::Strict);
        let prm = Prm::new(&net, 17);
        let sampler = Sampler::saturation(&net, &prm, &decomps, SamplerOptions::default());
        let roots = prm.sites_in(0, 0.0, 125_000.0, JumpFilter::NonSpontaneous);
        assert!(roots.len() > 90_000);
        let xs: Vec<f64> = roots
            .iter()
            .map(|&r| {
                let (rec, clan) = sampler.sample_root(r).unwrap();
                assert_eq!(clan.level, Some(0));
                assert_eq!(clan.n_stop(), 1);
                rec.accepted as u8 as f64
            })
            .collect();
        let m = mean_se(&xs);
        assert!((m.mean - 0.375).abs() < 3.0 * m.se, "{m:?}");
    }

    #[test]
    fn level_frequencies_follow_weights() {
        // clamp mode decomposes φ itself: μ = (0.8, 0, 0.2) on E1
        let net = e1(1.0, 2);
        let decomps = sat_sampler_parts(&net, ResidualMode::Clamp);
        let prm = Prm::new(&net, 3);
        let sampler = Sampler::saturation(&net, &prm, &decomps, SamplerOptions::default());
        let roots = prm.sites_in(0, 0.0, 125_000.0, JumpFilter::NonSpontaneous);
        let mut counts = [0usize; 3];
        for r in &roots {
            counts[sampler.level(*r).unwrap().unwrap()] += 1;
        }
        let n = roots.len() as f64;
        assert_eq!(counts[1], 0);
        let p2 = counts[2] as f64 / n;
        assert!((p2 - 0.2).abs() < 3.0 * (0.2 * 0.8 / n).sqrt(), "{p2}");
    }

    #[test]
    fn zero_weight_rate_matches_phi_at_zero() {
        let net = saturation_net(&[(0, 1.0, 0.1), (1, 2.0, 0.2)], &[]);
        let horizon = 10_000.0;
        let s = perfect_sample(&net, (0.0, horizon), 5, &SamplerOptions::default()).unwrap();
        for (id, lambda) in [(0u32, 1.0), (1, 2.0)] {
            let count = s.spike_count(id) as f64;
            let expected = lambda * 0.3 * horizon;
            assert!((count - expected).abs() < 3.0 * expected.sqrt(), "{id}: {count} vs {expected}");
        }
        assert!(s.n_stop_histogram.keys().all(|&n| n == 1));
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let net = saturation_net(
            &[(0, 1.0, 0.1), (1, 1.5, 0.2), (2, 0.8, 0.1)],
            &[(1, 0, 0.4, 2), (2, 0, -0.3, 1), (0, 1, 0.5, 1), (2, 1, 0.2, 2), (0, 2, 0.3, 1)],
        );
        let run = |threads| {
            let opts = SamplerOptions { threads: Some(threads), ..SamplerOptions::default() };
            perfect_sample(&net, (0.0, 100.0), 99, &opts).unwrap()
        };
        let one = run(1);
        assert_eq!(one, run(8));
        assert_eq!(one, run(1));
        assert!(one.records.iter().any(|r| r.accepted));
        assert_ne!(one.records, perfect_sample(&net, (0.0, 100.0), 100, &SamplerOptions::default()).unwrap().records);
    }

    #[test]
    fn clan_generations_are_disjoint_and_precede_root() {
        let net = saturation_net(
            &[(0, 1.0, 0.05), (1, 1.0, 0.05), (2, 1.0, 0.05)],
            &[(1, 0, 1.0, 2), (2, 0, 1.0, 2), (0, 1, 1.0, 2), (2, 1, 1.0, 1), (0, 2, 1.0, 1)],
        );
        let decomps = sat_sampler_parts(&net, ResidualMode::Strict);
        let prm = Prm::new(&net, 11);
        let sampler = Sampler::saturation(&net, &prm, &decomps, SamplerOptions::default());
        let mut deep = 0;
        for root in prm.sites_in(0, 0.0, 50.0, JumpFilter::NonSpontaneous) {
            let clan = sampler.clan(root).unwrap();
            let mut seen = HashSet::new();
            for (n, g) in clan.generations.iter().enumerate() {
                assert!(!g.is_empty());
                for s in g {
                    assert!(s.time < root.time);
                    assert!(!s.spontaneous);
                    assert!(seen.insert(s.key), "site repeated across generations");
                    if n > 0 {
                        let parents = &clan.generations[n - 1];
                        assert!(parents.iter().any(|p| sampler.first_generation(*p).unwrap().contains(s)));
                    }
                }
            }
            deep = deep.max(clan.n_stop());
            sampler.resolve(&clan).unwrap();
        }
        assert!(deep > 2, "expected some multi-generation clans");
    }

    #[test]
    fn decisions_do_not_depend_on_root_order() {
        let net = saturation_net(&[(0, 1.0, 0.05), (1, 1.0, 0.05)], &[(1, 0, 1.0, 2), (0, 1, -1.0, 2)]);
        let decomps = sat_sampler_parts(&net, ResidualMode::Strict);
        let prm = Prm::new(&net, 23);
        let a = Sampler::saturation(&net, &prm, &decomps, SamplerOptions::default());
        let b = Sampler::saturation(&net, &prm, &decomps, SamplerOptions::default());
        let mut roots: Vec<Site> =
            (0..2).flat_map(|i| prm.sites_in(i, 0.0, 40.0, JumpFilter::NonSpontaneous)).collect();
        for r in &roots {
            a.sample_root(*r).unwrap();
        }
        roots.reverse();
        for r in &roots {
            b.sample_root(*r).unwrap();
        }
        let mut shared = 0;
        for entry in a.decisions.iter() {
            if let Some(other) = b.decision(*entry.key()) {
                assert_eq!(*entry.value(), other);
                shared += 1;
            }
        }
        assert!(shared >= roots.len());
    }

    #[test]
    fn clamp_mode_reports_clamping() {
        // on E1 with W = 1, K = 2 the level-2 law at count 0 is 0 < d
        let net = e1(1.0, 2);
        let clamp = SamplerOptions { mode: ResidualMode::Clamp, ..SamplerOptions::default() };
        let s = perfect_sample(&net, (0.0, 300.0), 8, &clamp).unwrap();
        assert!(s.clamp_events > 0);
        let strict = perfect_sample(&net, (0.0, 300.0), 8, &SamplerOptions::default()).unwrap();
        assert_eq!(strict.clamp_events, 0);
    }

    #[test]
    fn generation_cap_is_raised() {
        let net = saturation_net(&[(0, 1.0, 0.01), (1, 1.0, 0.01)], &[(1, 0, 1.0, 2), (0, 1, 1.0, 2)]);
        let opts = SamplerOptions { max_sites: 3, ..SamplerOptions::default() };
        let r = perfect_sample(&net, (0.0, 50.0), 2, &opts);
        assert!(matches!(r, Err(Error::GenerationCapExceeded { .. })), "{r:?}");
    }

    #[test]
    fn cascade_zero_weights_and_extinction() {
        let net = cascade_net(&[(0, 0), (1, 1)], &[], 0.3, 0.2, 2.0);
        let s = perfect_sample(&net, (0.0, 3000.0), 4, &SamplerOptions::default()).unwrap();
        for id in [0, 1] {
            let c = s.spike_count(id) as f64;
            assert!((c - 900.0).abs() < 3.0 * 900f64.sqrt(), "{c}");
        }
        assert!(s.horizon.is_some() && s.tail_tolerance == Some(DEFAULT_TAIL_TOLERANCE));

        let silent = cascade_net(&[(0, 0), (1, 1)], &[(0, 1, 0.5)], 0.0, 0.2, 2.0);
        let s = perfect_sample(&silent, (0.0, 500.0), 4, &SamplerOptions::default()).unwrap();
        assert!(!s.records.is_empty());
        assert_eq!(s.accepted().count(), 0);
    }

    #[test]
    fn cascade_clans_terminate() {
        let net = cascade_net(&[(0, 0), (1, 0), (2, 1)], &[(0, 2, 0.4), (1, 2, -0.3)], 0.3, 0.5, 2.0);
        let s = perfect_sample(&net, (0.0, 200.0), 6, &SamplerOptions::default()).unwrap();
        assert!(s.n_stop_histogram.keys().any(|&n| n > 1));
        assert_eq!(s.n_stop_histogram.values().sum::<u64>() as usize, s.records.len());
    }

    #[test]
    fn clan_stats_without_interaction() {
        let net = saturation_net(&[(0, 1.0, 0.1), (1, 1.0, 0.1)], &[]);
        let st = clan_stats(&net, 200, 1, &SamplerOptions::default()).unwrap();
        assert_eq!(st.offspring.mean, 0.0);
        assert!(st.generation_means.is_empty());
        assert_eq!(st.n_stop_histogram.get(&1), Some(&200));
        assert_eq!(st.bound, 0.0);
    }

    #[test]
    fn clan_stats_on_e1_respects_bound() {
        let clamp = SamplerOptions { mode: ResidualMode::Clamp, ..SamplerOptions::default() };
        let st = clan_stats(&e1(0.1, 1), 4000, 9, &clamp).unwrap();
        assert!((st.bound - 0.08).abs() < 1e-12);
        assert!(st.offspring.mean <= st.bound + 3.0 * st.offspring.se, "{:?}", st.offspring);
    }
}
