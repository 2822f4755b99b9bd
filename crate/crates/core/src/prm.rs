//! The dominating Poisson random measure.
//!
//! Each neuron `i` carries a Poisson stream of rate `Λ_i`, generated lazily
//! one window `[w·L, (w+1)·L)` at a time. A window's content depends only on
//! `(seed, neuron, window)`, so it can be materialized in any order, from any
//! thread, and always comes out the same. Every jump carries a uniform mark;
//! in the saturation model a jump is spontaneous iff its mark is below
//! `d_i = δ_i / Λ_i`.

use std::sync::Arc;

use dashmap::DashMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::model::Network;

/// Default number of windows scanned backward before giving up on `L̂`.
pub const DEFAULT_BACK_SCAN_CAP: u64 = 100_000;

const TAG_CELL: u64 = 0x43454c4c;
const TAG_SITE: u64 = 0x53495445;
const TAG_REPLICA: u64 = 0x5245504c;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes a sequence of words into a ChaCha seed.
fn stream(words: &[u64]) -> ChaCha8Rng {
    let mut h = 0x6a09_e667_f3bc_c908u64;
    for &w in words {
        h = splitmix(h ^ w);
    }
    let mut seed = [0u8; 32];
    for (k, chunk) in seed.chunks_mut(8).enumerate() {
        h = splitmix(h.wrapping_add(k as u64));
        chunk.copy_from_slice(&h.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// Seed of replica `r` derived from a master seed.
pub fn replica_seed(master: u64, replica: u64) -> u64 {
    splitmix(splitmix(master ^ TAG_REPLICA).wrapping_add(replica))
}

/// A dominating jump, identified by neuron, window and position in the window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SiteKey {
    pub neuron: u32,
    pub window: i64,
    pub slot: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Site {
    pub key: SiteKey,
    pub time: f64,
    pub spontaneous: bool,
}

impl Site {
    pub fn neuron(&self) -> usize {
        self.key.neuron as usize
    }
}

/// Jumps of one neuron in one window.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub times: Vec<f64>,
    pub marks: Vec<f64>,
    pub spontaneous: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpFilter {
    All,
    Spontaneous,
    NonSpontaneous,
}

impl JumpFilter {
    fn keeps(self, spontaneous: bool) -> bool {
        match self {
            JumpFilter::All => true,
            JumpFilter::Spontaneous => spontaneous,
            JumpFilter::NonSpontaneous => !spontaneous,
        }
    }
}

#[derive(Debug)]
pub struct Prm {
    seed: u64,
    window_length: f64,
    lambdas: Vec<f64>,
    d: Vec<f64>,
    back_scan_cap: u64,
    cells: DashMap<(usize, i64), Arc<Cell>>,
}

impl Prm {
    pub fn new(network: &Network, seed: u64) -> Self {
        Self::with_window_length(network, seed, 1.0)
    }

    pub fn with_window_length(network: &Network, seed: u64, window_length: f64) -> Self {
        assert!(window_length > 0.0, "window length must be positive");
        Self {
            seed,
            window_length,
            lambdas: network.neurons().iter().map(|n| n.lambda).collect(),
            d: network.neurons().iter().map(|n| n.d()).collect(),
            back_scan_cap: DEFAULT_BACK_SCAN_CAP,
            cells: DashMap::new(),
        }
    }

    pub fn with_back_scan_cap(mut self, cap: u64) -> Self {
        self.back_scan_cap = cap;
        self
    }

    pub fn back_scan_cap(&self) -> u64 {
        self.back_scan_cap
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn window_length(&self) -> f64 {
        self.window_length
    }

    pub fn neuron_count(&self) -> usize {
        self.lambdas.len()
    }

    pub fn window_of(&self, t: f64) -> i64 {
        (t / self.window_length).floor() as i64
    }

    /// Number of cells materialized so far.
    pub fn cached_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn sample_cell(&self, neuron: usize, window: i64) -> Result<Arc<Cell>> {
        if neuron >= self.lambdas.len() {
            return Err(Error::UnknownNeuron(neuron));
        }
        Ok(self.cell(neuron, window))
    }

    pub(crate) fn cell(&self, neuron: usize, window: i64) -> Arc<Cell> {
        if let Some(c) = self.cells.get(&(neuron, window)) {
            return c.clone();
        }
        let cell = Arc::new(self.generate(neuron, window));
        self.cells.entry((neuron, window)).or_insert(cell).clone()
    }

    fn generate(&self, neuron: usize, window: i64) -> Cell {
        let mut rng = stream(&[self.seed, TAG_CELL, neuron as u64, window as u64]);
        let mean = self.lambdas[neuron] * self.window_length;
        let count = if mean > 0.0 { Poisson::new(mean).expect("positive mean").sample(&mut rng) as usize } else { 0 };
        let start = window as f64 * self.window_length;
        let end = (window + 1) as f64 * self.window_length;
        let mut times: Vec<f64> = (0..count)
            .map(|_| {
                let t = start + rng.random::<f64>() * self.window_length;
                if t >= end {
                    end.next_down()
                } else {
                    t
                }
            })
            .collect();
        times.sort_by(f64::total_cmp);
        let marks: Vec<f64> = (0..count).map(|_| rng.random::<f64>()).collect();
        let d = self.d[neuron];
        let spontaneous = marks.iter().map(|&m| m < d).collect();
        Cell { times, marks, spontaneous }
    }

    /// Jumps of `neuron` in `[a, b)` of the requested kind, in time order.
    pub fn sites_in(&self, neuron: usize, a: f64, b: f64, filter: JumpFilter) -> Vec<Site> {
        let mut out = Vec::new();
        if !(a < b) {
            return out;
        }
        for w in self.window_of(a)..=self.window_of(b) {
            let cell = self.cell(neuron, w);
            for (slot, &t) in cell.times.iter().enumerate() {
                if t >= a && t < b && filter.keeps(cell.spontaneous[slot]) {
                    out.push(Site {
                        key: SiteKey { neuron: neuron as u32, window: w, slot: slot as u32 },
                        time: t,
                        spontaneous: cell.spontaneous[slot],
                    });
                }
            }
        }
        out
    }

    pub fn jumps_in(&self, neuron: usize, a: f64, b: f64, filter: JumpFilter) -> Vec<f64> {
        self.sites_in(neuron, a, b, filter).into_iter().map(|s| s.time).collect()
    }

    pub fn site(&self, key: SiteKey) -> Site {
        let cell = self.cell(key.neuron as usize, key.window);
        let slot = key.slot as usize;
        Site { key, time: cell.times[slot], spontaneous: cell.spontaneous[slot] }
    }

    /// The last spontaneous jump of `neuron` strictly before `t`.
    pub fn last_spontaneous_before(&self, neuron: usize, t: f64) -> Result<f64> {
        let w0 = self.window_of(t);
        for back in 0..self.back_scan_cap {
            let w = w0 - back as i64;
            let cell = self.cell(neuron, w);
            for slot in (0..cell.times.len()).rev() {
                if cell.times[slot] < t && cell.spontaneous[slot] {
                    return Ok(cell.times[slot]);
                }
            }
        }
        let delta = self.d[neuron] * self.lambdas[neuron];
        Err(Error::BackScanExhausted {
            neuron,
            time: t,
            windows: self.back_scan_cap,
            probability: (-delta * self.back_scan_cap as f64 * self.window_length).exp(),
        })
    }

    /// The private random stream of a site, used for its level and decision draws.
    pub fn site_rng(&self, key: SiteKey) -> ChaCha8Rng {
        stream(&[self.seed, TAG_SITE, key.neuron as u64, key.window as u64, key.slot as u64])
    }
}
