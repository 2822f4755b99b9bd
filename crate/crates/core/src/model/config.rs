//! JSON network description and lattice pattern expansion.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::functions::{LeakFunction, RateFunction};
use super::ModelKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub model_kind: ModelKind,
    #[serde(default)]
    pub neurons: Vec<NeuronConfig>,
    #[serde(default)]
    pub edges: Vec<EdgeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layers: Option<BTreeMap<u32, i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<PatternConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeuronConfig {
    pub id: u32,
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub phi: RateFunction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leak: Option<LeakFunction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeConfig {
    pub from: u32,
    pub to: u32,
    pub w: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
}

/// A truncated `sites × layers` lattice of identical cascade neurons.
///
/// Neuron `(layer h, site s)` gets id `h·sites + s` and receives input only
/// from layer `h - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternConfig {
    pub sites: u32,
    pub layers: u32,
    #[serde(default)]
    pub periodic: bool,
    pub lambda: f64,
    pub phi: RateFunction,
    pub leak: LeakFunction,
    pub weights: WeightRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum WeightRule {
    /// Input `w` from the two diagonal neighbours `(h-1, s±1)`.
    NearestPair { w: f64 },
    /// Input `w / |d|^beta` from `(h-1, s+d)` for `1 ≤ |d| ≤ range`.
    PowerLaw { w: f64, beta: f64, range: u32 },
}

impl NetworkConfig {
    /// Parses JSON; syntax errors carry their line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Replaces a `pattern` section by the explicit neurons, edges and layers it describes.
    pub fn expanded(&self) -> Result<NetworkConfig> {
        let Some(p) = &self.pattern else {
            return Ok(self.clone());
        };
        if !self.neurons.is_empty() || !self.edges.is_empty() || self.layers.is_some() {
            return Err(Error::Config("a pattern cannot be combined with explicit neurons, edges or layers".into()));
        }
        if self.model_kind != ModelKind::Cascade {
            return Err(Error::Config("patterns describe cascade networks only".into()));
        }
        if p.sites == 0 || p.layers == 0 {
            return Err(Error::Config("pattern needs at least one site and one layer".into()));
        }
        let id = |h: u32, s: u32| h * p.sites + s;
        let mut neurons = Vec::new();
        let mut layers = BTreeMap::new();
        for h in 0..p.layers {
            for s in 0..p.sites {
                neurons.push(NeuronConfig {
                    id: id(h, s),
                    lambda: p.lambda,
                    delta: None,
                    phi: p.phi.clone(),
                    leak: Some(p.leak.clone()),
                });
                layers.insert(id(h, s), h as i64);
            }
        }
        let offsets: Vec<(i64, f64)> = match p.weights {
            WeightRule::NearestPair { w } => vec![(-1, w), (1, w)],
            WeightRule::PowerLaw { w, beta, range } => (1..=range as i64)
                .flat_map(|d| {
                    let v = w / (d as f64).powf(beta);
                    [(-d, v), (d, v)]
                })
                .collect(),
        };
        let mut edges = Vec::new();
        for h in 1..p.layers {
            for s in 0..p.sites {
                let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
                for &(d, w) in &offsets {
                    let src = s as i64 + d;
                    let src = if p.periodic {
                        src.rem_euclid(p.sites as i64)
                    } else if (0..p.sites as i64).contains(&src) {
                        src
                    } else {
                        continue;
                    };
                    *acc.entry(id(h - 1, src as u32)).or_insert(0.0) += w;
                }
                for (from, w) in acc {
                    edges.push(EdgeConfig { from, to: id(h, s), w, k: None });
                }
            }
        }
        Ok(NetworkConfig { model_kind: ModelKind::Cascade, neurons, edges, layers: Some(layers), pattern: None })
    }
}
