//! Perfect simulation of nonlinear Hawkes processes with variable-length memory.
//!
//! Two model families are supported. In the saturation model a neuron's rate
//! is `ψ_i(Σ_j W_{j→i} min(Z^j(]L_t^i, t[), K_{j→i}))`, where `L_t^i` is the
//! last spike of `i`. In the cascade model neurons sit in layers and the
//! rate is `ψ_i(Σ_j W_{j→i} ∫_{[L_t^i, t[} g_j(t - s) dZ^j_s)`.
//!
//! [`perfect::perfect_sample`] draws an exact sample of the stationary
//! process on a time window. It builds the clan of ancestors of every
//! dominating jump backward in time, then decides them forward. The
//! [`oracle`] module holds independent forward simulators used to check it.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conditions;
pub mod error;
pub mod fixtures;
pub mod kalikow;
pub mod kalikow_cascade;
pub mod kalikow_sat;
pub mod model;
pub mod oracle;
pub mod output;
pub mod perfect;
pub mod prm;
pub mod stats;

pub use conditions::{check, ConditionReport, Verdict};
pub use error::{Error, Result, Violation};
pub use kalikow_sat::ResidualMode;
pub use model::{
    build_network, network_from_json, GrowingNeighborhoods, LeakFunction, ModelKind, NeighborhoodPolicy, Network,
    NetworkConfig, NeuronSpec, RateFunction,
};
pub use oracle::{compare, gillespie_edges, ogata_forward, CompareOptions, CompareReport, ForwardRun, SpikeWindows};
pub use output::{RunManifest, Trajectory, TrajectoryMeta, TrajectoryRecord};
pub use perfect::{clan_stats, perfect_sample, ClanStats, SamplerOptions, SpikeSample};
pub use prm::replica_seed;
