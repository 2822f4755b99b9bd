use std::fmt;

use thiserror::Error;

/// A single reason a network configuration was rejected.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    MissingNeuron { id: u32, context: &'static str },
    DuplicateNeuron { id: u32 },
    SelfLoopWeight { id: u32 },
    NonSummableWeights { id: u32, sum: f64 },
    LayerViolation { from: u32, to: u32, from_layer: i64, to_layer: i64 },
    MissingLayer { id: u32 },
    RateBoundViolation { id: u32, delta: f64, inf_psi: f64 },
    InvalidParameter { id: Option<u32>, message: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingNeuron { id, context } => {
                write!(f, "neuron {id} referenced by {context} is not defined")
            }
            Violation::DuplicateNeuron { id } => write!(f, "neuron {id} is defined twice"),
            Violation::SelfLoopWeight { id } => {
                write!(f, "neuron {id} has a nonzero self weight")
            }
            Violation::NonSummableWeights { id, sum } => {
                write!(f, "incoming weights of neuron {id} are not summable (sum = {sum})")
            }
            Violation::LayerViolation { from, to, from_layer, to_layer } => write!(
                f,
                "edge {from}->{to} goes from layer {from_layer} to layer {to_layer}; \
                 inputs must come from the layer directly above"
            ),
            Violation::MissingLayer { id } => {
                write!(f, "cascade neuron {id} has no layer assignment")
            }
            Violation::RateBoundViolation { id, delta, inf_psi } => {
                write!(f, "neuron {id}: spontaneous rate {delta} exceeds the smallest reachable rate {inf_psi}")
            }
            Violation::InvalidParameter { id: Some(id), message } => {
                write!(f, "neuron {id}: {message}")
            }
            Violation::InvalidParameter { id: None, message } => f.write_str(message),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid network:{}", format_violations(.0))]
    InvalidNetwork(Vec<Violation>),

    #[error("config error: {0}")]
    Config(String),

    #[error("unknown neuron index {0}")]
    UnknownNeuron(usize),

    #[error("operation requires a {expected} network")]
    WrongModelKind { expected: &'static str },

    #[error("neuron {id} has zero spontaneous rate")]
    ZeroDelta { id: u32 },

    #[error("leak function is not integrable: {0}")]
    NonIntegrableLeak(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("edge count {count} from neuron {from} exceeds its threshold {threshold}")]
    OutOfRange { from: usize, count: u32, threshold: u32 },

    #[error("enumeration budget of {budget} nodes exceeded at level {level}")]
    EnumerationBudgetExceeded { level: usize, budget: u64 },

    #[error(
        "no spontaneous jump of neuron {neuron} within {windows} windows before t = {time} \
         (probability of this event is about {probability:e})"
    )]
    BackScanExhausted { neuron: usize, time: f64, windows: u64, probability: f64 },

    #[error("history horizon too short: tail error {tail} exceeds tolerance {tolerance}")]
    HorizonTooShort { tail: f64, tolerance: f64 },

    #[error("clan of ancestors exceeded its cap ({what})")]
    GenerationCapExceeded { what: String },

    #[error("forward sweep made no progress with {pending} sites pending")]
    Deadlock { pending: usize },

    #[error("probability {value} outside [0, 1] at neuron {neuron}, level {level}")]
    InvalidProbability { value: f64, neuron: usize, level: usize },

    #[error("not enough samples: {0}")]
    InsufficientSamples(String),

    #[error("non-finite rate {rate} for neuron {neuron}")]
    NonFiniteRate { neuron: usize, rate: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|x| format!("\n  - {x}")).collect()
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
