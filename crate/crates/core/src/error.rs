use thiserror::Error;

use crate::types::Role;

/// Errors raised while building, simulating or estimating a model.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("{role} sequence{} has {got} items but horizon needs {needed}", node_suffix(*.node))]
    InputLength {
        role: Role,
        node: Option<usize>,
        needed: usize,
        got: usize,
    },

    #[error("{role} duration at position {index} is {value}; durations must be finite and >= 0")]
    NegativeDuration {
        role: Role,
        index: usize,
        value: f64,
    },

    #[error("invalid model: {0}")]
    InvalidSpec(String),

    #[error("missing service sequence for node {0}")]
    MissingNode(usize),

    #[error("closed system has no customers")]
    EmptyClosedSystem,

    #[error("deadlock: nodes {stalled:?} cannot reach their horizon (produced {produced:?})")]
    Deadlock {
        stalled: Vec<usize>,
        produced: Vec<usize>,
    },

    #[error(
        "under-specified horizon: nodes {stalled:?} starve while nodes {saturated:?} hold customers beyond their horizon (produced {produced:?})"
    )]
    UnderSpecifiedHorizon {
        stalled: Vec<usize>,
        saturated: Vec<usize>,
        produced: Vec<usize>,
    },

    #[error("routing plan of node {node} has no entry for departure {departure}")]
    RoutingExhausted { node: usize, departure: usize },

    #[error("throughput undefined: last departure epoch at node {node} is 0")]
    UndefinedThroughput { node: usize },

    #[error("subset enumeration needs {needed} subsets, guard is {guard}")]
    EnumerationGuard { needed: u128, guard: u128 },

    #[error("need at least {needed} elements, have {got}")]
    InsufficientElements { needed: usize, got: usize },

    #[error("unsupported mapping: {0}")]
    UnsupportedMapping(String),

    #[error("distribution for {0} is not inversion-sampled; antithetic pairing unsupported")]
    UnsupportedPairing(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("node index {node} out of range for {count} nodes")]
    NodeOutOfRange { node: usize, count: usize },

    #[error("path carries no completion epochs")]
    MissingCompletions,

    #[error("horizon {horizon} exceeds path length {len}")]
    HorizonTooLong { horizon: usize, len: usize },

    #[error("measure {measure} is not defined for this model: {reason}")]
    UnsupportedMeasure { measure: String, reason: String },

    #[error("replication {index}: {source}")]
    Replication {
        index: usize,
        #[source]
        source: Box<SimError>,
    },
}

fn node_suffix(node: Option<usize>) -> String {
    match node {
        Some(n) => format!(" of node {n}"),
        None => String::new(),
    }
}

pub type Result<T, E = SimError> = std::result::Result<T, E>;
