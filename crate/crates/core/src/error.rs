use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("moment order {order} exceeds the supported maximum of {max}")]
    UnsupportedOrder { order: u32, max: u32 },

    #[error("invalid distribution parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown component `{0}`")]
    UnknownComponent(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// Raised when two independent computations of the same quantity disagree.
    /// This points at a bug in the expansion code, never at bad user input.
    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),

    #[error("C*t + D is not positive definite at t = {t} (threshold t0 = {t0})")]
    NotPositiveDefinite { t: f64, t0: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported dimension: expected {expected} reward coordinates, model has {found}")]
    UnsupportedDimension { expected: usize, found: usize },

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error(
        "runaway path: replication {replication} of block {block} (master seed {seed}) \
         exceeded {max_cycles} cycles"
    )]
    RunawayPath {
        seed: u64,
        block: u64,
        replication: u64,
        max_cycles: u64,
    },
}
