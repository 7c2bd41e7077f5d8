use thiserror::Error;

/// Errors produced while building, synthesizing, running or lowering walks.
#[derive(Debug, Error)]
pub enum Error {
    #[error("prescribed columns {first} and {second} are not orthonormal (inner product {inner})")]
    NonOrthonormalInput {
        first: usize,
        second: usize,
        inner: f64,
    },

    #[error("block is not unitary: max |U^dag U - I| = {deviation:e}")]
    NonUnitary { deviation: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("amplitude at {position:?} with coin {coin} would leave the grid [0, {d})")]
    OutOfGrid {
        position: Vec<usize>,
        coin: usize,
        d: usize,
    },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("inconsistent intermediate amplitudes at {position:?}: prescribed column has norm {norm}")]
    InconsistentAmplitudes { position: Vec<usize>, norm: f64 },

    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("operation requires a bipartite system, got {0} parties")]
    NotBipartite(usize),

    #[error("non-identity block at {position:?} is off the level-{level} frontier")]
    NonFrontierBlock { level: usize, position: Vec<usize> },

    #[error("coin register not restored to |0..0> after step {step} (residual mass {residual:e})")]
    CoinNotCollapsed { step: usize, residual: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
