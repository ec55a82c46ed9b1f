use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("particle index {index} out of range for {count} particle(s)")]
    ParticleIndex { index: usize, count: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("numerically null state (norm {0:e})")]
    NullState(f64),

    #[error("flash position {0:?} lies outside the grid")]
    FlashOutsideGrid(Vec<f64>),

    #[error("flash position rejected {0} times in a row; grid too small for r_C")]
    SamplingRejected(usize),

    #[error("undefined phase: {0}")]
    UndefinedPhase(String),

    #[error("state space of {size} basis points exceeds the density-matrix cap of {cap}")]
    StateTooLarge { size: usize, cap: usize },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("flash quadrature under-resolved: {0}")]
    UnderResolved(String),

    #[error("step control failure: {0}")]
    StepControl(String),

    #[error("no kernel value for separation {0}")]
    MissingKernel(f64),

    #[error("regime violated: {0}")]
    Regime(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
