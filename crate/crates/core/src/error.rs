use thiserror::Error;

/// Errors raised by tensor-train arithmetic, assembly and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid shape: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dense conversion needs {size} entries, cap is {cap}")]
    SizeCap { size: usize, cap: usize },

    #[error("Hermite degree {degree} exceeds the supported maximum {max}")]
    DegreeTooLarge { degree: usize, max: usize },

    #[error("local system at core {core} is singular")]
    SingularLocal { core: usize },

    #[error("rank {rank} exceeds the cap {cap} during {stage}")]
    RankCap {
        rank: usize,
        cap: usize,
        stage: &'static str,
    },

    #[error("reduced least-squares system is rank deficient (rank {rank} of {cols})")]
    RankDeficient { rank: usize, cols: usize },

    #[error("quadrature unresolved: order {order} gives {coarse}, order {fine} gives {refined}")]
    QuadratureUnresolved {
        order: usize,
        fine: usize,
        coarse: f64,
        refined: f64,
    },

    #[error("kernel matrix is not positive semidefinite (eigenvalue {value:e}, largest {largest:e})")]
    NotPsd { value: f64, largest: f64 },

    #[error("sample {index}: {message}")]
    Sample { index: usize, message: String },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
