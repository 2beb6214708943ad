use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid subsystem index {index} for {count} subsystems")]
    InvalidSubsystem { index: usize, count: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("trace is {trace}, expected 1")]
    InvalidTrace { trace: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("parameter {name} = {value} outside {range}")]
    ParamOutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("state is not bipartite ({0} subsystems)")]
    NotBipartite(usize),

    #[error("SDP solver failed: {0}")]
    SolverFailure(String),

    #[error("unsupported system for {what}: dims {dims:?}")]
    WrongSystem { what: &'static str, dims: Vec<usize> },

    #[error("schema mismatch: expected {expected}, got {got}")]
    SchemaMismatch { expected: String, got: String },

    #[error("SMO did not converge within {passes} iterations (violation {violation:e})")]
    NonConvergence { passes: usize, violation: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("missing artifacts: {0:?}")]
    MissingArtifacts(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
