use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("white noise has no pointwise correlation kernel")]
    NoPointwiseKernel,
    #[error("evaluation at a singular point of the kernel or its spectral density")]
    SingularPoint,
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),
    #[error("integrability condition violated: {0}")]
    ConditionViolated(String),
    #[error("non-finite field value at step {step}")]
    NumericalBlowup { step: usize },
    #[error("noise batch seed {batch} does not match the path seed {path}")]
    SeedMismatch { path: u64, batch: u64 },
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
    #[error("{failed} of {total} paths failed (limit 1%)")]
    EnsembleFailed { failed: usize, total: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed specification `{input}`: {reason}")]
    Parse { input: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
