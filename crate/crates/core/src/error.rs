use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("non-finite value produced by {op}")]
    NonFinite { op: &'static str },

    #[error("backward already ran on this tape; build a new tape or reset it")]
    BackwardTwice,

    #[error("backward requires a scalar loss, got shape {0:?}")]
    NotScalar(Vec<usize>),

    #[error("gradients missing: {0}")]
    MissingGradient(String),

    #[error("non-positive generalized Jacobian determinant {value:e} at batch index {index}")]
    NonPositiveDeterminant { index: usize, value: f64 },

    #[error("non-positive metric eigenvalue {value:e} at batch index {index}")]
    NonPositiveEigenvalue { index: usize, value: f64 },

    #[error("unsupported latent dimension {0}: differentiable determinant needs 1 <= l <= 3")]
    LatentDim(usize),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("training diverged at epoch {epoch}, batch {batch}: {detail}")]
    Diverged { epoch: usize, batch: usize, detail: String },

    #[error("parse error at line {line}: {detail}")]
    Parse { line: usize, detail: String },

    #[error("model file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }

    /// Short machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Shape { .. } => "shape",
            Error::NonFinite { .. } => "non_finite",
            Error::BackwardTwice => "backward_twice",
            Error::NotScalar(_) => "not_scalar",
            Error::MissingGradient(_) => "missing_gradient",
            Error::NonPositiveDeterminant { .. } => "non_positive_determinant",
            Error::NonPositiveEigenvalue { .. } => "non_positive_eigenvalue",
            Error::LatentDim(_) => "latent_dim",
            Error::Invalid(_) => "invalid_argument",
            Error::Degenerate(_) => "degenerate",
            Error::Diverged { .. } => "diverged",
            Error::Parse { .. } => "parse",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
