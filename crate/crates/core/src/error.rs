use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("image {index} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("image {index} has zero norm")]
    ZeroColumn { index: usize },
    #[error("unknown class id {0}")]
    UnknownClass(usize),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("spike violation: coefficient {index} is {value} while its indicator is 0")]
    SpikeViolation { index: usize, value: f64 },
    #[error("subject {subject} has {available} views, {required} required")]
    InsufficientViews {
        subject: usize,
        available: usize,
        required: usize,
    },
    #[error("class directory {0} contains no readable images")]
    EmptyClass(String),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
