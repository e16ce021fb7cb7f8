use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration: bad flag values, unknown keys, out-of-range parameters.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error in `{key}`: {message}")]
    Parse { key: String, message: String },

    /// A config value failed validation; `key` names it.
    #[error("invalid `{key}`: {message}")]
    Invalid { key: String, message: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A coordinate is not an exact dyadic rational at the requested bit depth.
    #[error("precision error: coordinate {value} is not a multiple of 2^-{bit_depth}")]
    Precision { value: f64, bit_depth: u32 },

    #[error("unsupported dimension: expected {expected}, got {got}")]
    UnsupportedDimension { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("work estimate {estimate} exceeds limit {limit}")]
    TooMuchWork { estimate: u128, limit: u128 },

    #[error("resource error: {0}")]
    Resource(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code: 1 for invalid input, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Parse { .. }
            | Error::Invalid { .. }
            | Error::Precondition(_)
            | Error::Precision { .. }
            | Error::UnsupportedDimension { .. }
            | Error::Domain(_) => 1,
            Error::TooMuchWork { .. } | Error::Resource(_) | Error::Io(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
