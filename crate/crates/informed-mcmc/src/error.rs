use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied configuration is inconsistent (dimension
    /// mismatches, invalid cluster counts, incompatible sampler/problem
    /// combinations, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// An operand is outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// File I/O or serialization failed.
    #[error("i/o error: {0}")]
    Io(String),

    /// A computation degenerated numerically (all-zero variances, empty
    /// densities, non-finite intermediates).
    #[error("numerical degeneracy: {0}")]
    Degenerate(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
