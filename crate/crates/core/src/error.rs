use thiserror::Error;

/// Errors raised anywhere in the library.
///
/// The variants group into the four exit-code classes used by the command
/// line: configuration/design problems, data problems, numerical failures,
/// and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid design: {0}")]
    Design(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("ingestion failed at row {row}: {message}")]
    Ingestion { row: usize, message: String },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("generation failed: {0}")]
    Generation(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Design(_) | Error::Argument(_) | Error::Config(_) | Error::Unsupported(_) => 2,
            Error::DegenerateSample(_)
            | Error::InsufficientData(_)
            | Error::Ingestion { .. }
            | Error::Io(_)
            | Error::Csv(_) => 3,
            Error::Numeric(_) | Error::Generation(_) => 4,
        }
    }
}
