use thiserror::Error;

/// Errors raised anywhere in the library.
///
/// Each variant belongs to one of three families (configuration, degeneracy,
/// I/O) which the CLI maps to its exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate weights: {0}")]
    DegenerateWeights(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("degenerate bootstrap sample: {0}")]
    DegenerateBootstrapSample(String),

    #[error("unsupported paradigm: {0}")]
    UnsupportedParadigm(String),

    #[error("unsupported mode: {0}")]
    UnsupportedMode(String),

    #[error(
        "infeasible quantile: l = floor(alpha*(B+1)) = {l} is outside 1..={b} for alpha = {alpha}; use B >= {min_b}"
    )]
    InfeasibleQuantile {
        alpha: f64,
        b: usize,
        l: usize,
        min_b: usize,
    },

    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("experiment error: {0}")]
    Experiment(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("I/O error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used for process exit codes and C error codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Degenerate,
    Io,
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidArgument(_)
            | Error::Domain(_)
            | Error::UnsupportedParadigm(_)
            | Error::UnsupportedMode(_)
            | Error::InfeasibleQuantile { .. }
            | Error::Config { .. } => ErrorClass::Config,
            Error::DegenerateWeights(_)
            | Error::DegenerateSample(_)
            | Error::DegenerateBootstrapSample(_)
            | Error::Experiment(_)
            | Error::Invariant(_) => ErrorClass::Degenerate,
            Error::Io(_) => ErrorClass::Io,
        }
    }

    /// Process exit code: 2 config, 3 experiment degeneracy, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self.class() {
            ErrorClass::Config => 2,
            ErrorClass::Degenerate => 3,
            ErrorClass::Io => 4,
        }
    }

    /// Whether this error marks a per-replicate degeneracy that studies count
    /// rather than propagate.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Error::DegenerateWeights(_) | Error::DegenerateSample(_) | Error::DegenerateBootstrapSample(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
