use thiserror::Error;

/// Errors raised by every layer of the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("resource limit exceeded: {what} needs {required} items, cap is {cap}")]
    ResourceLimit {
        what: String,
        required: u128,
        cap: u128,
    },

    #[error("operator has no left inverse (smallest singular value {sigma_min:e})")]
    NoLeftInverse { sigma_min: f64 },

    #[error("derivative vanishes at a sample point: {0}")]
    SingularDerivative(String),

    #[error("operator is not bounded below: {0}")]
    NotBoundedBelow(String),

    #[error("certificate failed: {condition} (margin {margin:.6e})")]
    CertificateFailed { condition: String, margin: f64 },

    #[error("iteration diverged after {iterations} steps")]
    Divergence { iterations: usize },

    #[error("infeasible problem: {0}")]
    Infeasible(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// An error raised inside one stage of an experiment pipeline.
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Process exit code used by the command line tool.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::CertificateFailed { .. } => 3,
            Error::Divergence { .. } | Error::Infeasible(_) => 4,
            Error::Io(_) => 1,
            _ => 2,
        }
    }

    /// The innermost error beneath any stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage { stage, source: Box::new(self) }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
