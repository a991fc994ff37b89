use thiserror::Error;

/// Errors raised across scenario generation, the solvers and the protocol simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration field `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("degenerate geometry: user {user} is colocated with BS {bs}")]
    DegenerateGeometry { bs: usize, user: usize },

    #[error("layout does not match configuration: {0}")]
    LayoutMismatch(String),

    #[error("channel set is malformed: {0}")]
    MalformedChannels(String),

    #[error("channel set has no estimates or error covariances")]
    MissingEstimates,

    #[error("channel set already carries estimates")]
    AlreadyDegraded,

    #[error("matrix for BS {bs} is not positive definite")]
    NotPositiveDefinite { bs: usize },

    #[error("reduced channels of user {user} are all zero")]
    ZeroChannel { user: usize },

    #[error("singular weight system at BS {bs}")]
    SingularWeights { bs: usize },

    #[error("root of the multiplier equation is not bracketed for user {user}")]
    RootNotBracketed { user: usize },

    #[error("no feasible point found; best min SINR slack {best_slack:.3e}")]
    Infeasible { best_slack: f64 },

    #[error("oracle failed: {0}")]
    Oracle(String),

    #[error("scenario file: {0}")]
    Scenario(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
