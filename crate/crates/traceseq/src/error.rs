use thiserror::Error;

/// Errors produced by the analysis engines.
#[derive(Debug, Error)]
pub enum Error {
    /// An operation received an empty sequence or corpus.
    #[error("empty input")]
    EmptyInput,

    /// A configuration value is out of its legal range.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Input data violates an operation's preconditions.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// The observed information matrix has no inverse (no covariate
    /// variation among events).
    #[error("singular model: no covariate variation among observed events")]
    SingularModel,

    /// A queried token is not in the trained vocabulary.
    #[error("token not in vocabulary: {0}")]
    NotInVocabulary(String),

    /// The transition graph has no edges.
    #[error("graph has no edges")]
    EmptyGraph,

    /// Every token of a trajectory fell outside the vocabulary.
    #[error("trajectory has no in-vocabulary tokens")]
    EmptyTrajectory,

    /// An iterative routine produced non-finite numbers.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
