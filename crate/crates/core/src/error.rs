use thiserror::Error;

use crate::tree::TreeViolation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("newick: {0}")]
    Newick(String),

    #[error("invalid point label {0:?}")]
    InvalidLabel(String),

    #[error("duplicate point {0:?} within a tuple")]
    DuplicatePoint(String),

    #[error("tuples of mixed size ({expected} and {found})")]
    MixedArity { expected: usize, found: usize },

    #[error("labeled and unlabeled lines cannot be mixed")]
    MixedLabeling,

    #[error("empty input")]
    Empty,

    #[error("point {0} is not a leaf of the tree")]
    PointNotInTree(usize),

    #[error("point index {index} out of range for {len} points")]
    PointOutOfRange { index: usize, len: usize },

    #[error("a {what} needs distinct points")]
    NotDistinct { what: &'static str },

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("invalid tree: {0}")]
    InvalidTree(TreeViolation),

    #[error("constraint kind not supported here: {0}")]
    Unsupported(String),

    #[error("{cap} exceeded: {detail}")]
    Budget { cap: &'static str, detail: String },

    #[error("version space is empty: the label sequence is not realizable")]
    EmptyVersionSpace,

    #[error("{0}")]
    Invalid(String),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn budget(cap: &'static str, detail: impl Into<String>) -> Self {
        Error::Budget {
            cap,
            detail: detail.into(),
        }
    }

    /// True for cap/budget violations (the CLI maps these to their own exit code).
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::Budget { .. })
    }
}

impl From<TreeViolation> for Error {
    fn from(v: TreeViolation) -> Self {
        Error::InvalidTree(v)
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
