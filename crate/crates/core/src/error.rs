use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error in field `{field}`: {reason}")]
    Parse { field: String, reason: String },

    #[error("frame {0} is not in the history")]
    MissingFrame(u64),

    #[error("stream order violated: frame {got} does not follow frame {last}")]
    StreamOrder { last: u64, got: u64 },

    #[error("generation failed: {0}")]
    Generation(String),

    #[error("harvest failed: {0}")]
    Harvest(String),

    #[error("no saved pose to return to")]
    NoSavedPose,

    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dim(context: &'static str, expected: usize, actual: usize) -> Self {
        Error::Dimension {
            context,
            expected,
            actual,
        }
    }

    pub(crate) fn parse(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parse {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
