use std::fmt;

use crate::spaces::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Inconsistent configuration: mismatched dimensions, kinds, metrics or parameters.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid explanation set: {}", ViolationList(.0))]
    Validation(Vec<Violation>),

    /// All explanations are zero, so the baseline ball would collapse to a point.
    #[error("degenerate radius: every explanation has zero norm, baseline ball needs k > 0")]
    DegenerateRadius,

    #[error("exact solver supports at most {cap} points per measure, got {n}; use the sinkhorn or sliced solver")]
    TooLarge { n: usize, cap: usize },

    #[error("training diverged: {0}")]
    Training(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

struct ViolationList<'a>(&'a [Violation]);

impl fmt::Display for ViolationList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}
