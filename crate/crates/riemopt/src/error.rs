use std::path::PathBuf;

use crate::geometry::Point;

/// Which half of a min-max round a failure came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Block {
    X,
    Y,
}

impl std::fmt::Display for Block {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Block::X => f.write_str("x"),
            Block::Y => f.write_str("y"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("non-finite value: {0}")]
    Numeric(String),

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error(
        "iteration budget of {budget} exhausted: best certificate {best_certificate:e}, requested {requested:e}"
    )]
    BudgetExhausted {
        budget: usize,
        best_certificate: f64,
        requested: f64,
        best_point: Box<Point>,
    },

    #[error("round {round}{}: {source}", block.map(|b| format!(" ({b} block)")).unwrap_or_default())]
    Round {
        round: usize,
        block: Option<Block>,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl Error {
    pub(crate) fn in_round(self, round: usize, block: Option<Block>) -> Error {
        Error::Round {
            round,
            block,
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Error {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
