use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("label error: {0}")]
    Label(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("parse error at row {row}, column {col}: cannot read {value:?} as a number")]
    Cell {
        row: usize,
        col: usize,
        value: String,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("matrix has not been validated as symmetric and hollow")]
    NotValidated,

    #[error("matrix failed validation (symmetric: {is_symmetric}, hollow: {is_hollow})")]
    Invalid { is_symmetric: bool, is_hollow: bool },

    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    #[error("symmetric eigensolver did not converge for a {n}x{n} matrix within {max_iterations} iterations (eps = {eps:e})")]
    EigenNonConvergence {
        n: usize,
        max_iterations: usize,
        eps: f64,
    },

    #[error("cannot allocate {bytes} bytes for a {n}x{n} matrix")]
    Resource { n: usize, bytes: usize },

    #[error("thread pool: {0}")]
    ThreadPool(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// True for failures of the numerical routines themselves, as opposed to bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::DegenerateVariance(_) | Error::EigenNonConvergence { .. }
        )
    }
}
