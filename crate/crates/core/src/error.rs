use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("MPS parse error at line {line}: {message}")]
    Mps { line: usize, message: String },

    #[error("dimension mismatch in {context}: expected {expected}, got {found}")]
    Dimension {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid linear program: {0}")]
    InvalidModel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("basis is singular; dependent basis columns {dependent:?}")]
    SingularBasis { dependent: Vec<usize> },

    #[error("basis file error at line {line}: {message}")]
    BasisFile { line: usize, message: String },

    #[error("problem is unbounded along column {column}")]
    Unbounded { column: usize },

    #[error("problem is primal infeasible (total infeasibility {infeasibility:e})")]
    Infeasible { infeasibility: f64 },

    #[error("numerical failure at iteration {iteration}: {message}")]
    Numerical { iteration: usize, message: String },

    #[error("unknown report format `{0}`")]
    UnknownFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension {
            context,
            expected,
            found,
        })
    }
}
