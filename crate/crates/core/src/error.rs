use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("spherical harmonic order out of range: |m| = {m} > n = {n}")]
    Domain { n: usize, m: i64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (relative asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("degenerate point set: {0}")]
    DegenerateGeometry(String),

    #[error("unknown T-design `{0}`")]
    UnknownDesign(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("spherical harmonic matrix is rank deficient (condition number {kappa:.3e})")]
    RankDeficient { kappa: f64 },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("branch-and-bound node limit reached ({0} nodes)")]
    NodeLimit(u64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used by the command line for exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Infeasible,
    BadInput,
    Numeric,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Infeasible(_) => ErrorKind::Infeasible,
            Error::NotHermitian(_) | Error::RankDeficient { .. } | Error::NodeLimit(_) => ErrorKind::Numeric,
            _ => ErrorKind::BadInput,
        }
    }
}
