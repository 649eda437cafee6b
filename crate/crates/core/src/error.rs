use thiserror::Error;

use crate::design::Design;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("zero span: every arm vector is (numerically) zero")]
    ZeroSpan,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("rank-deficient input: arms span {rank} of {dim} dimensions (reduce first)")]
    RankDeficient { rank: usize, dim: usize },

    #[error("singular value decomposition did not reach working accuracy")]
    SvdFailed,

    #[error("design does not span: information matrix is singular")]
    DesignNotSpanning,

    #[error("design solver hit the iteration cap ({iterations}) with g = {g_value}")]
    NotConverged {
        best: Box<Design>,
        g_value: f64,
        iterations: usize,
    },

    #[error(
        "could not certify a design with support <= {max_support} after {attempts} attempts \
         (last support {support}, g = {g_value}, target {target})"
    )]
    PruneFailed {
        max_support: usize,
        attempts: usize,
        support: usize,
        g_value: f64,
        target: f64,
    },

    #[error("estimator underdetermined: pulled arm vectors do not span the working space")]
    Underdetermined,

    #[error("arm index {arm} out of range for {k} arms")]
    ArmOutOfRange { arm: usize, k: usize },

    #[error("best arm is not unique")]
    NonUniqueBest,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("budget too small: {0}")]
    BudgetTooSmall(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("instance generation failed after {attempts} attempts: {reason}")]
    GenerationFailed { attempts: usize, reason: String },

    #[error("empty report: nothing to plot")]
    EmptyReport,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
