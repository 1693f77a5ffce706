use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("contingency table is empty (sample size 0)")]
    EmptyTable,

    #[error("wrong shape: {0}")]
    WrongShape(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("negative count at line {line}")]
    NegativeCount { line: usize },

    #[error("variable index {index} out of range for {p} features")]
    IndexOutOfRange { index: usize, p: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid regularization grid: {0}")]
    InvalidGrid(String),

    #[error("degenerate dataset: {0}")]
    DegenerateDataset(String),

    #[error("stratified folds impossible: {0}")]
    FoldDegenerate(String),

    #[error("rejection budget of {budget} exceeded")]
    RejectionBudgetExceeded { budget: u64 },

    #[error("only {found} pathological draws at N = {n} (need at least {needed})")]
    InsufficientPathologicalDraws { n: u64, found: usize, needed: usize },

    #[error("invalid experiment spec: {0}")]
    InvalidSpec(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// `true` for errors caused by malformed input files.
    pub fn is_parse(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. } | Error::NegativeCount { .. } | Error::Csv(_) | Error::Json(_)
        )
    }
}
