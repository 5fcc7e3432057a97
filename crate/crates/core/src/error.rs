use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("sparsity is undefined for a graph with no users or no objects")]
    UndefinedSparsity,

    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("user index {user} out of range (num_users={num_users})")]
    UserOutOfRange { user: usize, num_users: usize },

    #[error("cold start: user {user} has no training links")]
    ColdStart { user: usize },

    #[error("dense oracle refused: {n} objects exceeds cap {cap}")]
    OracleTooLarge { n: usize, cap: usize },

    #[error("corrupt split file: {0}")]
    Corruption(String),

    #[error("split validation failed: {0}")]
    Validation(String),

    #[error("nothing to evaluate: {0}")]
    EmptyEvaluation(String),

    #[error("every sweep point failed")]
    EmptySweep,
}
