use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    Dimension(String),
    #[error("invalid entry at ({row}, {col}): {reason}")]
    InvalidEntry {
        row: usize,
        col: usize,
        reason: &'static str,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("row {0} has no nonzeros; its dual weight would be zero")]
    EmptyRow(usize),
    #[error("power iteration did not converge after {0} iterations")]
    NoConvergence(usize),
    #[error("objective became non-finite at epoch {epoch}; beta or mu is probably too small")]
    NonFinite { epoch: usize },
}
