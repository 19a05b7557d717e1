use thiserror::Error;

/// Errors produced by the core library.
#[derive(Debug, Error)]
pub enum IacnError {
    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },

    #[error("line {line}: inconsistent row format: {msg}")]
    Format { line: u64, msg: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("event at time {time} precedes last processed time {now}")]
    OutOfOrder { time: f64, now: f64 },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("user {0} has no prior interaction")]
    ColdStart(usize),

    #[error("influence record at time {t_v} lies outside the open window ({open}, {close})")]
    WindowViolation { t_v: f64, open: f64, close: f64 },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("checkpoint shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, IacnError>;

pub(crate) fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(IacnError::DimensionMismatch {
            context,
            expected,
            actual,
        });
    }
    Ok(())
}
