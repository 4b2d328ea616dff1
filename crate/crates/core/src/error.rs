use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{sequence} sequence exhausted after {consumed} entries")]
    ExhaustedSequence {
        sequence: &'static str,
        consumed: usize,
    },

    #[error("index {index} out of range for {what} of length {len}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("driving path horizon {available} exhausted (needed {needed})")]
    HorizonExhausted { needed: f64, available: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("solution blew up at step {step} (|Z| = {value})")]
    BlowUp { step: usize, value: f64 },

    #[error("bridge SDE stalled at C = {c_end} after {steps} steps")]
    Stalled { steps: usize, c_end: f64 },

    #[error("path has an interior zero at grid index {index}")]
    InteriorZero { index: usize },

    #[error("path is not a bridge: endpoints {start} and {end}")]
    NotABridge { start: f64, end: f64 },

    #[error("path did not run to completion")]
    IncompletePath,

    #[error("insufficient horizon: level {needed} lies above the non-revisit floor {floor}")]
    InsufficientHorizon { needed: f64, floor: f64 },

    #[error("horizon cap {cap} exceeded")]
    HorizonCapExceeded { cap: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
