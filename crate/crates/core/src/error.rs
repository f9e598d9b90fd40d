use std::io;

use thiserror::Error;

use crate::ledger::CostLedger;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed numeric input (non-finite entries, wrong shapes).
    #[error("invalid input: {0}")]
    Input(String),

    /// A parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A caller-side precondition of an emulated subroutine does not hold.
    #[error("contract violated: {0}")]
    Contract(String),

    /// The requested computation exceeds a hard resource cap.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// The gap search reached its minimum width without a detection.
    #[error("no gap detected down to width {gap_min:e}")]
    NotFound { gap_min: f64, ledger: CostLedger },

    /// No grid point of the refinement stage was certified inside the gap.
    #[error("no in-gap grid point detected among {points} probes")]
    DetectionFailed { points: usize, ledger: CostLedger },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Negated so that NaN parameters fail their range checks.
macro_rules! ensure {
    ($cond:expr, $variant:ident, $($fmt:tt)+) => {
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !($cond) {
            return Err($crate::error::Error::$variant(format!($($fmt)+)));
        }
    };
}

pub(crate) use ensure;
