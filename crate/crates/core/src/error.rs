//! Crate-wide error type.

use thiserror::Error;

use crate::rational::Rational;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot parse rational from {0:?} (expected \"p/q\" or \"p\")")]
    ParseRational(String),

    #[error("dimension mismatch: {left_rows}x{left_cols} incompatible with {right_rows}x{right_cols}")]
    DimensionMismatch {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },

    #[error("matrix is not square: {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },

    #[error("singular matrix: det = {det}")]
    Singular { det: Rational },

    #[error("column index {index} out of range for {cols} columns")]
    ColumnOutOfRange { index: usize, cols: usize },

    #[error("entry count {got} does not match {rows}x{cols}")]
    EntryCount { rows: usize, cols: usize, got: usize },

    #[error("alpha = {alpha} outside allowed range {allowed}")]
    AlphaOutOfRange { alpha: Rational, allowed: &'static str },

    #[error("query range size must be at least 1, got {0}")]
    RangeTooSmall(usize),

    #[error("row {row} sums to {sum}, expected 1")]
    RowSum { row: usize, sum: Rational },

    #[error("negative entry {value} at ({row},{col})")]
    NegativeEntry {
        row: usize,
        col: usize,
        value: Rational,
    },

    #[error("loss not monotone in |i-r| at row {row}: l({row},{nearer}) = {nearer_val} > l({row},{farther}) = {farther_val}")]
    NonMonotoneLoss {
        row: usize,
        nearer: usize,
        farther: usize,
        nearer_val: Rational,
        farther_val: Rational,
    },

    #[error("side information must be a nonempty subset of 0..={max}, got {got:?}")]
    BadSideInfo { max: usize, got: Vec<usize> },

    #[error("true result {got} out of range 0..={max}")]
    ResultOutOfRange { got: usize, max: usize },

    #[error("mechanism is not {alpha}-differentially private: violation at rows ({row},{next_row}), column {col}")]
    NotDifferentiallyPrivate {
        alpha: Rational,
        row: usize,
        next_row: usize,
        col: usize,
    },

    #[error("derivability witness failed verification at ({row},{col}): {detail}")]
    WitnessVerification {
        row: usize,
        col: usize,
        detail: String,
    },

    #[error("cannot remove privacy by post-processing: alpha = {alpha} > beta = {beta}")]
    CannotRemovePrivacy { alpha: Rational, beta: Rational },

    #[error("privacy levels must be strictly increasing: alphas[{index}] = {value} does not exceed its predecessor")]
    NonIncreasingAlphas { index: usize, value: Rational },

    #[error("malformed linear program: {0}")]
    MalformedLp(String),

    #[error("{what} exceeds the size cap: {detail}")]
    SizeCap { what: &'static str, detail: String },

    #[error("count {0} is unreachable: no database maps to it under the predicate")]
    UnreachableCount(usize),

    #[error("row domain size must be in 1..=3, got {0}")]
    BadRowDomain(usize),

    #[error("predicate value {value} outside row domain 0..{domain}")]
    BadPredicateValue { value: usize, domain: usize },
}
