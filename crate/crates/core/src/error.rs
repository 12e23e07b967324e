use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("p = {0} is not an odd prime")]
    NotOddPrime(u32),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("entry {value} out of range for p = {p}")]
    EntryOutOfRange { value: u32, p: u32 },
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("vectors are linearly dependent")]
    Dependent,
    #[error("quadratic generator {0} duplicates an earlier one")]
    DuplicateMatrix(usize),
    #[error("quadratic complexity q = {q} is too large for p = {p} (p^q must stay below {cap})")]
    QuadraticTooLarge { p: u32, q: usize, cap: u64 },
    #[error("enumeration of {size} items exceeds the cap of {cap}")]
    EnumerationCap { size: u128, cap: u128 },
    #[error("function value {0} lies outside [-1, 1]")]
    ValueOutOfRange(f64),
    #[error("no nontrivial combination has rank below the demand {0}")]
    NoLowRankCombination(String),
    #[error("degenerate label: {0}")]
    DegenerateLabel(String),
    #[error("label does not match factor complexity (l = {l}, q = {q})")]
    LabelMismatch { l: usize, q: usize },
    #[error("growth function: {0}")]
    Growth(String),
    #[error("k = {0} exceeds the hard cap of 3")]
    KTooLarge(usize),
    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
