//! Villadsen-type inductive limits `A_i = M_{m_i}(C([0,1]^{N_i}))` with
//! `m_{i+1} = m_i(n_{i+1} + l_{i+1})` and `N_{i+1} = N_i n_{i+1}`.
//!
//! [`params`](self) holds the exact stage arithmetic and the parameter
//! checks; the measure part models the induced maps on trace simplices.

mod measure;
mod params;

pub use measure::*;
pub use params::*;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VilladsenError {
    #[error("m0, n0, every n_i and the target ratio must be positive")]
    NonPositive,
    #[error("n sequence has {n} entries but l sequence has {l}")]
    LengthMismatch { n: usize, l: usize },
    #[error("stage {index} requested but the prefix ends at stage {last}")]
    IndexOutOfRange { index: usize, last: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("exact pushforward with l > 0 needs the evaluation atoms")]
    MissingAtoms,
    #[error("invalid measure: {0}")]
    BadMeasure(String),
    #[error("need 0 < N1 <= M1 <= N2, got N1 = {n1}, M1 = {m1}, N2 = {n2}")]
    Ordering { n1: u64, m1: u64, n2: u64 },
    #[error("measure has too many atoms to expand")]
    TooLarge,
}
