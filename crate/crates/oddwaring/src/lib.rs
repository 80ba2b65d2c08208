//! Exact-arithmetic toolkit for representing lattice cosets `K + w/2` by sums
//! of odd squares.
//!
//! The crate works on the coset side throughout: a coset is a positive
//! definite integral Gram matrix together with a set of basis indices whose
//! sum is the half-vector.  A representation by a sum of `r` odd squares is an
//! integer matrix `T` with `M = T T^t` whose columns each have odd coordinate
//! sum over the chosen indices.
//!
//! Modules:
//! * [`gram`] - Gram matrices, coset specifications, Minkowski reduction and
//!   the bounded enumerator of reduced matrices,
//! * [`oddsq`] - the rank-1 theory (sums of odd squares of integers),
//! * [`criteria`] - necessary-condition filters and the split certificate
//!   search,
//! * [`repsearch`] - the exhaustive `M = T T^t` backtracking engine and coset
//!   isometry testing,
//! * [`survey`] - the case-by-case candidate surveys for ranks 2 to 4 and the
//!   lower-bound witness suite,
//! * [`bounds`] - closed-form evaluation of the asymptotic bound functions and
//!   the constructive diagonal split.
//!
//! The `parallel` feature (on by default) runs the bulk sweeps and searches on
//! a rayon pool; without it everything falls back to sequential code with
//! identical results.

pub mod bounds;
pub mod criteria;
pub mod gram;
pub mod oddsq;
mod parallel;
pub mod repsearch;
pub mod survey;

pub use gram::{CosetSpec, GramMatrix, ReducedEnumSpec};
pub use repsearch::{RepMatrix, SearchBudget, SearchOutcome};

/// Errors shared across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not symmetric at ({i},{j})")]
    Asymmetric { i: usize, j: usize },
    #[error("unsupported dimension {n}: {what}")]
    UnsupportedDimension { n: usize, what: &'static str },
    #[error("integer overflow in exact computation")]
    Overflow,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("contradiction with expected survey outcome: {0}")]
    Contradiction(String),
    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
