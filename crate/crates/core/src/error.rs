//! Shared error type for the whole crate.
//!
//! `ContractViolation` deserves a note: branches the underlying theorems prove
//! unreachable are kept as explicit errors carrying a state dump, so fuzzing
//! exercises them as theorem-level assertions instead of silent fallbacks.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{0} is not prime")]
    NonPrimeModulus(u64),
    #[error("no irreducible modulus of degree {k} over GF({p})")]
    NoIrreducible { p: u64, k: usize },
    #[error("unsupported field extension: {0}")]
    UnsupportedExtension(String),
    #[error("elements from different field contexts may not mix")]
    CtxMismatch,
    #[error("variable index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("operation requires characteristic {expected}, context has {found}")]
    WrongCharacteristic { expected: u64, found: u64 },
    #[error("map is not quadratic homogeneous")]
    NotQuadraticHomogeneous,
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("nonzero diagonal entry at index {0}")]
    NonzeroDiagonal(usize),
    #[error("matrix is zero")]
    ZeroMatrix,
    #[error("field has {card} elements, need at least {need}")]
    FieldTooSmall { card: u128, need: u128 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("matrix is singular")]
    Singular,
    #[error("map has {m} components over {n} variables, need a square map")]
    NotSquareMap { m: usize, n: usize },
    #[error("Jacobian rank is {found}, expected {expected}")]
    RankMismatch { expected: usize, found: usize },
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("contract violation (theorem-backed branch failed): {0}")]
    ContractViolation(String),
    #[error("determinant degree exceeds 2")]
    DegreeTooHigh,
    #[error("map is not a Keller map")]
    NotKeller,
    #[error("Jacobian rank {0} exceeds 3")]
    RankTooHigh(usize),
    #[error("triangularization stuck: {0}")]
    TriangularizationStuck(String),
}
