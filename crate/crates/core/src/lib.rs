//! Exact computer algebra for quadratic homogeneous polynomial maps.
//!
//! The crate provides runtime-selected coefficient fields (`field`), sparse
//! multivariate polynomials (`poly`), fraction-free linear algebra over K and
//! K[x] (`matpoly`), polynomial maps with Jacobians and tame certificates
//! (`maps`), the Jacobian-rank classification engines (`classify`), Keller-map
//! detection and tame decomposition (`keller`), and seeded random input
//! families for testing (`generators`).
//!
//! Everything is exact: no floating point is used anywhere. Ranks, determinants
//! and nilpotency tests are computed by fraction-free elimination over K[x].

pub mod classify;
pub mod error;
pub mod field;
pub mod generators;
pub mod keller;
pub mod maps;
pub mod matpoly;
pub mod poly;

pub use error::{Error, Result};
