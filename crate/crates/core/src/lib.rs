//! Exact relative class numbers of cyclotomic fields, a geometric
//! class-number bound, and congruence audits of class-number tables.
//!
//! The crate is organised bottom-up:
//!
//! - [`arith`]: primality, factorization, Euler phi, multiplicative orders.
//! - [`abelian`]: unit groups, Dirichlet characters, Galois orbits and the
//!   subfield lattice of `Q(zeta_u)` as character subgroups.
//! - [`classnum`]: `h^-(Q(zeta_u))` from generalized Bernoulli numbers, with a
//!   Maillet determinant cross-check for prime `u`.
//! - [`bounds`]: the upper bound `H_F` evaluated with certified upward rounding.
//! - [`congruence`]: the rank-theorem congruences and their verdicts.
//! - [`tables`]: record ingestion, the built-in dataset and audit reports.

pub mod abelian;
pub mod arith;
pub mod bounds;
pub mod classnum;
pub mod congruence;
pub mod error;
pub mod tables;

pub use error::{Error, Result};
