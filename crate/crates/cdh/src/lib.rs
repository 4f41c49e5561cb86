//! Continuous dual Hahn polynomials and the Markov processes built from
//! their orthogonality measures.
//!
//! The crate has three layers:
//!
//! * polynomial machinery — the three-term recurrence, Favard
//!   classification, normalization, numerator polynomials and connection
//!   coefficients ([`poly`]), plus the complex log-gamma kit behind the
//!   densities ([`special`]);
//! * measures and processes — transition kernels, marginal laws and
//!   σ-finite entrance laws as classified mixed measures ([`measure`]),
//!   Gauss quadrature generated from Jacobi matrices together with the
//!   Chapman–Kolmogorov / martingale verifiers ([`quadrature`]), and a
//!   seeded trajectory sampler ([`process`]);
//! * exact identity checks — rational Jacobi-matrix identities
//!   ([`harness`]) and the normal-ordered Weyl-algebra commutator
//!   ([`weyl`]).
//!
//! The `book/` directory of the repository walks through the theory with
//! runnable snippets; every snippet is compiled and executed as part of
//! `cargo test --doc`.

// `!(a < b)`-style guards are deliberate: they reject NaN inputs, which
// `a >= b` would silently accept.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod integrate;
pub mod measure;
pub mod poly;
pub mod process;
pub mod quadrature;
pub mod special;
pub mod weyl;

pub use error::{Error, Result};
pub use measure::{MixedMeasure, ProcessParams};
pub use poly::{CdhParams, FavardClass};
pub use quadrature::QuadratureRule;

#[cfg(doctest)]
mod book;
