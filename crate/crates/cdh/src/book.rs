//! The book's chapters double as documentation tests: every fenced Rust
//! block in `book/src/*.md` compiles and runs under `cargo test --doc`,
//! so the guide cannot drift from the library.

#[doc = include_str!("../../../book/src/introduction.md")]
mod introduction {}

#[doc = include_str!("../../../book/src/polynomials.md")]
mod polynomials {}

#[doc = include_str!("../../../book/src/measures.md")]
mod measures {}

#[doc = include_str!("../../../book/src/quadrature.md")]
mod quadrature {}

#[doc = include_str!("../../../book/src/sampling.md")]
mod sampling {}

#[doc = include_str!("../../../book/src/operator-identities.md")]
mod operator_identities {}

#[doc = include_str!("../../../book/src/cli.md")]
mod cli {}
