//! The user guide, one module per book chapter.
//!
//! Each chapter of `book/` is included verbatim as module documentation, so
//! every fenced Rust block in the book compiles and runs under
//! `cargo test --doc`. The rendered book (`mdbook build book`) and these
//! doc pages share one source and cannot drift apart.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/grids.md")]
pub mod grids {}

#[doc = include_str!("../../../book/src/hartree.md")]
pub mod hartree {}

#[doc = include_str!("../../../book/src/boundary.md")]
pub mod boundary {}

#[doc = include_str!("../../../book/src/stepping.md")]
pub mod stepping {}

#[doc = include_str!("../../../book/src/identities.md")]
pub mod identities {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
