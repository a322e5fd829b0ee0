//! The user guide, compiled into the crate docs.
//!
//! Each chapter of the mdbook under `book/` is included here verbatim, so
//! `cargo doc` renders the guide and — more importantly — `cargo test --doc`
//! compiles and runs every Rust snippet in it. The book can never silently
//! drift out of sync with the API.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/network.md")]
pub mod network {}

#[doc = include_str!("../../../book/src/grid-and-observables.md")]
pub mod grid_and_observables {}

#[doc = include_str!("../../../book/src/tdvp.md")]
pub mod tdvp {}

#[doc = include_str!("../../../book/src/evolution.md")]
pub mod evolution {}

#[doc = include_str!("../../../book/src/benchmarks.md")]
pub mod benchmarks {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
