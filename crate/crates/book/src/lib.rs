//! mdbook cannot run snippets that depend on workspace crates, so each
//! chapter is included here as a module doc and checked by `cargo test`.

#[doc = include_str!("../../../book/src/intro.md")]
pub mod intro {}
#[doc = include_str!("../../../book/src/lambda.md")]
pub mod lambda {}
#[doc = include_str!("../../../book/src/design.md")]
pub mod design {}
#[doc = include_str!("../../../book/src/propagation.md")]
pub mod propagation {}
#[doc = include_str!("../../../book/src/benchmark.md")]
pub mod benchmark {}
#[doc = include_str!("../../../book/src/robustness.md")]
pub mod robustness {}
#[doc = include_str!("../../../book/src/shaping.md")]
pub mod shaping {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
#[doc = include_str!("../../../README.md")]
pub mod readme {}
