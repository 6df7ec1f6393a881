//! The guide chapters, included so that `cargo test` runs their snippets.

#![doc = include_str!("../../../book/src/overview.md")]

#[doc = include_str!("../../../book/src/corpus.md")]
pub mod corpus {}

#[doc = include_str!("../../../book/src/windows.md")]
pub mod windows {}

#[doc = include_str!("../../../book/src/autodiff.md")]
pub mod autodiff {}

#[doc = include_str!("../../../book/src/arguments.md")]
pub mod arguments {}

#[doc = include_str!("../../../book/src/events.md")]
pub mod events {}

#[doc = include_str!("../../../book/src/evaluation.md")]
pub mod evaluation {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
