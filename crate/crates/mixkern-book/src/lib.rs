//! Code listings of the guide in `book/`, compiled and run as doctests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/kernels.md")]
pub mod kernels {}

#[doc = include_str!("../../../book/src/inference.md")]
pub mod inference {}

#[doc = include_str!("../../../book/src/fitting.md")]
pub mod fitting {}

#[doc = include_str!("../../../book/src/spectral.md")]
pub mod spectral {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
