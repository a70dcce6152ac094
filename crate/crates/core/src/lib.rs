//! Uniform cubic B-spline models (SAM, KASAM and a dense baseline) with a
//! two-task continual-learning harness.
//!
//! The guide under `book/` walks through the API; its snippets run as doctests.

pub mod error;
pub mod experiments;
pub mod io;
pub mod models;
pub mod properties;
pub mod spline;
pub mod stratify;
pub mod training;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/splines.md")]
    mod splines {}
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
