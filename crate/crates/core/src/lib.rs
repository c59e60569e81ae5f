//! Slice-aware neural ranking.
//!
//! Heuristic slicing functions pick out subsets ("slices") of question and
//! response data. A slice-aware ranker built on a small transformer encoder
//! learns to predict slice membership, keeps one residual expert per slice
//! and combines the experts with attention before scoring relevance. The
//! crate also carries the plain (non slice-aware) ranker used as the
//! comparator, a deterministic training loop and the ranking metrics and
//! statistics used to compare runs.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, configuration
//! files and the command line live in the `slicerank` companion crate.

#![no_std]

extern crate alloc;

pub mod corpus;
pub mod encoder;
mod error;
pub mod math;
pub mod metrics;
pub mod rng;
pub mod slicing;
pub mod sram;
pub mod tensor;
pub mod trainer;

pub use error::{Error, Result};
