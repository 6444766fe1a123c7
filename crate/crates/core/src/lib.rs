//! Correlation filter tracking with spatial and channel reliability.

pub mod channel_reliability;
pub mod cli;
pub mod error;
pub mod eval_harness;
pub mod features;
pub mod filter_learn;
pub mod geometry;
pub mod reliability_map;
pub mod spectral;
pub mod tracker;

pub use error::{Error, Result};
pub use geometry::{Point, Rect};
