//! Heterogeneous graph embedding with meta-path discrimination and
//! importance-based neighbor filtering.
//!
//! A typical run composes each meta-path, splits the paths into large and
//! small by their degree sums, keeps the top `T` neighbors on the large ones,
//! and trains graph convolutions per path fused by attention.

pub mod cli;
pub mod error;
pub mod eval;
pub mod experiments;
pub mod filter;
pub mod graph;
pub mod io;
pub mod metapath;
pub mod nn;
pub mod sparse;
pub mod synth;
pub mod train;

pub use error::{LspiError, Result};
