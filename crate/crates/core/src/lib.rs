//! Workbench for random-walk based uniform sampling of web pages.
//!
//! The crate simulates a fetchable web ([`webgraph`], [`environment`]), runs
//! the three walk phases over it ([`walkers`]), derives the eleven weighted
//! subsamples from the merged walks ([`subsampling`]) and measures the
//! resulting samples ([`analysis`]). [`experiment`] wires the stages into a
//! reproducible pipeline driven by a config file.
//!
//! Data-parallel loops (independent walkers, sample repetitions, power
//! iteration, repeated runs) go through [`par`], which falls back to plain
//! sequential iteration when the `parallel` feature is disabled.

// Range checks are written `!(x > 0.0)` on purpose so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod environment;
pub mod error;
pub mod experiment;
pub mod par;
pub mod seed;
pub mod subsampling;
pub mod walkers;
pub mod webgraph;

pub use error::{Error, Result};
pub use webgraph::{NodeId, WebGraph};
