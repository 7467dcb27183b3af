//! Multi-layer urban data engine: street-graph aggregation of thematic
//! layers, crime-on-trip prediction with gradient-boosted trees, Shapley and
//! correlation analytics, density-adaptive spatial and temporal lenses, and
//! a JSON API over a saved workspace.

// Float guards are written as `!(x > 0.0)` on purpose so NaN fails them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod config;
pub mod crime_sim;
pub mod domain;
pub mod error;
pub mod export;
pub mod geo;
pub mod ingest;
pub mod layers;
pub mod pipeline;
pub mod prediction;
pub mod service;
pub mod spatial_index;
pub mod store;
pub mod street_graph;
pub mod synthetic;
pub mod temporal_lens;

pub use error::{Error, Result};
