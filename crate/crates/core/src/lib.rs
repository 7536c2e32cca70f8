//! Coarse-to-fine document parsing: layout regions and their reading order
//! come first, then each region is recognized on its own and the results are
//! merged back into a structured page. The crate also carries the metric
//! suite used to score such pipelines and a small benchmark harness.

pub mod assemble;
pub mod bench;
pub mod dataset;
pub mod doc_model;
pub mod error;
pub mod http;
#[cfg(feature = "remote")]
pub mod imaging;
pub mod layout;
pub mod metrics;
pub mod otsl;
pub mod pipe_table;
pub mod reading_order;
pub mod recognizers;
pub mod resolution;
pub mod synth;

pub use error::{Error, Result};
