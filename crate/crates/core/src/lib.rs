//! Detection of low-magnitude seismic events in continuous multi-station
//! records with a four-feature logistic regression.
//!
//! The flow is: cut and label windows ([`trace_io`]), condition them
//! ([`preprocess`]), compute time-series features ([`features`]), rank and
//! prune candidate features ([`selection`]), fit a five-parameter logistic
//! model ([`model`]) and scan continuous traces with a station quorum
//! ([`detector`]). [`synth`] generates labeled data for all of the above.
//!
//! Batch loops honour an [`ExecMode`]; with the default `parallel` feature
//! they run on rayon, otherwise sequentially. Results are identical either way.

// `!(x > 0.0)` style checks are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detector;
pub mod error;
pub mod exec;
pub mod features;
pub mod matrix;
pub mod model;
pub mod pipeline;
pub mod preprocess;
pub mod selection;
pub mod stats;
pub mod synth;
pub mod trace_io;

pub use error::{Error, ErrorClass, Result};
pub use exec::ExecMode;
pub use features::{Feature, FeatureConfig, FeatureVector};
pub use matrix::FeatureMatrix;
pub use model::LogRegModel;
pub use pipeline::PipelineConfig;
pub use trace_io::{Catalog, Label, Trace, Window};
