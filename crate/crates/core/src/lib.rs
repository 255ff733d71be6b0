//! Sample-efficient model evaluation by active testing.
//!
//! Candidate test samples are scored by acquisition functions over a fixed
//! label space, drawn without replacement in proportion to their scores, and
//! the model's risk on the full pool is estimated from the labelled subset
//! with an importance-weighted unbiased estimator.
//!
//! Multiple-choice QA items whose option sets vary per question are first
//! turned into binary true/false verification statements ([`adaptation`]).

pub mod acquisition;
pub mod adaptation;
pub mod cluster_acq;
pub mod data_io;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod metrics;
pub mod probdist;
pub mod seed;

mod sampler;

pub use error::{Error, Result};
pub use probdist::ProbVector;
