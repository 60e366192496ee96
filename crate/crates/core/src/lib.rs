//! Event coreference toolkit: mention features, a cluster-oriented
//! representation learner, single-linkage clustering and the standard
//! coreference scorers.
//!
//! The network and clustering code is generic over [`Real`] (`f32` or
//! `f64`); the aliases below fix the width for the common cases.

pub mod clustering;
pub mod config;
pub mod corpus;
pub mod error;
pub mod features;
pub mod net;
pub mod pipeline;
pub mod scalar;
pub mod scoring;
pub mod synthetic;

pub use error::{Error, Result};
pub use scalar::Real;

pub type NetParams64 = net::NetParams<f64>;
pub type NetParams32 = net::NetParams<f32>;
pub type Checkpoint64 = net::Checkpoint<f64>;
pub type Checkpoint32 = net::Checkpoint<f32>;
pub type TrainOutcome64 = net::TrainOutcome<f64>;
pub type TrainOutcome32 = net::TrainOutcome<f32>;
