//! Throughput model of hybrid ad hoc / cellular UAV networks with
//! scale-free traffic in the unit cube.

pub mod config;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod hops;
mod par;
pub mod rng;
pub mod scaling;
pub mod sim;
pub mod topology;

pub use config::NetworkConfig;
pub use error::{Error, Result};
