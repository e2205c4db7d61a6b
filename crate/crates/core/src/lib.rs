//! Cell-free massive MIMO downlink simulator: geometry and fading, MMSE
//! channel estimation with pilot contamination, max-min beamforming (optimal,
//! zero-forcing and conjugate), downlink training and a Monte Carlo harness.

pub mod beamform;
pub mod channel;
pub mod config;
pub mod downlink;
pub mod error;
pub mod harness;
pub mod rng;
pub mod scenario;
pub mod units;

pub use config::SystemConfig;
pub use error::{BeamformError, ConfigError, ExperimentError};
