//! Seeded Monte Carlo study of multibeam optimization methods: configuration,
//! trial orchestration, and CSV/SVG emission.

pub mod config;
mod error;
pub mod oracle_suite;
pub mod output;
pub mod runs;
pub mod scenario;

pub use config::{ExperimentConfig, Method};
pub use error::ExperimentError;
