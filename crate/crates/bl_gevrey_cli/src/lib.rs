//! Configuration, run orchestration, persistence and verification suites
//! for the boundary-layer laboratory.

pub mod config;
pub mod error;
pub mod runner;
pub mod snapshot;
pub mod suites;

pub use config::RunConfig;
pub use error::CliError;
