//! Runs `lorentz-core` at scale: JSON configs, a deterministic parallel
//! ensemble runner, CSV output and the `lorentz-lab` command line.

pub mod commands;
pub mod config;
pub mod ensemble;
pub mod error;
pub mod output;
pub mod precise;

pub use config::{RunConfig, TableSpec};
pub use error::LabError;
