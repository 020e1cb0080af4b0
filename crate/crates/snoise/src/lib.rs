//! Monte Carlo oracles, experiment configuration, CSV output and scenario
//! runners on top of `snoise-core`.

pub mod batch;
pub mod config;
mod error;
pub mod oracle;
pub mod output;
pub mod scenario;

pub use error::{ConfigError, Error, Result};
pub use scenario::{run_scenario, Check, Outcome, Scenario};
pub use snoise_core as core;
