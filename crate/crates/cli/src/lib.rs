//! Configuration and orchestration layer of the `thinfilm` command-line
//! tool.

pub mod config;
pub mod run;

pub use config::{parse_config, ConfigError, Experiment, RunConfig};
pub use run::{run, RunError, RunOptions, RunOutcome};
