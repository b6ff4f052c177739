//! Configuration and preset runners behind the `decaylab` binary.

pub mod config;
pub mod presets;

pub use config::{parse_config, validate_config, ConfigError, ConfigIssue, ExperimentConfig, PRESETS};
pub use presets::{run_preset, RunOptions, RunSummary};
