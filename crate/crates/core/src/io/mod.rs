//! Configuration, initial data, resampling, persistence and output.

pub mod checkpoint;
pub mod config;
pub mod csv;
pub mod initial;
pub mod resample;

pub use checkpoint::{checkpoint_header, checkpoint_load, checkpoint_save, CheckpointHeader};
pub use config::{parse_config, parse_config_str, InitialKind, RunConfig};
pub use csv::{format_diagnostics, write_diagnostics};
pub use initial::make_initial_data;
pub use resample::{prolong_state, resample_state, restrict_state};
