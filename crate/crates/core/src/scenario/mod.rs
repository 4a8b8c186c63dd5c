//! Scenario layer: configuration, runners that regenerate each dataset,
//! and file emitters.

pub mod config;
pub mod output;
pub mod run;

pub use config::{parse_config, parse_config_with, OutputFormat, Scenario, ScenarioConfig};
pub use output::{write_output, ScenarioOutput, Table};
pub use run::{run_scenario, run_scenario_with};
