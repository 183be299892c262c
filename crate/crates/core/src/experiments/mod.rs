//! Experiment harness: scenarios, configuration, runners, CSV output and
//! the command-line front end.

pub mod cli;
pub mod config;
pub mod output;
pub mod runners;
mod scenario;

pub use config::{Config, PilotSetting};
pub use runners::{
    rate_statistics, run_deploy_map, run_estimation_sweep, run_rate_vs_radius, run_rate_vs_uavs,
    EstimationPoint, EstimationTable, RatePoint, RateStats, ResultTable,
};
pub use scenario::{BfSettings, Scenario, BASELINE_ALTITUDE_M};
