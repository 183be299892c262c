//! `saris` command-line interface.
//!
//! Exit codes: 0 on success, 1 for usage or configuration errors, 2 for
//! runtime failures (simulation or I/O).

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::experiments::output::{estimation_csv, gain_map_csv, rate_vs_radius_csv, rate_vs_uavs_csv, CsvDocument};
use crate::experiments::{
    run_deploy_map, run_estimation_sweep, run_rate_vs_radius, run_rate_vs_uavs, Config, PilotSetting,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

/// Default output directory for CSV files.
pub const DEFAULT_RESULTS_DIR: &str = "results";

#[derive(Debug, Parser)]
#[command(name = "saris", version, about = "UAV swarm aerial RIS link-level simulator")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Config file path or preset name (paper_fig4, paper_fig5a, paper_fig5b, estimation).
    #[arg(long, global = true)]
    config: Option<String>,

    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Monte Carlo trials per point (per cell for deploy-map).
    #[arg(long, global = true)]
    trials: Option<usize>,

    /// Output CSV path [default: results/<subcommand>.csv].
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Mean channel power gain over the swarm-center (x, z) grid.
    DeployMap {
        #[arg(long)]
        x_step: Option<f64>,
        #[arg(long)]
        z_step: Option<f64>,
    },
    /// Achievable rate versus the number of UAVs.
    RateVsUavs {
        /// Comma-separated swarm sizes.
        #[arg(long, value_delimiter = ',')]
        l_values: Option<Vec<usize>>,
        /// Distance from the BS to the user-region center in meters.
        #[arg(long)]
        x_u: Option<f64>,
        /// Keep the baseline center instead of searching the deployment.
        #[arg(long)]
        no_optimize: bool,
        /// Trials per grid cell during the deployment search.
        #[arg(long)]
        grid_trials: Option<usize>,
    },
    /// Achievable rate versus swarm radius and user-region radius.
    RateVsRadius {
        #[arg(long, value_delimiter = ',')]
        ra_values: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        ru_values: Option<Vec<f64>>,
        #[arg(long)]
        grid_trials: Option<usize>,
    },
    /// Sub-surface pilot estimation sweep.
    Estimate {
        /// Comma-separated sub-surface counts; each must divide L*N.
        #[arg(long, value_delimiter = ',')]
        groups: Option<Vec<usize>>,
        /// Comma-separated pilot SNRs in dB; 'inf' is noiseless, 'data' uses the data noise.
        #[arg(long, value_delimiter = ',')]
        pilot_snr: Option<Vec<String>>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::DeployMap { .. } => "deploy-map",
            Command::RateVsUavs { .. } => "rate-vs-uavs",
            Command::RateVsRadius { .. } => "rate-vs-radius",
            Command::Estimate { .. } => "estimate",
        }
    }
}

fn default_out(command: &str) -> PathBuf {
    PathBuf::from(DEFAULT_RESULTS_DIR).join(format!("{}.csv", command.replace('-', "_")))
}

fn build_config(cli: &Cli) -> Result<Config, Error> {
    let mut cfg = match &cli.common.config {
        Some(spec) => Config::load(spec)?,
        None => Config::default(),
    };
    if let Some(seed) = cli.common.seed {
        cfg.scenario.seed = seed;
    }
    if let Some(trials) = cli.common.trials {
        cfg.scenario.trials = trials;
    }
    match &cli.command {
        Command::DeployMap { x_step, z_step } => {
            if let Some(v) = x_step {
                cfg.grid.x_step = *v;
            }
            if let Some(v) = z_step {
                cfg.grid.z_step = *v;
            }
        }
        Command::RateVsUavs { l_values, x_u, no_optimize, grid_trials } => {
            if let Some(v) = l_values {
                cfg.l_values = v.clone();
            }
            if let Some(v) = x_u {
                cfg.scenario.x_u = *v;
            }
            if *no_optimize {
                cfg.optimize = false;
            }
            if let Some(v) = grid_trials {
                cfg.search_trials = *v;
            }
        }
        Command::RateVsRadius { ra_values, ru_values, grid_trials } => {
            if let Some(v) = ra_values {
                cfg.r_a_values = v.clone();
            }
            if let Some(v) = ru_values {
                cfg.r_u_values = v.clone();
            }
            if let Some(v) = grid_trials {
                cfg.search_trials = *v;
            }
        }
        Command::Estimate { groups, pilot_snr } => {
            if let Some(v) = groups {
                cfg.n_groups = v.clone();
            }
            if let Some(v) = pilot_snr {
                cfg.pilot_snr = v.iter().map(|s| PilotSetting::parse(s)).collect::<Result<_, _>>()?;
            }
        }
    }
    cfg.validate()?;
    if let Command::Estimate { .. } = cli.command {
        let total = cfg.scenario.l * cfg.scenario.n;
        if let Some(q) = cfg.n_groups.iter().find(|&&q| q == 0 || total % q != 0) {
            return Err(Error::Config(format!("est.n_groups {q} does not divide L*N = {total}")));
        }
    }
    Ok(cfg)
}

fn execute(cli: &Cli, cfg: &Config) -> Result<(CsvDocument, String), Error> {
    Ok(match cli.command {
        Command::DeployMap { .. } => {
            let map = run_deploy_map(cfg)?;
            let summary = format!(
                "best swarm center x = {} m, z = {} m, mean gain = {:.3} dB",
                map.best.x, map.best.z, map.best.value
            );
            (gain_map_csv(cfg, &map), summary)
        }
        Command::RateVsUavs { .. } => {
            let table = run_rate_vs_uavs(cfg)?;
            let summary = table
                .points
                .iter()
                .map(|p| format!("L = {}: {:.6} bit/s/Hz at {}", p.params[0], p.rate.mean, p.center))
                .collect::<Vec<_>>()
                .join("\n");
            (rate_vs_uavs_csv(cfg, &table), summary)
        }
        Command::RateVsRadius { .. } => {
            let table = run_rate_vs_radius(cfg)?;
            let summary = table
                .points
                .iter()
                .map(|p| format!("R_A = {}, R_U = {}: {:.6} bit/s/Hz", p.params[0], p.params[1], p.rate.mean))
                .collect::<Vec<_>>()
                .join("\n");
            (rate_vs_radius_csv(cfg, &table), summary)
        }
        Command::Estimate { .. } => {
            let table = run_estimation_sweep(cfg)?;
            let summary = table
                .points
                .iter()
                .map(|p| format!("N' = {}, pilot SNR {}: rate gap {:.6}", p.n_groups, p.pilot, p.mean_delta))
                .collect::<Vec<_>>()
                .join("\n");
            (estimation_csv(cfg, &table), summary)
        }
    })
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let cfg = match build_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let out = cli.common.out.clone().unwrap_or_else(|| default_out(cli.command.name()));
    match execute(&cli, &cfg).and_then(|(doc, summary)| doc.write(&out).map(|_| summary)) {
        Ok(summary) => {
            println!("{summary}");
            println!("wrote {}", out.display());
            EXIT_OK
        }
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}
