//! Experiment runners behind the CLI subcommands.
//!
//! Randomness is addressed by position: each parameter point, trial and
//! grid cell draws from its own sub-stream of the master seed, and results
//! are assembled in a fixed order, so outputs do not depend on scheduling.

use rayon::prelude::*;

use crate::beamforming::optimize_cascade;
use crate::deployment::{draw_trial_channels, grid_search_objective, simulate_trial, GainMap};
use crate::error::{Error, Result};
use crate::estimation::{group_subsurfaces, pilot_patterns, rate_loss_with_reference, run_estimation};
use crate::experiments::{Config, PilotSetting, Scenario};
use crate::geometry::Point3;
use crate::rng::{derive_seed, sub_stream};

/// Sample mean with a 95% normal-approximation half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateStats {
    pub mean: f64,
    pub ci95: f64,
    pub trials: usize,
}

impl RateStats {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let ci95 = if n > 1 {
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            1.96 * (var / n as f64).sqrt()
        } else {
            0.0
        };
        RateStats { mean, ci95, trials: n }
    }

    pub fn lower(&self) -> f64 {
        self.mean - self.ci95
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.ci95
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatePoint {
    /// Independent variable values, in the order of [`ResultTable::var_names`].
    pub params: Vec<f64>,
    /// Swarm center the rate was evaluated at.
    pub center: Point3,
    pub rate: RateStats,
    pub baseline: Option<RateStats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub var_names: Vec<String>,
    pub points: Vec<RatePoint>,
    pub trials: usize,
}

/// Mean achievable rate at a fixed center. Trial `t` of point `point` always
/// uses the same sub-stream, so two centers evaluated with the same
/// `(label, point)` see common user draws.
pub fn rate_statistics(
    scenario: &Scenario,
    center: Point3,
    trials: usize,
    label: &str,
    point: u64,
) -> Result<RateStats> {
    if trials == 0 {
        return Err(Error::invalid("trials must be >= 1"));
    }
    let rates: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = sub_stream(scenario.seed, label, &[point, t]);
            simulate_trial(scenario, center, &mut rng).map(|o| o.rate)
        })
        .collect::<Result<_>>()?;
    Ok(RateStats::from_samples(&rates))
}

/// Mean-gain surface over the configured grid (`scenario.trials` per cell).
pub fn run_deploy_map(cfg: &Config) -> Result<GainMap> {
    cfg.validate()?;
    let seed = derive_seed(cfg.scenario.seed, "deploy-map", &[]);
    grid_search_objective(&cfg.scenario, &cfg.grid, cfg.scenario.trials, cfg.objective, seed)
}

fn optimized_center(cfg: &Config, scenario: &Scenario, label: &str, point: u64) -> Result<Point3> {
    let seed = derive_seed(scenario.seed, label, &[point]);
    let map = grid_search_objective(scenario, &cfg.grid, cfg.search_trials, cfg.objective, seed)?;
    Ok(Point3::new(map.best.x, 0.0, map.best.z))
}

/// Rate versus swarm size. With `optimize` the center is grid-searched per
/// `L`; the baseline center above the user region is always reported.
pub fn run_rate_vs_uavs(cfg: &Config) -> Result<ResultTable> {
    cfg.validate()?;
    let mut points = Vec::with_capacity(cfg.l_values.len());
    for &l in &cfg.l_values {
        let scenario = Scenario { l, ..cfg.scenario.clone() };
        let idx = l as u64;
        let baseline_center = scenario.baseline_center();
        let baseline = rate_statistics(&scenario, baseline_center, scenario.trials, "rate-vs-uavs", idx)?;
        let (center, rate) = if cfg.optimize {
            let c = optimized_center(cfg, &scenario, "rate-vs-uavs/search", idx)?;
            (c, rate_statistics(&scenario, c, scenario.trials, "rate-vs-uavs", idx)?)
        } else {
            (baseline_center, baseline)
        };
        points.push(RatePoint { params: vec![l as f64], center, rate, baseline: Some(baseline) });
    }
    Ok(ResultTable { var_names: vec!["L".into()], points, trials: cfg.scenario.trials })
}

/// Rate versus swarm radius and user-region radius (every pair), with the
/// deployment optimized per pair.
pub fn run_rate_vs_radius(cfg: &Config) -> Result<ResultTable> {
    cfg.validate()?;
    let mut points = Vec::new();
    for &r_a in &cfg.r_a_values {
        for &r_u in &cfg.r_u_values {
            let scenario = Scenario { r_a, r_u, ..cfg.scenario.clone() };
            let idx = derive_seed(0, "radius-pair", &[r_a.to_bits(), r_u.to_bits()]);
            let center = optimized_center(cfg, &scenario, "rate-vs-radius/search", idx)?;
            let rate = rate_statistics(&scenario, center, scenario.trials, "rate-vs-radius", idx)?;
            points.push(RatePoint { params: vec![r_a, r_u], center, rate, baseline: None });
        }
    }
    Ok(ResultTable { var_names: vec!["r_a_m".into(), "r_u_m".into()], points, trials: cfg.scenario.trials })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationPoint {
    pub n_groups: usize,
    pub overhead: usize,
    pub pilot: PilotSetting,
    pub mse: f64,
    pub rate_perfect: f64,
    pub rate_estimated: f64,
    pub mean_delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationTable {
    pub center: Point3,
    pub points: Vec<EstimationPoint>,
    pub trials: usize,
}

/// Estimation overhead/accuracy sweep over every `(n_groups, pilot SNR)`
/// pair. All points share the channel realizations of each trial.
pub fn run_estimation_sweep(cfg: &Config) -> Result<EstimationTable> {
    cfg.validate()?;
    let s = &cfg.scenario;
    let total = s.l * s.n;
    let mut books = Vec::with_capacity(cfg.n_groups.len());
    for &q in &cfg.n_groups {
        let grouping = group_subsurfaces(s.l, s.n, q)
            .map_err(|_| Error::Config(format!("est.n_groups {q} does not divide L*N = {total}")))?;
        books.push((grouping, pilot_patterns(q)?));
    }
    let settings: Vec<(usize, PilotSetting)> = (0..books.len())
        .flat_map(|b| cfg.pilot_snr.iter().map(move |&p| (b, p)))
        .collect();
    let center = cfg.fixed_center.unwrap_or_else(|| s.baseline_center());

    // Per trial: (mse, rate_perfect, rate_estimated) for each setting.
    let per_trial: Vec<Vec<(f64, f64, f64)>> = (0..s.trials as u64)
        .into_par_iter()
        .map(|t| {
            let r = draw_trial_channels(s, center, &mut sub_stream(s.seed, "estimate", &[t]))?;
            let truth = r.cascade();
            let cold = optimize_cascade(&truth, s.bf.tol, s.bf.max_iter, None)?;
            settings
                .iter()
                .enumerate()
                .map(|(k, (b, pilot))| {
                    let (grouping, book) = &books[*b];
                    let mut rng = sub_stream(s.seed, "estimate/pilot", &[k as u64, t]);
                    let est = run_estimation(&r, grouping, book, pilot.resolve(s), &mut rng)?;
                    let loss = rate_loss_with_reference(
                        &truth, &cold, &est, grouping, s.p_tx, s.noise, s.bf.tol, s.bf.max_iter,
                    )?;
                    Ok((est.mse, loss.rate_perfect, loss.rate_estimated))
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let n = s.trials as f64;
    let points = settings
        .iter()
        .enumerate()
        .map(|(k, (b, pilot))| {
            let (mut mse, mut rp, mut re) = (0.0, 0.0, 0.0);
            for trial in &per_trial {
                mse += trial[k].0;
                rp += trial[k].1;
                re += trial[k].2;
            }
            let q = cfg.n_groups[*b];
            EstimationPoint {
                n_groups: q,
                overhead: books[*b].1.symbols(),
                pilot: *pilot,
                mse: mse / n,
                rate_perfect: rp / n,
                rate_estimated: re / n,
                mean_delta: (rp - re) / n,
            }
        })
        .collect();
    Ok(EstimationTable { center, points, trials: s.trials })
}
