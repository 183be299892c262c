//! Monte Carlo evaluation of swarm-center positions and grid search over
//! the `y = 0` plane.

use rayon::prelude::*;

use crate::beamforming::{alternating_optimize, quantize_phases, snr_and_rate, solution_for_phases};
use crate::channel::{realize_channels, ChannelRealization, Layout};
use crate::error::{Error, Result};
use crate::experiments::Scenario;
use crate::geometry::{sample_cluster_with, sample_uniform_disk, Point3};
use crate::rng::{sub_stream, RandomStream};

/// What a candidate position is scored by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Objective {
    /// Mean `‖h_eff‖²` over trials, reported in dB.
    #[default]
    ChannelGain,
    /// Mean achievable rate in bit/s/Hz.
    Rate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub x_min: f64,
    pub x_max: f64,
    pub x_step: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub z_step: f64,
}

impl Default for Grid2D {
    fn default() -> Self {
        Grid2D { x_min: 0.0, x_max: 400.0, x_step: 10.0, z_min: 10.0, z_max: 300.0, z_step: 10.0 }
    }
}

fn axis(min: f64, max: f64, step: f64) -> Vec<f64> {
    let count = ((max - min) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|i| min + step * i as f64).collect()
}

impl Grid2D {
    /// Validates the invariants; a degenerate axis (`min == max`) is allowed
    /// so that single cells can be evaluated.
    pub fn new(x_min: f64, x_max: f64, x_step: f64, z_min: f64, z_max: f64, z_step: f64) -> Result<Self> {
        let g = Grid2D { x_min, x_max, x_step, z_min, z_max, z_step };
        g.validate()?;
        Ok(g)
    }

    pub fn single(x: f64, z: f64) -> Result<Self> {
        Self::new(x, x, 1.0, z, z, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.x_step, self.z_min, self.z_max, self.z_step]
            .iter()
            .all(|v| v.is_finite());
        if !finite
            || self.x_min > self.x_max
            || self.z_min > self.z_max
            || !(self.x_step > 0.0 && self.z_step > 0.0)
            || !(self.z_min > 0.0)
        {
            return Err(Error::invalid(format!("invalid grid {self:?}")));
        }
        Ok(())
    }

    pub fn xs(&self) -> Vec<f64> {
        axis(self.x_min, self.x_max, self.x_step)
    }

    pub fn zs(&self) -> Vec<f64> {
        axis(self.z_min, self.z_max, self.z_step)
    }

    /// Cell centers, row-major in x then z.
    pub fn cells(&self) -> Vec<(f64, f64)> {
        let zs = self.zs();
        self.xs().into_iter().flat_map(|x| zs.iter().map(move |&z| (x, z))).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestCell {
    pub x: f64,
    pub z: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainMap {
    pub grid: Grid2D,
    pub objective: Objective,
    /// `mean_gain_db[ix][iz]`; mean rates when the objective is [`Objective::Rate`].
    pub mean_gain_db: Vec<Vec<f64>>,
    pub best: BestCell,
}

impl GainMap {
    pub fn is_boundary(&self, ix: usize, iz: usize) -> bool {
        ix == 0 || iz == 0 || ix + 1 == self.mean_gain_db.len() || iz + 1 == self.mean_gain_db[0].len()
    }

    pub fn best_index(&self) -> (usize, usize) {
        let xs = self.grid.xs();
        let zs = self.grid.zs();
        let ix = xs.iter().position(|&x| x == self.best.x).unwrap_or(0);
        let iz = zs.iter().position(|&z| z == self.best.z).unwrap_or(0);
        (ix, iz)
    }

    /// Largest value among cells on the grid boundary.
    pub fn best_boundary_value(&self) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for (ix, col) in self.mean_gain_db.iter().enumerate() {
            for (iz, &v) in col.iter().enumerate() {
                if self.is_boundary(ix, iz) && v > best {
                    best = v;
                }
            }
        }
        best
    }
}

/// One trial's outcome at a candidate center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    /// `‖h_eff‖²` under the converged (or quantized) beamformer.
    pub gain: f64,
    pub rate: f64,
}

/// Draws a user and a swarm around `center` and returns the realized channels.
pub fn draw_trial_channels(
    scenario: &Scenario,
    center: Point3,
    rng: &mut RandomStream,
) -> Result<ChannelRealization> {
    let user = sample_uniform_disk(&scenario.user_region()?, rng);
    let uavs = sample_cluster_with(&scenario.swarm_region(center)?, scenario.l, scenario.cluster_shape, rng)?;
    let layout = Layout { bs: scenario.bs, uavs, user };
    realize_channels(&layout, &scenario.link_config(), &scenario.env, rng)
}

pub fn simulate_trial(scenario: &Scenario, center: Point3, rng: &mut RandomStream) -> Result<TrialOutcome> {
    let r = draw_trial_channels(scenario, center, rng)?;
    let mut s = alternating_optimize(&r, scenario.bf.tol, scenario.bf.max_iter)?;
    if let Some(bits) = scenario.bf.phase_bits {
        s = solution_for_phases(&r, quantize_phases(&s.phases, bits)?)?;
    }
    let (_, rate) = snr_and_rate(&s, scenario.p_tx, scenario.noise)?;
    Ok(TrialOutcome { gain: s.channel_gain(), rate })
}

fn check_center(center: &Point3, trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::invalid("trials must be >= 1"));
    }
    if !(center.z > 0.0) || center.y != 0.0 {
        return Err(Error::invalid(format!("swarm center {center} must have y = 0 and z > 0")));
    }
    Ok(())
}

/// Mean channel power gain over `trials` draws, in dB.
pub fn evaluate_position(scenario: &Scenario, center: Point3, trials: usize, rng: &mut RandomStream) -> Result<f64> {
    evaluate_position_with(scenario, center, trials, Objective::ChannelGain, rng)
}

pub fn evaluate_position_with(
    scenario: &Scenario,
    center: Point3,
    trials: usize,
    objective: Objective,
    rng: &mut RandomStream,
) -> Result<f64> {
    check_center(&center, trials)?;
    let mut sum = 0.0;
    for _ in 0..trials {
        let t = simulate_trial(scenario, center, rng)?;
        sum += match objective {
            Objective::ChannelGain => t.gain,
            Objective::Rate => t.rate,
        };
    }
    let mean = sum / trials as f64;
    Ok(match objective {
        Objective::ChannelGain => 10.0 * mean.log10(),
        Objective::Rate => mean,
    })
}

/// Stream of one grid cell, keyed by its coordinates so that refining or
/// extending a grid leaves the other cells' draws untouched.
pub fn cell_stream(seed: u64, x: f64, z: f64) -> RandomStream {
    sub_stream(seed, "deploy-cell", &[x.to_bits(), z.to_bits()])
}

/// Evaluates every cell with `evaluate` and its own sub-stream. Ties on the
/// maximum go to the smallest x, then the smallest z.
pub fn grid_search_with<F>(grid: &Grid2D, seed: u64, objective: Objective, evaluate: F) -> Result<GainMap>
where
    F: Fn(Point3, &mut RandomStream) -> Result<f64> + Sync,
{
    grid.validate()?;
    let xs = grid.xs();
    let zs = grid.zs();
    let values: Vec<f64> = grid
        .cells()
        .into_par_iter()
        .map(|(x, z)| evaluate(Point3::new(x, 0.0, z), &mut cell_stream(seed, x, z)))
        .collect::<Result<_>>()?;

    let mut best = BestCell { x: xs[0], z: zs[0], value: f64::NEG_INFINITY };
    let mut map = Vec::with_capacity(xs.len());
    for (ix, &x) in xs.iter().enumerate() {
        let col = values[ix * zs.len()..(ix + 1) * zs.len()].to_vec();
        for (iz, &v) in col.iter().enumerate() {
            if v > best.value || (ix == 0 && iz == 0) {
                best = BestCell { x, z: zs[iz], value: v };
            }
        }
        map.push(col);
    }
    Ok(GainMap { grid: *grid, objective, mean_gain_db: map, best })
}

pub fn grid_search(scenario: &Scenario, grid: &Grid2D, trials: usize, seed: u64) -> Result<GainMap> {
    grid_search_objective(scenario, grid, trials, Objective::ChannelGain, seed)
}

pub fn grid_search_objective(
    scenario: &Scenario,
    grid: &Grid2D,
    trials: usize,
    objective: Objective,
    seed: u64,
) -> Result<GainMap> {
    grid_search_with(grid, seed, objective, |center, rng| {
        evaluate_position_with(scenario, center, trials, objective, rng)
    })
}
