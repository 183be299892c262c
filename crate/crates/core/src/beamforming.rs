//! Single-user joint active/passive beamforming.
//!
//! With the reflection phases fixed, the best transmit vector is maximum-ratio
//! transmission on the effective channel. With the transmit vector fixed, the
//! best phases rotate every element's scalar contribution onto a common
//! argument. Alternating the two closed forms never decreases the received
//! power.
//!
//! Vectors named `h_eff` follow the column convention: the received signal
//! is `h_effᴴ w`, and [`crate::channel::effective_channel`] returns the row
//! `hᴴ_eff`.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::channel::{Cascade, ChannelRealization};
use crate::error::{Error, Result};

const TWO_PI: f64 = 2.0 * PI;

/// Default relative objective tolerance of [`alternating_optimize`].
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 100;

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_phase(theta: f64) -> f64 {
    let t = theta.rem_euclid(TWO_PI);
    // rem_euclid can round up to exactly 2π for tiny negative inputs.
    if t >= TWO_PI {
        0.0
    } else {
        t
    }
}

/// Reflection phases, one row per UAV and one entry per element.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseConfig {
    pub theta: Vec<Vec<f64>>,
}

impl PhaseConfig {
    pub fn new(theta: Vec<Vec<f64>>) -> Result<Self> {
        let n = theta.first().map_or(0, Vec::len);
        if theta.is_empty() || n == 0 {
            return Err(Error::invalid("phase configuration must be at least 1x1"));
        }
        if theta.iter().any(|row| row.len() != n) {
            return Err(Error::invalid("ragged phase configuration"));
        }
        Ok(PhaseConfig {
            theta: theta.into_iter().map(|row| row.into_iter().map(wrap_phase).collect()).collect(),
        })
    }

    pub fn zeros(uavs: usize, elements: usize) -> Self {
        PhaseConfig { theta: vec![vec![0.0; elements]; uavs] }
    }

    pub(crate) fn from_flat(flat: &[f64], elements: usize) -> Self {
        PhaseConfig { theta: flat.chunks(elements).map(|c| c.iter().copied().map(wrap_phase).collect()).collect() }
    }

    pub fn uavs(&self) -> usize {
        self.theta.len()
    }

    pub fn elements(&self) -> usize {
        self.theta.first().map_or(0, Vec::len)
    }

    pub fn flat(&self) -> Vec<f64> {
        self.theta.concat()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingSolution {
    /// Unit-norm transmit vector.
    pub w: DVector<Complex64>,
    pub phases: PhaseConfig,
    pub h_eff: DVector<Complex64>,
    /// `|h_effᴴ w|²` at initialization and after every iteration.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
}

impl BeamformingSolution {
    pub fn objective(&self) -> f64 {
        self.objective_trace.last().copied().unwrap_or(0.0)
    }

    /// Channel power gain `‖h_eff‖²`.
    pub fn channel_gain(&self) -> f64 {
        self.h_eff.norm_squared()
    }
}

/// Maximum-ratio transmission: `h / ‖h‖`.
pub fn mrt(h: &DVector<Complex64>) -> Result<DVector<Complex64>> {
    let norm = h.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::ZeroChannel);
    }
    Ok(h.unscale(norm))
}

/// `|h_effᴴ w|²` for a row channel `e = hᴴ_eff`.
fn received_power(row: &DVector<Complex64>, w: &DVector<Complex64>) -> f64 {
    row.dot(&w).norm_sqr()
}

fn aligned(contrib: &DVector<Complex64>, reference: f64) -> Vec<f64> {
    contrib
        .iter()
        .map(|c| if c.norm_sqr() == 0.0 { 0.0 } else { wrap_phase(reference - c.arg()) })
        .collect()
}

fn reference_phase(cascade: &Cascade, w: &DVector<Complex64>) -> f64 {
    match &cascade.direct {
        Some(d) => {
            let s = d.dot(&w);
            if s.norm_sqr() == 0.0 {
                0.0
            } else {
                s.arg()
            }
        }
        None => 0.0,
    }
}

/// Phases that co-phase every contribution with the direct path (or with 0).
pub fn align_cascade(cascade: &Cascade, w: &DVector<Complex64>) -> Vec<f64> {
    aligned(&cascade.contributions(w), reference_phase(cascade, w))
}

pub fn align_phases(r: &ChannelRealization, w: &DVector<Complex64>) -> Result<PhaseConfig> {
    if w.len() != r.m {
        return Err(Error::dims(format!("transmit vector of length {}", r.m), w.len()));
    }
    Ok(PhaseConfig::from_flat(&align_cascade(&r.cascade(), w), r.n))
}

/// Outcome of alternating optimization on a flattened cascade.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeSolution {
    pub theta: Vec<f64>,
    pub w: DVector<Complex64>,
    /// Effective row channel `hᴴ_eff`.
    pub row: DVector<Complex64>,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
}

/// Starting transmit vector when the zero-phase effective channel vanishes.
fn fallback_start(cascade: &Cascade) -> Result<DVector<Complex64>> {
    let best = (0..cascade.elements())
        .max_by(|&a, &b| cascade.rows.row(a).norm_squared().total_cmp(&cascade.rows.row(b).norm_squared()))
        .map(|k| cascade.rows.row(k).transpose().conjugate());
    match (best, &cascade.direct) {
        (Some(v), _) if v.norm() > 0.0 => mrt(&v),
        (_, Some(d)) => mrt(&d.conjugate()),
        _ => Err(Error::ZeroChannel),
    }
}

/// Alternates phase alignment and MRT from the given (or zero) phases.
///
/// Stops once an iteration improves the objective by less than `tol`
/// (relative), or once the MRT half-step no longer moves the objective,
/// which means the current pair is a fixed point.
pub fn optimize_cascade(
    cascade: &Cascade,
    tol: f64,
    max_iter: usize,
    start: Option<&[f64]>,
) -> Result<CascadeSolution> {
    if !(tol > 0.0) || max_iter == 0 {
        return Err(Error::invalid("tol must be > 0 and max_iter >= 1"));
    }
    if cascade.is_zero() {
        return Err(Error::ZeroChannel);
    }
    let mut theta = match start {
        Some(t) if t.len() == cascade.elements() => t.to_vec(),
        Some(t) => return Err(Error::dims(cascade.elements(), t.len())),
        None => vec![0.0; cascade.elements()],
    };
    let mut row = cascade.effective_row(&theta);
    let mut w = match mrt(&row.conjugate()) {
        Ok(w) => w,
        Err(_) => fallback_start(cascade)?,
    };
    let mut objective = received_power(&row, &w);
    let mut trace = vec![objective];
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        theta = align_cascade(cascade, &w);
        row = cascade.effective_row(&theta);
        let after_align = received_power(&row, &w);
        w = mrt(&row.conjugate())?;
        let after_mrt = received_power(&row, &w);
        let gain = after_mrt - objective;
        objective = after_mrt;
        trace.push(objective);
        let scale = objective.max(f64::MIN_POSITIVE);
        if gain <= tol * scale || after_mrt - after_align <= tol * scale {
            break;
        }
    }
    Ok(CascadeSolution { theta, w, row, objective_trace: trace, iterations })
}

/// Joint active/passive beamforming from zero phases and MRT.
pub fn alternating_optimize(r: &ChannelRealization, tol: f64, max_iter: usize) -> Result<BeamformingSolution> {
    let sol = optimize_cascade(&r.cascade(), tol, max_iter, None)?;
    Ok(BeamformingSolution {
        phases: PhaseConfig::from_flat(&sol.theta, r.n),
        h_eff: sol.row.conjugate(),
        w: sol.w,
        objective_trace: sol.objective_trace,
        iterations: sol.iterations,
    })
}

/// Rounds every phase to the nearest point of a `2^bits`-level codebook.
pub fn quantize_phases(p: &PhaseConfig, bits: u32) -> Result<PhaseConfig> {
    if bits == 0 || bits > 52 {
        return Err(Error::invalid(format!("phase bits must be in 1..=52, got {bits}")));
    }
    let levels = (1u64 << bits) as f64;
    let step = TWO_PI / levels;
    let theta = p
        .theta
        .iter()
        .map(|row| {
            row.iter()
                .map(|&t| {
                    let k = (t / step).round().rem_euclid(levels);
                    k * step
                })
                .collect()
        })
        .collect();
    Ok(PhaseConfig { theta })
}

/// Re-evaluates a beamformer for new phases: MRT on the resulting channel.
pub fn solution_for_phases(r: &ChannelRealization, phases: PhaseConfig) -> Result<BeamformingSolution> {
    let row = crate::channel::effective_channel(r, &phases)?;
    let w = mrt(&row.conjugate())?;
    let objective = received_power(&row, &w);
    Ok(BeamformingSolution { w, phases, h_eff: row.conjugate(), objective_trace: vec![objective], iterations: 0 })
}

/// Returns `(snr, rate)` with `rate = log2(1 + snr)` in bit/s/Hz.
pub fn snr_and_rate(s: &BeamformingSolution, p_tx: f64, noise: f64) -> Result<(f64, f64)> {
    let gain = s.h_eff.dotc(&s.w).norm_sqr();
    snr_and_rate_from_gain(gain, p_tx, noise)
}

pub fn snr_and_rate_from_gain(gain: f64, p_tx: f64, noise: f64) -> Result<(f64, f64)> {
    if !(p_tx > 0.0) || !(noise > 0.0) {
        return Err(Error::invalid("transmit and noise power must be > 0"));
    }
    let snr = p_tx * gain / noise;
    Ok((snr, (1.0 + snr).log2()))
}

/// Users served in turn over equal sub-time-slots, each with its own
/// single-user beamformer. Returns each user's time-averaged rate.
pub fn time_shared_rates(
    users: &[ChannelRealization],
    tol: f64,
    max_iter: usize,
    p_tx: f64,
    noise: f64,
) -> Result<Vec<f64>> {
    if users.is_empty() {
        return Err(Error::invalid("no users to schedule"));
    }
    let share = 1.0 / users.len() as f64;
    users
        .iter()
        .map(|r| {
            let s = alternating_optimize(r, tol, max_iter)?;
            Ok(share * snr_and_rate(&s, p_tx, noise)?.1)
        })
        .collect()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}
