//! Grouped sub-surface pilot estimation.
//!
//! The `L·N` reflecting elements are split into `N′` contiguous sub-surfaces
//! that share one reflection coefficient during training. Over `N′ + 1`
//! pilot symbols the surfaces cycle through the rows of a pilot book, and the
//! BS recovers the direct channel plus the `N′` aggregated group channels by
//! least squares. Data transmission then uses one phase per group.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::beamforming::{optimize_cascade, snr_and_rate_from_gain, CascadeSolution};
use crate::channel::{Cascade, ChannelRealization};
use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// Number of channel coefficients a per-element estimator must learn.
pub fn coefficient_count(m: u64, n: u64, l: u64, k: u64) -> u64 {
    k * m * n * l + k * m
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsurfaceGrouping {
    pub n_groups: usize,
    pub group_size: usize,
    pub uavs: usize,
    pub elements: usize,
    /// Group index of element `l·N + n`.
    pub assignment: Vec<usize>,
}

impl SubsurfaceGrouping {
    pub fn group_of(&self, uav: usize, element: usize) -> usize {
        self.assignment[uav * self.elements + element]
    }

    /// Expands one phase per group into one phase per element.
    pub fn expand(&self, group_phases: &[f64]) -> Vec<f64> {
        self.assignment.iter().map(|&g| group_phases[g]).collect()
    }
}

pub fn group_subsurfaces(l: usize, n: usize, n_groups: usize) -> Result<SubsurfaceGrouping> {
    let total = l * n;
    if total == 0 || n_groups == 0 || total % n_groups != 0 {
        return Err(Error::invalid(format!(
            "{n_groups} sub-surfaces do not evenly divide {total} elements"
        )));
    }
    let group_size = total / n_groups;
    Ok(SubsurfaceGrouping {
        n_groups,
        group_size,
        uavs: l,
        elements: n,
        assignment: (0..total).map(|k| k / group_size).collect(),
    })
}

/// Reflection states applied over the pilot symbols: row `t` is pilot `t`,
/// column 0 multiplies the direct path and column `q + 1` sub-surface `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotBook {
    pub states: DMatrix<Complex64>,
    inverse: DMatrix<Complex64>,
    pub condition_number: f64,
}

impl PilotBook {
    pub fn new(states: DMatrix<Complex64>) -> Result<Self> {
        if !states.is_square() || states.nrows() < 2 {
            return Err(Error::invalid("pilot book must be square with at least 2 states"));
        }
        if states.iter().any(|c| (c.norm() - 1.0).abs() > 1e-9) {
            return Err(Error::invalid("pilot book entries must be unit modulus"));
        }
        let sv = states.clone().singular_values();
        let (max, min) = sv.iter().fold((0.0f64, f64::INFINITY), |(hi, lo), &s| (hi.max(s), lo.min(s)));
        if !(min > 1e-12 * max) {
            return Err(Error::SingularPilotBook);
        }
        let inverse = states.clone().try_inverse().ok_or(Error::SingularPilotBook)?;
        Ok(PilotBook { states, inverse, condition_number: max / min })
    }

    pub fn symbols(&self) -> usize {
        self.states.nrows()
    }

    pub fn n_groups(&self) -> usize {
        self.states.ncols() - 1
    }
}

/// `(N′+1)`-point DFT pilot book.
pub fn pilot_patterns(n_groups: usize) -> Result<PilotBook> {
    if n_groups == 0 {
        return Err(Error::invalid("at least one sub-surface is required"));
    }
    let k = n_groups + 1;
    let states = DMatrix::from_fn(k, k, |t, j| {
        Complex64::from_polar(1.0, -2.0 * PI * ((t * j) % k) as f64 / k as f64)
    });
    PilotBook::new(states)
}

/// Noise level on the received pilots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PilotNoise {
    /// Average received pilot power per antenna over noise, in dB.
    /// `f64::INFINITY` means noiseless.
    SnrDb(f64),
    /// Same noise power as data transmission.
    Data { p_tx: f64, noise: f64 },
}

impl fmt::Display for PilotNoise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PilotNoise::SnrDb(v) if v.is_infinite() && *v > 0.0 => write!(f, "inf"),
            PilotNoise::SnrDb(v) => write!(f, "{v}"),
            PilotNoise::Data { .. } => write!(f, "data"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    pub direct_estimate: Option<DVector<Complex64>>,
    /// Aggregated channel of each sub-surface under zero phase, as rows.
    pub group_estimates: Vec<DVector<Complex64>>,
    pub mse: f64,
    /// `‖estimate − truth‖_F / ‖truth‖_F`.
    pub relative_error: f64,
    pub overhead_symbols: usize,
}

impl EstimationResult {
    pub fn cascade(&self) -> Cascade {
        let m = self.group_estimates.first().map_or(0, |g| g.len());
        let rows = DMatrix::from_fn(self.group_estimates.len(), m, |q, j| self.group_estimates[q][j]);
        Cascade { rows, direct: self.direct_estimate.clone() }
    }
}

/// Direct row (zeros when blocked) stacked over the aggregated group rows.
pub fn aggregated_channels(r: &ChannelRealization, g: &SubsurfaceGrouping) -> Result<DMatrix<Complex64>> {
    if g.uavs != r.l || g.elements != r.n {
        return Err(Error::dims(format!("grouping of {}x{}", r.l, r.n), format!("{}x{}", g.uavs, g.elements)));
    }
    let cascade = r.cascade();
    let mut x = DMatrix::zeros(g.n_groups + 1, r.m);
    if let Some(d) = &cascade.direct {
        x.row_mut(0).copy_from(&d.transpose());
    }
    for (k, &q) in g.assignment.iter().enumerate() {
        let row = cascade.rows.row(k).clone_owned();
        let mut target = x.row_mut(q + 1);
        target += row;
    }
    Ok(x)
}

pub fn run_estimation(
    r: &ChannelRealization,
    g: &SubsurfaceGrouping,
    book: &PilotBook,
    pilot_noise: PilotNoise,
    rng: &mut RandomStream,
) -> Result<EstimationResult> {
    if book.n_groups() != g.n_groups {
        return Err(Error::dims(format!("pilot book for {} groups", g.n_groups), book.n_groups()));
    }
    let truth = aggregated_channels(r, g)?;
    let clean = &book.states * &truth;
    let variance = match pilot_noise {
        PilotNoise::SnrDb(snr_db) => {
            let power = clean.norm_squared() / clean.len() as f64;
            power / 10f64.powf(snr_db / 10.0)
        }
        PilotNoise::Data { p_tx, noise } => {
            if !(p_tx > 0.0 && noise > 0.0) {
                return Err(Error::invalid("transmit and noise power must be > 0"));
            }
            noise / p_tx
        }
    };
    let mut received = clean;
    if variance > 0.0 {
        let sigma = (variance / 2.0).sqrt();
        for y in received.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *y += Complex64::new(re * sigma, im * sigma);
        }
    }
    let estimate = &book.inverse * received;

    let first = if r.direct.is_some() { 0 } else { 1 };
    let err = (estimate.rows(first, estimate.nrows() - first) - truth.rows(first, truth.nrows() - first))
        .norm_squared();
    let truth_energy = truth.rows(first, truth.nrows() - first).norm_squared();
    let entries = (truth.nrows() - first) * truth.ncols();

    Ok(EstimationResult {
        direct_estimate: r.direct.as_ref().map(|_| estimate.row(0).transpose()),
        group_estimates: (1..estimate.nrows()).map(|q| estimate.row(q).transpose()).collect(),
        mse: err / entries as f64,
        relative_error: if truth_energy > 0.0 { (err / truth_energy).sqrt() } else { err.sqrt() },
        overhead_symbols: book.symbols(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateLoss {
    pub rate_perfect: f64,
    pub rate_estimated: f64,
    pub delta: f64,
}

/// Rate of the group-level beamformer designed on estimates, measured on the
/// true channel, against the per-element perfect-CSI beamformer.
///
/// The perfect-CSI reference keeps the better of the default alternating
/// run and one warm-started from the deployed configuration, so it never
/// falls below what the estimated design achieves.
pub fn rate_loss(
    r: &ChannelRealization,
    est: &EstimationResult,
    g: &SubsurfaceGrouping,
    p_tx: f64,
    noise: f64,
    tol: f64,
    max_iter: usize,
) -> Result<RateLoss> {
    let truth = r.cascade();
    let cold = optimize_cascade(&truth, tol, max_iter, None)?;
    rate_loss_with_reference(&truth, &cold, est, g, p_tx, noise, tol, max_iter)
}

/// [`rate_loss`] with the default perfect-CSI run already computed, for
/// sweeps that reuse one realization across many estimation settings.
#[allow(clippy::too_many_arguments)]
pub fn rate_loss_with_reference(
    truth: &Cascade,
    cold: &CascadeSolution,
    est: &EstimationResult,
    g: &SubsurfaceGrouping,
    p_tx: f64,
    noise: f64,
    tol: f64,
    max_iter: usize,
) -> Result<RateLoss> {
    if g.assignment.len() != truth.elements() {
        return Err(Error::dims(truth.elements(), g.assignment.len()));
    }
    let designed = optimize_cascade(&est.cascade(), tol, max_iter, None)?;
    let theta = g.expand(&designed.theta);
    let achieved = truth.effective_row(&theta).dot(&designed.w).norm_sqr();

    let warm = optimize_cascade(truth, tol, max_iter, Some(&theta))?;
    let perfect = cold.objective_trace.last().copied().unwrap_or(0.0).max(
        warm.objective_trace.last().copied().unwrap_or(0.0),
    );

    let (_, rate_estimated) = snr_and_rate_from_gain(achieved, p_tx, noise)?;
    let (_, rate_perfect) = snr_and_rate_from_gain(perfect.max(achieved), p_tx, noise)?;
    Ok(RateLoss { rate_perfect, rate_estimated, delta: rate_perfect - rate_estimated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{realize_channels, DirectLinkMode, EnvParams, Layout, LinkChannel, LinkConfig, LinkState};
    use crate::geometry::Point3;
    use crate::rng::stream_from_seed;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn realization(seed: u64, l: usize, n: usize, m: usize, direct: bool) -> ChannelRealization {
        let layout = Layout {
            bs: Point3::ORIGIN,
            uavs: (0..l).map(|i| Point3::new(100.0 + 2.0 * i as f64, i as f64, 60.0)).collect(),
            user: Point3::new(200.0, 15.0, 0.0),
        };
        let mode = if direct { DirectLinkMode::TerrestrialNlos } else { DirectLinkMode::Blocked };
        let cfg = LinkConfig { m, n, eta_reflect: 0.9, direct_link_mode: mode };
        realize_channels(&layout, &cfg, &EnvParams::dense_urban(), &mut stream_from_seed(seed)).unwrap()
    }

    #[test]
    fn coefficient_counts() {
        assert_eq!(coefficient_count(16, 20, 10, 1), 3216);
        assert_eq!(coefficient_count(16, 20, 10, 4), 12864);
        assert_eq!(coefficient_count(7, 1, 1, 1), 14);
    }

    #[test]
    fn grouping_examples() {
        let g = group_subsurfaces(10, 20, 40).unwrap();
        assert_eq!(g.group_size, 5);
        assert_eq!(g.group_of(0, 7), 1);
        assert_eq!(g.group_of(9, 19), 39);
        let singles = group_subsurfaces(10, 20, 200).unwrap();
        assert_eq!(singles.group_size, 1);
        assert!(singles.assignment.iter().enumerate().all(|(k, &q)| k == q));
        let one = group_subsurfaces(10, 20, 1).unwrap();
        assert!(one.assignment.iter().all(|&q| q == 0));
        assert!(group_subsurfaces(10, 20, 7).is_err());
        assert!(group_subsurfaces(10, 20, 0).is_err());
    }

    #[test]
    fn grouping_covers_each_element_once() {
        for n_groups in [1, 2, 4, 5, 8, 10, 20, 25, 40, 50, 100, 200] {
            let g = group_subsurfaces(10, 20, n_groups).unwrap();
            let mut counts = vec![0; n_groups];
            for &q in &g.assignment {
                counts[q] += 1;
            }
            assert!(counts.iter().all(|&c| c == g.group_size));
            assert!(g.assignment.windows(2).all(|w| w[1] == w[0] || w[1] == w[0] + 1));
        }
    }

    #[test]
    fn two_point_pilot_book() {
        let b = pilot_patterns(1).unwrap();
        let expected = [c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)];
        for (got, want) in b.states.iter().zip(expected) {
            assert_abs_diff_eq!(got.re, want.re, epsilon = 1e-15);
            assert_abs_diff_eq!(got.im, want.im, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(b.condition_number, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn fourier_book_is_orthogonal() {
        for n_groups in [1, 3, 10, 40] {
            let b = pilot_patterns(n_groups).unwrap();
            let k = n_groups + 1;
            assert!(b.states.iter().all(|x| (x.norm() - 1.0).abs() < 1e-12));
            let gram = b.states.adjoint() * &b.states;
            let ident = DMatrix::<Complex64>::identity(k, k) * Complex64::from(k as f64);
            assert!((gram - ident).norm() < 1e-9);
            assert!((b.condition_number - 1.0).abs() < 1e-9);
        }
        assert!(pilot_patterns(0).is_err());
    }

    #[test]
    fn singular_book_is_rejected() {
        let states = DMatrix::from_element(2, 2, c(1.0, 0.0));
        assert!(matches!(PilotBook::new(states), Err(Error::SingularPilotBook)));
        let not_unit = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)]);
        assert!(PilotBook::new(not_unit).is_err());
    }

    #[test]
    fn noiseless_recovery_for_every_grouping() {
        let r = realization(1, 10, 20, 16, true);
        for n_groups in [1, 10, 40, 200] {
            let g = group_subsurfaces(10, 20, n_groups).unwrap();
            let b = pilot_patterns(n_groups).unwrap();
            let est = run_estimation(&r, &g, &b, PilotNoise::SnrDb(f64::INFINITY), &mut stream_from_seed(0)).unwrap();
            assert!(est.relative_error < 1e-9, "N'={n_groups}: {}", est.relative_error);
            assert_eq!(est.overhead_symbols, n_groups + 1);
            assert_eq!(est.group_estimates.len(), n_groups);
            assert!(est.direct_estimate.is_some());
        }
    }

    #[test]
    fn single_group_scalar_hand_solve() {
        // Direct 0.5, two elements aggregating to 0.3+0.4j under zero phase.
        let link = |m: DMatrix<Complex64>| LinkChannel {
            matrix: m,
            state: LinkState::LoS,
            large_scale_gain: 1.0,
            distance: 1.0,
        };
        let r = ChannelRealization::new(
            vec![link(DMatrix::from_row_slice(2, 1, &[c(1.0, 0.0), c(1.0, 0.0)]))],
            vec![link(DMatrix::from_row_slice(1, 2, &[c(0.1, 0.2), c(0.2, 0.2)]))],
            Some(link(DMatrix::from_element(1, 1, c(0.5, 0.0)))),
            1.0,
        )
        .unwrap();
        let g = group_subsurfaces(1, 2, 1).unwrap();
        let b = pilot_patterns(1).unwrap();
        let est = run_estimation(&r, &g, &b, PilotNoise::SnrDb(f64::INFINITY), &mut stream_from_seed(0)).unwrap();
        // y0 = d + v = 0.8+0.4j, y1 = d - v = 0.2-0.4j; d = (y0+y1)/2, v = (y0-y1)/2.
        let d = est.direct_estimate.unwrap()[0];
        let v = est.group_estimates[0][0];
        assert_abs_diff_eq!(d.re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(d.im, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.re, 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(v.im, 0.4, epsilon = 1e-15);
    }

    #[test]
    fn mse_follows_noise_power() {
        let g = group_subsurfaces(2, 10, 10).unwrap();
        let b = pilot_patterns(10).unwrap();
        let trials = 200;
        let mut prev = f64::INFINITY;
        let mut log_mse = Vec::new();
        for snr in [0.0, 10.0, 20.0, 30.0] {
            let mut rng = stream_from_seed(99);
            let mut total = 0.0;
            for t in 0..trials {
                let r = realization(1000 + t, 2, 10, 4, false);
                let est = run_estimation(&r, &g, &b, PilotNoise::SnrDb(snr), &mut rng).unwrap();
                // Normalized so trials with different path loss weigh equally.
                total += est.relative_error.powi(2);
            }
            let mean = total / trials as f64;
            assert!(mean < prev);
            prev = mean;
            log_mse.push(mean.log10());
        }
        let slope = (log_mse[3] - log_mse[0]) / 3.0;
        assert!((slope + 1.0).abs() < 0.1, "slope per decade {slope}");
    }

    #[test]
    fn perfect_per_element_csi_loses_nothing() {
        let noise = 1e-11;
        for seed in 0..10 {
            let r = realization(50 + seed, 3, 4, 4, seed % 2 == 0);
            let g = group_subsurfaces(3, 4, 12).unwrap();
            let b = pilot_patterns(12).unwrap();
            let est = run_estimation(&r, &g, &b, PilotNoise::SnrDb(f64::INFINITY), &mut stream_from_seed(0)).unwrap();
            let loss = rate_loss(&r, &est, &g, 0.1, noise, 1e-6, 100).unwrap();
            assert!(loss.delta <= 1e-6, "delta {}", loss.delta);
            assert!(loss.delta >= 0.0);
        }
    }

    #[test]
    fn coarse_groups_never_beat_perfect_csi() {
        let noise = 1e-11;
        for seed in 0..20 {
            let r = realization(80 + seed, 2, 6, 4, false);
            for n_groups in [1, 2, 3, 6, 12] {
                let g = group_subsurfaces(2, 6, n_groups).unwrap();
                let b = pilot_patterns(n_groups).unwrap();
                let est = run_estimation(&r, &g, &b, PilotNoise::SnrDb(10.0), &mut stream_from_seed(seed)).unwrap();
                let loss = rate_loss(&r, &est, &g, 0.1, noise, 1e-6, 100).unwrap();
                assert!(loss.rate_estimated <= loss.rate_perfect + 1e-12);
                assert!(loss.delta >= 0.0);
            }
        }
    }

    #[test]
    fn data_noise_uses_transmit_power() {
        let r = realization(3, 2, 4, 2, false);
        let g = group_subsurfaces(2, 4, 8).unwrap();
        let b = pilot_patterns(8).unwrap();
        let est = run_estimation(&r, &g, &b, PilotNoise::Data { p_tx: 0.1, noise: 1e-11 }, &mut stream_from_seed(4)).unwrap();
        // LS through a DFT book divides the noise variance by the book size.
        assert!(est.mse > 0.0);
        assert!(est.mse < 1e-10 / 9.0 * 5.0);
        assert!(run_estimation(&r, &g, &b, PilotNoise::Data { p_tx: 0.0, noise: 1.0 }, &mut stream_from_seed(4)).is_err());
    }

    #[test]
    fn mismatched_book_is_rejected() {
        let r = realization(3, 2, 4, 2, false);
        let g = group_subsurfaces(2, 4, 8).unwrap();
        let b = pilot_patterns(4).unwrap();
        assert!(run_estimation(&r, &g, &b, PilotNoise::SnrDb(10.0), &mut stream_from_seed(4)).is_err());
        let wrong = group_subsurfaces(4, 2, 8).unwrap();
        let b = pilot_patterns(8).unwrap();
        assert!(run_estimation(&r, &wrong, &b, PilotNoise::SnrDb(10.0), &mut stream_from_seed(4)).is_err());
    }
}
