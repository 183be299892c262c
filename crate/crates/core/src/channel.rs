//! Air-to-ground links and the cascaded SARIS channel.
//!
//! Each air-to-ground link is LoS with a probability that follows a sigmoid
//! in the elevation angle seen from the ground node. The path loss is free
//! space plus an environment-dependent excess loss for the drawn state. LoS
//! links are a pure specular rank-1 product of array responses, NLoS links
//! are i.i.d. unit-variance circularly symmetric complex Gaussian.
//!
//! Matrices map the transmit side to the receive side (`rx × tx`), so the
//! UAV→user link is a `1 × N` row and the BS→UAV link is `N × M`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::beamforming::PhaseConfig;
use crate::error::{Error, Result};
use crate::geometry::{distance, elevation_angle_deg, Point3};
use crate::rng::RandomStream;
use crate::SPEED_OF_LIGHT;

/// Air-to-ground environment parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvParams {
    /// Sigmoid offset (dimensionless, also used as the angle offset in degrees).
    pub a: f64,
    /// Sigmoid steepness per degree.
    pub b: f64,
    pub eta_los_db: f64,
    pub eta_nlos_db: f64,
    pub fc_hz: f64,
}

/// Named environment presets for the sigmoid air-to-ground model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Environment {
    Suburban,
    Urban,
    DenseUrban,
    Highrise,
}

impl Environment {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "suburban" => Some(Environment::Suburban),
            "urban" => Some(Environment::Urban),
            "dense_urban" => Some(Environment::DenseUrban),
            "highrise" | "highrise_urban" => Some(Environment::Highrise),
            _ => None,
        }
    }
}

pub const DEFAULT_CARRIER_HZ: f64 = 2.0e9;

impl EnvParams {
    pub fn preset(env: Environment) -> Self {
        let (a, b, eta_los_db, eta_nlos_db) = match env {
            Environment::Suburban => (4.88, 0.43, 0.1, 21.0),
            Environment::Urban => (9.61, 0.16, 1.0, 20.0),
            Environment::DenseUrban => (12.08, 0.11, 1.6, 23.0),
            Environment::Highrise => (27.23, 0.08, 2.3, 34.0),
        };
        EnvParams { a, b, eta_los_db, eta_nlos_db, fc_hz: DEFAULT_CARRIER_HZ }
    }

    pub fn dense_urban() -> Self {
        Self::preset(Environment::DenseUrban)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.a > 0.0
            && self.b > 0.0
            && self.eta_los_db >= 0.0
            && self.eta_nlos_db > self.eta_los_db
            && self.fc_hz > 0.0
            && [self.a, self.b, self.eta_los_db, self.eta_nlos_db, self.fc_hz]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("environment parameters out of range: {self:?}")))
        }
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.fc_hz
    }
}

impl Default for EnvParams {
    fn default() -> Self {
        Self::dense_urban()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkState {
    LoS,
    NLoS,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DirectLinkMode {
    /// Dead zone: the BS–user link is obstructed and carries no power.
    #[default]
    Blocked,
    /// Terrestrial NLoS link with a log-distance path loss.
    TerrestrialNlos,
}

/// Path-loss exponent of the optional terrestrial direct link.
pub const TERRESTRIAL_EXPONENT: f64 = 3.5;

#[derive(Debug, Clone, PartialEq)]
pub struct LinkChannel {
    pub matrix: DMatrix<Complex64>,
    pub state: LinkState,
    pub large_scale_gain: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub bs_to_uav: Vec<LinkChannel>,
    pub uav_to_user: Vec<LinkChannel>,
    pub direct: Option<LinkChannel>,
    pub eta_reflect: f64,
    pub m: usize,
    pub n: usize,
    pub l: usize,
}

/// Node placement for one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub bs: Point3,
    pub uavs: Vec<Point3>,
    pub user: Point3,
}

/// Array sizes and link options for realizing channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkConfig {
    pub m: usize,
    pub n: usize,
    pub eta_reflect: f64,
    pub direct_link_mode: DirectLinkMode,
}

/// The cascaded channel flattened into one row per reflecting element
/// (or per sub-surface), so that the effective row channel under phases
/// `θ` is `Σ_k e^{jθ_k} rows[k, :] + direct`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cascade {
    pub rows: DMatrix<Complex64>,
    pub direct: Option<DVector<Complex64>>,
}

impl Cascade {
    pub fn elements(&self) -> usize {
        self.rows.nrows()
    }

    pub fn antennas(&self) -> usize {
        self.rows.ncols()
    }

    /// Effective row channel `hᴴ_eff` for the given per-row phases.
    pub fn effective_row(&self, theta: &[f64]) -> DVector<Complex64> {
        let phasors = DVector::from_iterator(
            theta.len(),
            theta.iter().map(|&t| Complex64::from_polar(1.0, t)),
        );
        let mut e = self.rows.tr_mul(&phasors);
        if let Some(d) = &self.direct {
            e += d;
        }
        e
    }

    /// Per-row scalar contributions `rows[k, :] · w`.
    pub fn contributions(&self, w: &DVector<Complex64>) -> DVector<Complex64> {
        &self.rows * w
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(|c| c.norm_sqr() == 0.0)
            && self.direct.as_ref().is_none_or(|d| d.iter().all(|c| c.norm_sqr() == 0.0))
    }
}

/// Sigmoid LoS probability at elevation `theta_deg` (degrees, in (0, 90]).
pub fn los_probability(theta_deg: f64, env: &EnvParams) -> Result<f64> {
    if !(theta_deg > 0.0 && theta_deg <= 90.0) {
        return Err(Error::invalid(format!("elevation {theta_deg} deg outside (0, 90]")));
    }
    Ok(1.0 / (1.0 + env.a * (-env.b * (theta_deg - env.a)).exp()))
}

pub fn free_space_path_loss_db(d: f64, fc_hz: f64) -> f64 {
    20.0 * (4.0 * PI * fc_hz * d / SPEED_OF_LIGHT).log10()
}

pub fn path_loss_db(d: f64, state: LinkState, env: &EnvParams) -> Result<f64> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::invalid(format!("link distance must be > 0, got {d}")));
    }
    let excess = match state {
        LinkState::LoS => env.eta_los_db,
        LinkState::NLoS => env.eta_nlos_db,
    };
    Ok(free_space_path_loss_db(d, env.fc_hz) + excess)
}

/// Linear power gain for a loss in dB, never above unity.
pub fn gain_from_loss_db(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 10.0).min(1.0)
}

/// Uniform linear array response `exp(j 2π s k sin(angle))`, `k = 0..count`.
pub fn ula_response(count: usize, angle_rad: f64, spacing_wavelengths: f64) -> DVector<Complex64> {
    let step = 2.0 * PI * spacing_wavelengths * angle_rad.sin();
    DVector::from_iterator(count, (0..count).map(|k| Complex64::from_polar(1.0, step * k as f64)))
}

/// Element spacing of every array, in wavelengths.
pub const ARRAY_SPACING: f64 = 0.5;

/// Angle off broadside for a ULA laid along the x-axis, looking along `dir`.
fn ula_angle(dir_x: f64) -> f64 {
    dir_x.clamp(-1.0, 1.0).asin()
}

fn complex_gaussian(rows: usize, cols: usize, rng: &mut RandomStream) -> DMatrix<Complex64> {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    // Column-major fill order keeps the draw sequence fixed.
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * scale, im * scale)
    })
}

fn specular(tx: &Point3, rx: &Point3, tx_n: usize, rx_n: usize, d: f64) -> DMatrix<Complex64> {
    let ux = (rx.x - tx.x) / d;
    let a_tx = ula_response(tx_n, ula_angle(ux), ARRAY_SPACING);
    let a_rx = ula_response(rx_n, ula_angle(-ux), ARRAY_SPACING);
    &a_rx * a_tx.adjoint()
}

/// Draws an air-to-ground link; the lower endpoint is the ground node.
pub fn draw_link(
    tx: &Point3,
    rx: &Point3,
    tx_n: usize,
    rx_n: usize,
    env: &EnvParams,
    rng: &mut RandomStream,
) -> Result<LinkChannel> {
    draw_link_in_state(tx, rx, tx_n, rx_n, env, None, rng)
}

/// Like [`draw_link`], optionally forcing the LoS/NLoS state instead of
/// drawing it.
pub fn draw_link_in_state(
    tx: &Point3,
    rx: &Point3,
    tx_n: usize,
    rx_n: usize,
    env: &EnvParams,
    forced: Option<LinkState>,
    rng: &mut RandomStream,
) -> Result<LinkChannel> {
    if tx_n == 0 || rx_n == 0 {
        return Err(Error::invalid("array element counts must be >= 1"));
    }
    let d = distance(tx, rx);
    if d == 0.0 {
        return Err(Error::invalid(format!("coincident link endpoints at {tx}")));
    }
    let (ground, aerial) = if tx.z <= rx.z { (tx, rx) } else { (rx, tx) };
    let elevation = elevation_angle_deg(ground, aerial)?;
    let state = match forced {
        Some(s) => s,
        None => {
            let p_los = los_probability(elevation, env)?;
            if rng.random::<f64>() < p_los {
                LinkState::LoS
            } else {
                LinkState::NLoS
            }
        }
    };
    let gain = gain_from_loss_db(path_loss_db(d, state, env)?);
    let small_scale = match state {
        LinkState::LoS => specular(tx, rx, tx_n, rx_n, d),
        LinkState::NLoS => complex_gaussian(rx_n, tx_n, rng),
    };
    Ok(LinkChannel {
        matrix: small_scale * Complex64::from(gain.sqrt()),
        state,
        large_scale_gain: gain,
        distance: d,
    })
}

/// Terrestrial NLoS link with log-distance loss referenced to free space at 1 m.
pub fn draw_terrestrial_link(
    tx: &Point3,
    rx: &Point3,
    tx_n: usize,
    rx_n: usize,
    env: &EnvParams,
    rng: &mut RandomStream,
) -> Result<LinkChannel> {
    let d = distance(tx, rx);
    if !(d > 0.0) {
        return Err(Error::invalid(format!("coincident link endpoints at {tx}")));
    }
    let loss = free_space_path_loss_db(1.0, env.fc_hz) + 10.0 * TERRESTRIAL_EXPONENT * d.log10();
    let gain = gain_from_loss_db(loss);
    Ok(LinkChannel {
        matrix: complex_gaussian(rx_n, tx_n, rng) * Complex64::from(gain.sqrt()),
        state: LinkState::NLoS,
        large_scale_gain: gain,
        distance: d,
    })
}

/// One independent draw of every link in the layout.
pub fn realize_channels(
    layout: &Layout,
    config: &LinkConfig,
    env: &EnvParams,
    rng: &mut RandomStream,
) -> Result<ChannelRealization> {
    if layout.uavs.is_empty() {
        return Err(Error::invalid("layout has no UAVs"));
    }
    if config.m == 0 || config.n == 0 {
        return Err(Error::invalid("M and N must be >= 1"));
    }
    let mut bs_to_uav = Vec::with_capacity(layout.uavs.len());
    let mut uav_to_user = Vec::with_capacity(layout.uavs.len());
    for uav in &layout.uavs {
        bs_to_uav.push(draw_link(&layout.bs, uav, config.m, config.n, env, rng)?);
        uav_to_user.push(draw_link(uav, &layout.user, config.n, 1, env, rng)?);
    }
    let direct = match config.direct_link_mode {
        DirectLinkMode::Blocked => None,
        DirectLinkMode::TerrestrialNlos => {
            Some(draw_terrestrial_link(&layout.bs, &layout.user, config.m, 1, env, rng)?)
        }
    };
    ChannelRealization::new(bs_to_uav, uav_to_user, direct, config.eta_reflect)
}

impl ChannelRealization {
    /// Assembles a realization from explicit links, checking shapes.
    pub fn new(
        bs_to_uav: Vec<LinkChannel>,
        uav_to_user: Vec<LinkChannel>,
        direct: Option<LinkChannel>,
        eta_reflect: f64,
    ) -> Result<Self> {
        let l = bs_to_uav.len();
        if l == 0 || uav_to_user.len() != l {
            return Err(Error::dims(format!("{l} UAV-to-user links (L >= 1)"), uav_to_user.len()));
        }
        if !(0.0..=1.0).contains(&eta_reflect) {
            return Err(Error::invalid(format!("reflection efficiency {eta_reflect} outside [0, 1]")));
        }
        let (n, m) = bs_to_uav[0].matrix.shape();
        for g in &bs_to_uav {
            if g.matrix.shape() != (n, m) {
                return Err(Error::dims(format!("{n}x{m}"), format!("{:?}", g.matrix.shape())));
            }
        }
        for h in &uav_to_user {
            if h.matrix.shape() != (1, n) {
                return Err(Error::dims(format!("1x{n}"), format!("{:?}", h.matrix.shape())));
            }
        }
        if let Some(d) = &direct {
            if d.matrix.shape() != (1, m) {
                return Err(Error::dims(format!("1x{m}"), format!("{:?}", d.matrix.shape())));
            }
        }
        Ok(ChannelRealization { bs_to_uav, uav_to_user, direct, eta_reflect, m, n, l })
    }

    /// Element-wise cascade: row `l·N + n` is `η · h[l][n] · G_l[n, :]`.
    pub fn cascade(&self) -> Cascade {
        let mut rows = DMatrix::zeros(self.l * self.n, self.m);
        for (l, (g, h)) in self.bs_to_uav.iter().zip(&self.uav_to_user).enumerate() {
            for n in 0..self.n {
                let a = h.matrix[(0, n)] * self.eta_reflect;
                for m in 0..self.m {
                    rows[(l * self.n + n, m)] = a * g.matrix[(n, m)];
                }
            }
        }
        let direct = self.direct.as_ref().map(|d| d.matrix.row(0).transpose());
        Cascade { rows, direct }
    }

    pub fn direct_row(&self) -> Option<DVector<Complex64>> {
        self.direct.as_ref().map(|d| d.matrix.row(0).transpose())
    }
}

/// `hᴴ_eff = Σ_l h_l · diag(η e^{jθ_l}) · G_l (+ direct)`, as a length-`M`
/// vector of row entries.
pub fn effective_channel(r: &ChannelRealization, phases: &PhaseConfig) -> Result<DVector<Complex64>> {
    if phases.uavs() != r.l || phases.elements() != r.n {
        return Err(Error::dims(
            format!("{}x{} phases", r.l, r.n),
            format!("{}x{}", phases.uavs(), phases.elements()),
        ));
    }
    let mut e = match &r.direct {
        Some(d) => d.matrix.row(0).transpose(),
        None => DVector::zeros(r.m),
    };
    for (l, (g, h)) in r.bs_to_uav.iter().zip(&r.uav_to_user).enumerate() {
        let weighted = DVector::from_iterator(
            r.n,
            phases.theta[l]
                .iter()
                .enumerate()
                .map(|(n, &t)| h.matrix[(0, n)] * Complex64::from_polar(r.eta_reflect, t)),
        );
        e += g.matrix.tr_mul(&weighted);
    }
    Ok(e)
}
