use crate::beamforming::{dbm_to_watts, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::channel::{DirectLinkMode, EnvParams, LinkConfig};
use crate::error::{Error, Result};
use crate::geometry::{ClusterShape, DiskRegion, Point3};

/// Beamforming settings shared by every trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfSettings {
    pub tol: f64,
    pub max_iter: usize,
    /// Discrete phase resolution; `None` keeps continuous phases.
    pub phase_bits: Option<u32>,
}

impl Default for BfSettings {
    fn default() -> Self {
        BfSettings { tol: DEFAULT_TOL, max_iter: DEFAULT_MAX_ITER, phase_bits: None }
    }
}

/// Altitude of the no-optimization baseline swarm center above the user-region center.
pub const BASELINE_ALTITUDE_M: f64 = 50.0;

/// One simulated deployment: a BS at the origin, a swarm of `l` UAVs around
/// a movable center and single users scattered around `(x_u, 0, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub bs: Point3,
    pub m: usize,
    pub n: usize,
    pub l: usize,
    pub r_a: f64,
    pub r_u: f64,
    pub x_u: f64,
    pub eta_reflect: f64,
    pub env: EnvParams,
    pub p_tx: f64,
    pub noise: f64,
    pub direct_link_mode: DirectLinkMode,
    pub cluster_shape: ClusterShape,
    pub bf: BfSettings,
    pub trials: usize,
    pub seed: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            bs: Point3::ORIGIN,
            m: 16,
            n: 20,
            l: 10,
            r_a: 10.0,
            r_u: 100.0,
            x_u: 200.0,
            eta_reflect: 0.9,
            env: EnvParams::dense_urban(),
            p_tx: dbm_to_watts(20.0),
            noise: dbm_to_watts(-80.0),
            direct_link_mode: DirectLinkMode::Blocked,
            cluster_shape: ClusterShape::Disk,
            bf: BfSettings::default(),
            trials: 1000,
            seed: 1,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.m == 0 || self.n == 0 || self.l == 0 || self.trials == 0 {
            return bad(format!(
                "counts must be >= 1 (M={}, N={}, L={}, trials={})",
                self.m, self.n, self.l, self.trials
            ));
        }
        if !(self.r_a > 0.0 && self.r_u > 0.0) {
            return bad(format!("radii must be > 0 (r_a={}, r_u={})", self.r_a, self.r_u));
        }
        if !(self.eta_reflect > 0.0 && self.eta_reflect <= 1.0) {
            return bad(format!("eta_reflect must be in (0, 1], got {}", self.eta_reflect));
        }
        if !(self.noise > 0.0 && self.p_tx > 0.0) {
            return bad("transmit and noise power must be > 0".into());
        }
        if !(self.bf.tol > 0.0) || self.bf.max_iter == 0 {
            return bad("bf.tol must be > 0 and bf.max_iter >= 1".into());
        }
        if matches!(self.bf.phase_bits, Some(0)) {
            return bad("bf.phase_bits must be >= 1 when set".into());
        }
        if !self.x_u.is_finite() {
            return bad("x_u must be finite".into());
        }
        self.env.validate().map_err(|e| Error::Config(e.to_string()))
    }

    pub fn user_region(&self) -> Result<DiskRegion> {
        DiskRegion::new(Point3::new(self.x_u, 0.0, 0.0), self.r_u)
    }

    pub fn swarm_region(&self, center: Point3) -> Result<DiskRegion> {
        DiskRegion::new(center, self.r_a)
    }

    /// Swarm center used when deployment is not optimized.
    pub fn baseline_center(&self) -> Point3 {
        Point3::new(self.x_u, 0.0, BASELINE_ALTITUDE_M)
    }

    pub fn link_config(&self) -> LinkConfig {
        LinkConfig {
            m: self.m,
            n: self.n,
            eta_reflect: self.eta_reflect,
            direct_link_mode: self.direct_link_mode,
        }
    }
}
