//! Structured key-value configuration.
//!
//! Files are TOML; nested tables flatten to dotted keys (`scenario.L`,
//! `grid.x_step_m`, ...). Unknown keys are rejected by name.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::beamforming::dbm_to_watts;
use crate::channel::{DirectLinkMode, EnvParams, Environment};
use crate::deployment::{Grid2D, Objective};
use crate::error::{Error, Result};
use crate::estimation::PilotNoise;
use crate::experiments::Scenario;
use crate::geometry::{ClusterShape, Point3};

pub const KNOWN_KEYS: &[&str] = &[
    "scenario.M",
    "scenario.N",
    "scenario.L",
    "scenario.r_a_m",
    "scenario.r_u_m",
    "scenario.x_u_m",
    "scenario.eta_reflect",
    "scenario.noise_dbm",
    "scenario.trials",
    "scenario.seed",
    "scenario.direct_link",
    "scenario.cluster_shape",
    "tx.power_dbm",
    "env.preset",
    "env.a",
    "env.b",
    "env.eta_los_db",
    "env.eta_nlos_db",
    "env.fc_hz",
    "bf.tol",
    "bf.max_iter",
    "bf.phase_bits",
    "est.n_groups",
    "est.pilot_snr_db",
    "grid.x_min_m",
    "grid.x_max_m",
    "grid.x_step_m",
    "grid.z_min_m",
    "grid.z_max_m",
    "grid.z_step_m",
    "grid.trials",
    "grid.objective",
    "sweep.l_values",
    "sweep.r_a_values",
    "sweep.r_u_values",
    "sweep.optimize",
    "deploy.x_m",
    "deploy.z_m",
];

/// Keys every configuration file must set: the experiment geometry.
pub const REQUIRED_KEYS: &[&str] = &["scenario.L", "scenario.r_a_m", "scenario.r_u_m", "scenario.x_u_m"];

pub const PRESETS: &[(&str, &str)] = &[
    ("paper_fig4", include_str!("../../configs/paper_fig4.toml")),
    ("paper_fig5a", include_str!("../../configs/paper_fig5a.toml")),
    ("paper_fig5b", include_str!("../../configs/paper_fig5b.toml")),
    ("estimation", include_str!("../../configs/estimation.toml")),
];

/// Pilot noise setting before transmit/noise powers are known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PilotSetting {
    SnrDb(f64),
    Data,
}

impl PilotSetting {
    pub fn resolve(self, scenario: &Scenario) -> PilotNoise {
        match self {
            PilotSetting::SnrDb(v) => PilotNoise::SnrDb(v),
            PilotSetting::Data => PilotNoise::Data { p_tx: scenario.p_tx, noise: scenario.noise },
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "data" => Ok(PilotSetting::Data),
            "inf" | "+inf" | "infinity" => Ok(PilotSetting::SnrDb(f64::INFINITY)),
            other => other
                .parse::<f64>()
                .ok()
                .filter(|v| !v.is_nan())
                .map(PilotSetting::SnrDb)
                .ok_or_else(|| Error::Config(format!("bad pilot SNR '{other}' (number, 'inf' or 'data')"))),
        }
    }
}

impl fmt::Display for PilotSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PilotSetting::SnrDb(v) if *v == f64::INFINITY => write!(f, "inf"),
            PilotSetting::SnrDb(v) => write!(f, "{v}"),
            PilotSetting::Data => write!(f, "data"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub scenario: Scenario,
    pub grid: Grid2D,
    /// Trials per cell when a runner searches the deployment.
    pub search_trials: usize,
    pub objective: Objective,
    pub l_values: Vec<usize>,
    pub r_a_values: Vec<f64>,
    pub r_u_values: Vec<f64>,
    pub optimize: bool,
    pub n_groups: Vec<usize>,
    pub pilot_snr: Vec<PilotSetting>,
    /// Fixed swarm center for the estimation sweep; the baseline when unset.
    pub fixed_center: Option<Point3>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            scenario: Scenario::default(),
            grid: Grid2D::default(),
            search_trials: 200,
            objective: Objective::ChannelGain,
            l_values: vec![1, 5, 10, 20],
            r_a_values: vec![5.0, 10.0, 25.0, 50.0],
            r_u_values: vec![50.0, 100.0, 150.0],
            optimize: true,
            n_groups: vec![1, 10, 40, 200],
            pilot_snr: vec![
                PilotSetting::SnrDb(0.0),
                PilotSetting::SnrDb(10.0),
                PilotSetting::SnrDb(20.0),
                PilotSetting::SnrDb(30.0),
            ],
            fixed_center: None,
        }
    }
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, toml::Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out),
            other => {
                out.insert(key, other.clone());
            }
        }
    }
}

fn as_f64(key: &str, v: &toml::Value) -> Result<f64> {
    match v {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        toml::Value::String(s) if s == "inf" => Ok(f64::INFINITY),
        _ => Err(Error::Config(format!("{key}: expected a number, got {v}"))),
    }
}

fn as_usize(key: &str, v: &toml::Value) -> Result<usize> {
    match v {
        toml::Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        _ => Err(Error::Config(format!("{key}: expected a non-negative integer, got {v}"))),
    }
}

fn as_str<'a>(key: &str, v: &'a toml::Value) -> Result<&'a str> {
    v.as_str().ok_or_else(|| Error::Config(format!("{key}: expected a string, got {v}")))
}

fn as_list<'a>(v: &'a toml::Value) -> Vec<&'a toml::Value> {
    match v {
        toml::Value::Array(items) => items.iter().collect(),
        single => vec![single],
    }
}

impl Config {
    /// Loads a file path, or a built-in preset when no such file exists.
    pub fn load(spec: &str) -> Result<Self> {
        let path = Path::new(spec);
        if path.is_file() {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            return Self::from_toml_str(&text);
        }
        match PRESETS.iter().find(|(name, _)| *name == spec) {
            Some((_, text)) => Self::from_toml_str(text),
            None => Err(Error::Config(format!(
                "no config file or preset named '{spec}' (presets: {})",
                PRESETS.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ")
            ))),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e| Error::Config(format!("parse error: {e}")))?;
        let mut entries = BTreeMap::new();
        flatten("", &table, &mut entries);

        let unknown: Vec<&str> =
            entries.keys().map(String::as_str).filter(|k| !KNOWN_KEYS.contains(k)).collect();
        if !unknown.is_empty() {
            return Err(Error::Config(format!("unknown config key(s): {}", unknown.join(", "))));
        }
        let missing: Vec<&str> = REQUIRED_KEYS.iter().copied().filter(|k| !entries.contains_key(*k)).collect();
        if !missing.is_empty() {
            return Err(Error::Config(format!("missing required config key(s): {}", missing.join(", "))));
        }

        let mut cfg = Config::default();
        if let Some(v) = entries.get("env.preset") {
            let name = as_str("env.preset", v)?;
            let preset = Environment::from_name(name)
                .ok_or_else(|| Error::Config(format!("env.preset: unknown environment '{name}'")))?;
            cfg.scenario.env = EnvParams::preset(preset);
        }
        for (key, v) in &entries {
            cfg.apply(key, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, key: &str, v: &toml::Value) -> Result<()> {
        let s = &mut self.scenario;
        match key {
            "scenario.M" => s.m = as_usize(key, v)?,
            "scenario.N" => s.n = as_usize(key, v)?,
            "scenario.L" => s.l = as_usize(key, v)?,
            "scenario.r_a_m" => s.r_a = as_f64(key, v)?,
            "scenario.r_u_m" => s.r_u = as_f64(key, v)?,
            "scenario.x_u_m" => s.x_u = as_f64(key, v)?,
            "scenario.eta_reflect" => s.eta_reflect = as_f64(key, v)?,
            "scenario.noise_dbm" => s.noise = dbm_to_watts(as_f64(key, v)?),
            "scenario.trials" => s.trials = as_usize(key, v)?,
            "scenario.seed" => {
                s.seed = match v {
                    toml::Value::Integer(i) => *i as u64,
                    toml::Value::String(t) => t
                        .parse()
                        .map_err(|_| Error::Config(format!("{key}: expected a 64-bit integer")))?,
                    _ => return Err(Error::Config(format!("{key}: expected a 64-bit integer"))),
                }
            }
            "scenario.direct_link" => {
                s.direct_link_mode = match as_str(key, v)? {
                    "blocked" => DirectLinkMode::Blocked,
                    "terrestrial_nlos" => DirectLinkMode::TerrestrialNlos,
                    other => return Err(Error::Config(format!("{key}: unknown mode '{other}'"))),
                }
            }
            "scenario.cluster_shape" => {
                s.cluster_shape = match as_str(key, v)? {
                    "disk" => ClusterShape::Disk,
                    "ball" => ClusterShape::Ball,
                    other => return Err(Error::Config(format!("{key}: unknown shape '{other}'"))),
                }
            }
            "tx.power_dbm" => s.p_tx = dbm_to_watts(as_f64(key, v)?),
            "env.preset" => {}
            "env.a" => s.env.a = as_f64(key, v)?,
            "env.b" => s.env.b = as_f64(key, v)?,
            "env.eta_los_db" => s.env.eta_los_db = as_f64(key, v)?,
            "env.eta_nlos_db" => s.env.eta_nlos_db = as_f64(key, v)?,
            "env.fc_hz" => s.env.fc_hz = as_f64(key, v)?,
            "bf.tol" => s.bf.tol = as_f64(key, v)?,
            "bf.max_iter" => s.bf.max_iter = as_usize(key, v)?,
            "bf.phase_bits" => {
                let bits = as_usize(key, v)?;
                s.bf.phase_bits = if bits == 0 { None } else { Some(bits as u32) };
            }
            "est.n_groups" => {
                self.n_groups = as_list(v).into_iter().map(|x| as_usize(key, x)).collect::<Result<_>>()?
            }
            "est.pilot_snr_db" => {
                self.pilot_snr = as_list(v)
                    .into_iter()
                    .map(|x| match x {
                        toml::Value::String(t) => PilotSetting::parse(t),
                        other => as_f64(key, other).map(PilotSetting::SnrDb),
                    })
                    .collect::<Result<_>>()?
            }
            "grid.x_min_m" => self.grid.x_min = as_f64(key, v)?,
            "grid.x_max_m" => self.grid.x_max = as_f64(key, v)?,
            "grid.x_step_m" => self.grid.x_step = as_f64(key, v)?,
            "grid.z_min_m" => self.grid.z_min = as_f64(key, v)?,
            "grid.z_max_m" => self.grid.z_max = as_f64(key, v)?,
            "grid.z_step_m" => self.grid.z_step = as_f64(key, v)?,
            "grid.trials" => self.search_trials = as_usize(key, v)?,
            "grid.objective" => {
                self.objective = match as_str(key, v)? {
                    "gain" => Objective::ChannelGain,
                    "rate" => Objective::Rate,
                    other => return Err(Error::Config(format!("{key}: unknown objective '{other}'"))),
                }
            }
            "sweep.l_values" => {
                self.l_values = as_list(v).into_iter().map(|x| as_usize(key, x)).collect::<Result<_>>()?
            }
            "sweep.r_a_values" => {
                self.r_a_values = as_list(v).into_iter().map(|x| as_f64(key, x)).collect::<Result<_>>()?
            }
            "sweep.r_u_values" => {
                self.r_u_values = as_list(v).into_iter().map(|x| as_f64(key, x)).collect::<Result<_>>()?
            }
            "sweep.optimize" => {
                self.optimize = v.as_bool().ok_or_else(|| Error::Config(format!("{key}: expected true/false")))?
            }
            "deploy.x_m" => {
                let c = self.fixed_center.get_or_insert(Point3::new(0.0, 0.0, 0.0));
                c.x = as_f64(key, v)?;
            }
            "deploy.z_m" => {
                let c = self.fixed_center.get_or_insert(Point3::new(0.0, 0.0, 0.0));
                c.z = as_f64(key, v)?;
            }
            other => return Err(Error::Config(format!("unknown config key: {other}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.grid.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.search_trials == 0 {
            return Err(Error::Config("grid.trials must be >= 1".into()));
        }
        if self.l_values.is_empty() || self.l_values.contains(&0) {
            return Err(Error::Config("sweep.l_values must be non-empty and >= 1".into()));
        }
        if self.r_a_values.is_empty() || self.r_u_values.is_empty() {
            return Err(Error::Config("sweep radius lists must be non-empty".into()));
        }
        if self.r_a_values.iter().chain(&self.r_u_values).any(|r| !(*r > 0.0)) {
            return Err(Error::Config("sweep radii must be > 0".into()));
        }
        if self.n_groups.is_empty() || self.pilot_snr.is_empty() {
            return Err(Error::Config("est.n_groups and est.pilot_snr_db must be non-empty".into()));
        }
        if let Some(c) = self.fixed_center {
            if !(c.z > 0.0) {
                return Err(Error::Config("deploy.z_m must be > 0".into()));
            }
        }
        Ok(())
    }

    /// SHA-256 of the resolved configuration, as hex.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(format!("{self:?}").as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[scenario]\nL = 10\nr_a_m = 10\nr_u_m = 100\nx_u_m = 200\n";

    #[test]
    fn minimal_file_uses_defaults() {
        let cfg = Config::from_toml_str(MINIMAL).unwrap();
        assert_eq!(cfg.scenario, Scenario::default());
        assert_eq!(cfg.grid, Grid2D::default());
    }

    #[test]
    fn unknown_key_is_named() {
        let err = Config::from_toml_str(&format!("{MINIMAL}bogus_key = 3\n")).unwrap_err();
        assert!(err.to_string().contains("scenario.bogus_key"), "{err}");
    }

    #[test]
    fn missing_required_key_is_named() {
        let err = Config::from_toml_str("[scenario]\nL = 10\nr_a_m = 10\nr_u_m = 100\n").unwrap_err();
        assert!(err.to_string().contains("scenario.x_u_m"), "{err}");
    }

    #[test]
    fn values_are_applied() {
        let text = format!(
            "{MINIMAL}M = 4\nnoise_dbm = -90\ndirect_link = \"terrestrial_nlos\"\n\
             [tx]\npower_dbm = 30\n[env]\npreset = \"urban\"\nfc_hz = 3.5e9\n\
             [bf]\nphase_bits = 2\n[est]\nn_groups = [2, 4]\npilot_snr_db = [5, \"inf\", \"data\"]\n\
             [grid]\nobjective = \"rate\"\ntrials = 7\n[deploy]\nx_m = 50\nz_m = 70\n"
        );
        let cfg = Config::from_toml_str(&text).unwrap();
        let s = &cfg.scenario;
        assert_eq!(s.m, 4);
        assert!((s.noise - 1e-12).abs() < 1e-24);
        assert!((s.p_tx - 1.0).abs() < 1e-12);
        assert_eq!(s.direct_link_mode, DirectLinkMode::TerrestrialNlos);
        assert_eq!(s.env.a, 9.61);
        assert_eq!(s.env.fc_hz, 3.5e9);
        assert_eq!(s.bf.phase_bits, Some(2));
        assert_eq!(cfg.n_groups, vec![2, 4]);
        assert_eq!(
            cfg.pilot_snr,
            vec![PilotSetting::SnrDb(5.0), PilotSetting::SnrDb(f64::INFINITY), PilotSetting::Data]
        );
        assert_eq!(cfg.objective, Objective::Rate);
        assert_eq!(cfg.search_trials, 7);
        assert_eq!(cfg.fixed_center, Some(Point3::new(50.0, 0.0, 70.0)));
    }

    #[test]
    fn invalid_values_are_config_errors() {
        for extra in ["M = 0", "eta_reflect = 1.5", "cluster_shape = \"cube\"", "trials = -1"] {
            let err = Config::from_toml_str(&format!("{MINIMAL}{extra}\n")).unwrap_err();
            assert!(matches!(err, Error::Config(_)), "{extra}: {err}");
        }
    }

    #[test]
    fn presets_load_and_hash_stably() {
        for (name, _) in PRESETS {
            let a = Config::load(name).unwrap();
            assert_eq!(a.hash(), Config::load(name).unwrap().hash());
        }
        assert!(Config::load("no_such_preset").is_err());
        let fig4 = Config::load("paper_fig4").unwrap();
        assert_eq!(fig4.grid.x_step, 20.0);
        let mut other = fig4.clone();
        other.scenario.trials += 1;
        assert_ne!(fig4.hash(), other.hash());
    }

    #[test]
    fn pilot_setting_parsing() {
        assert_eq!(PilotSetting::parse("inf").unwrap(), PilotSetting::SnrDb(f64::INFINITY));
        assert_eq!(PilotSetting::parse(" 12.5").unwrap(), PilotSetting::SnrDb(12.5));
        assert_eq!(PilotSetting::parse("data").unwrap(), PilotSetting::Data);
        assert!(PilotSetting::parse("loud").is_err());
        assert_eq!(PilotSetting::SnrDb(f64::INFINITY).to_string(), "inf");
    }
}
