//! CSV emission. Every file starts with a comment line recording the
//! command, seed and configuration hash, followed by a header row.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::deployment::GainMap;
use crate::error::{Error, Result};
use crate::experiments::{Config, EstimationTable, ResultTable};

pub struct CsvDocument {
    pub comment: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvDocument {
    pub fn new(command: &str, cfg: &Config, header: &[&str]) -> Self {
        CsvDocument {
            comment: format!("# command={command} seed={} config_sha256={}", cfg.scenario.seed, cfg.hash()),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.comment);
        out.push('\n');
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let io = |source| Error::Io { path: path.to_path_buf(), source };
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(io)?;
        }
        let mut file = fs::File::create(path).map_err(io)?;
        file.write_all(self.render().as_bytes()).map_err(io)
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

pub fn gain_map_csv(cfg: &Config, map: &GainMap) -> CsvDocument {
    let mut doc = CsvDocument::new("deploy-map", cfg, &["x_m", "z_m", "mean_gain_db"]);
    let zs = map.grid.zs();
    for (x, col) in map.grid.xs().iter().zip(&map.mean_gain_db) {
        for (z, v) in zs.iter().zip(col) {
            doc.rows.push(vec![num(*x), num(*z), num(*v)]);
        }
    }
    doc
}

pub fn rate_vs_uavs_csv(cfg: &Config, table: &ResultTable) -> CsvDocument {
    let mut doc =
        CsvDocument::new("rate-vs-uavs", cfg, &["L", "mean_rate_bps_hz", "baseline_rate_bps_hz", "ci95"]);
    for p in &table.points {
        doc.rows.push(vec![
            num(p.params[0]),
            num(p.rate.mean),
            p.baseline.map_or_else(String::new, |b| num(b.mean)),
            num(p.rate.ci95),
        ]);
    }
    doc
}

pub fn rate_vs_radius_csv(cfg: &Config, table: &ResultTable) -> CsvDocument {
    let mut doc = CsvDocument::new("rate-vs-radius", cfg, &["r_a_m", "r_u_m", "mean_rate_bps_hz", "ci95"]);
    for p in &table.points {
        doc.rows.push(vec![num(p.params[0]), num(p.params[1]), num(p.rate.mean), num(p.rate.ci95)]);
    }
    doc
}

pub fn estimation_csv(cfg: &Config, table: &EstimationTable) -> CsvDocument {
    let mut doc = CsvDocument::new(
        "estimate",
        cfg,
        &["n_groups", "overhead", "pilot_snr_db", "mse", "rate_perfect", "rate_estimated"],
    );
    for p in &table.points {
        doc.rows.push(vec![
            p.n_groups.to_string(),
            p.overhead.to_string(),
            p.pilot.to_string(),
            num(p.mse),
            num(p.rate_perfect),
            num(p.rate_estimated),
        ]);
    }
    doc
}
