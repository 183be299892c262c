//! Monte Carlo link-level simulator for UAV swarm-mounted aerial
//! reconfigurable intelligent surfaces.
//!
//! A swarm of `L` UAVs, each carrying an `N`-element reflecting surface,
//! relays a multi-antenna base station (`M` antennas) to a single-antenna
//! ground user whose direct link is usually blocked. The crate covers:
//!
//! - [`geometry`]: positions, elevation angles and cluster sampling,
//! - [`channel`]: probabilistic LoS/NLoS air-to-ground links and the
//!   cascaded effective channel,
//! - [`beamforming`]: maximum-ratio transmission, phase alignment and their
//!   alternating combination,
//! - [`estimation`]: grouped sub-surface pilot estimation,
//! - [`deployment`]: Monte Carlo grid search of the swarm center,
//! - [`experiments`]: scenario configuration, experiment runners, CSV output
//!   and the command-line front end.

pub mod beamforming;
pub mod channel;
pub mod deployment;
pub mod error;
pub mod estimation;
pub mod experiments;
pub mod geometry;
pub mod rng;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
