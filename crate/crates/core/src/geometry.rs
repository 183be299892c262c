//! Node positions and cluster sampling.
//!
//! All coordinates are meters. Angles cross the public API in degrees.

use std::f64::consts::PI;
use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn sub(&self, other: &Point3) -> Point3 {
        Point3::new(self.x - other.x, self.y - other.y, self.z - other.z)
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Distance in the horizontal (x, y) plane.
    pub fn horizontal_distance(&self, other: &Point3) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl fmt::Display for Point3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// Horizontal disk at the altitude of its center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskRegion {
    center: Point3,
    radius: f64,
}

impl DiskRegion {
    pub fn new(center: Point3, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid(format!("disk radius must be > 0, got {radius}")));
        }
        if !center.is_finite() {
            return Err(Error::invalid(format!("disk center must be finite, got {center}")));
        }
        Ok(DiskRegion { center, radius })
    }

    pub fn center(&self) -> Point3 {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

/// How daughter points are scattered around the cluster center.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClusterShape {
    /// Uniform in the horizontal disk at the center's altitude.
    #[default]
    Disk,
    /// Uniform in the ball of the same radius.
    Ball,
}

pub fn distance(a: &Point3, b: &Point3) -> f64 {
    a.sub(b).norm()
}

/// Elevation of `aerial` as seen from `ground`, in degrees within (0, 90].
pub fn elevation_angle_deg(ground: &Point3, aerial: &Point3) -> Result<f64> {
    let rise = aerial.z - ground.z;
    if !(rise > 0.0) {
        return Err(Error::invalid(format!(
            "aerial node {aerial} is not above ground node {ground}"
        )));
    }
    let run = ground.horizontal_distance(aerial);
    if run == 0.0 {
        return Ok(90.0);
    }
    Ok(rise.atan2(run).to_degrees())
}

pub fn sample_uniform_disk(region: &DiskRegion, rng: &mut RandomStream) -> Point3 {
    let u: f64 = rng.random();
    let phi = 2.0 * PI * rng.random::<f64>();
    let r = region.radius * u.sqrt();
    let c = region.center;
    Point3::new(c.x + r * phi.cos(), c.y + r * phi.sin(), c.z)
}

/// Uniform point in the ball around the disk center. The altitude is
/// clamped at zero so no node ends up below ground.
pub fn sample_uniform_ball(region: &DiskRegion, rng: &mut RandomStream) -> Point3 {
    let u: f64 = rng.random();
    let cos_polar = 2.0 * rng.random::<f64>() - 1.0;
    let phi = 2.0 * PI * rng.random::<f64>();
    let r = region.radius * u.cbrt();
    let sin_polar = (1.0 - cos_polar * cos_polar).sqrt();
    let c = region.center;
    Point3::new(
        c.x + r * sin_polar * phi.cos(),
        c.y + r * sin_polar * phi.sin(),
        (c.z + r * cos_polar).max(0.0),
    )
}

/// Matérn-style cluster with a fixed parent and a fixed daughter count.
pub fn sample_cluster(
    region: &DiskRegion,
    count: usize,
    rng: &mut RandomStream,
) -> Result<Vec<Point3>> {
    sample_cluster_with(region, count, ClusterShape::Disk, rng)
}

pub fn sample_cluster_with(
    region: &DiskRegion,
    count: usize,
    shape: ClusterShape,
    rng: &mut RandomStream,
) -> Result<Vec<Point3>> {
    if count == 0 {
        return Err(Error::invalid("cluster count must be >= 1"));
    }
    Ok((0..count)
        .map(|_| match shape {
            ClusterShape::Disk => sample_uniform_disk(region, rng),
            ClusterShape::Ball => sample_uniform_ball(region, rng),
        })
        .collect())
}
