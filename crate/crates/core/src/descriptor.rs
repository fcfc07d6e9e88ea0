//! Fan-shaped minimum-depth descriptors.
//!
//! A descriptor summarizes one range scan as `n` per-sector minimum depths
//! around the capture position. It is the only geometric record a node ever
//! keeps: the same windowed depth query answers "is this point inside the
//! observed free region", which drives candidate filtering, edge creation,
//! and en-route target validation.

use crate::error::{Error, Result};
use crate::geom::{normalize_angle, Point3};
use crate::world::DepthScan;
use std::f64::consts::TAU;

/// Sector layout and query-window parameters for descriptors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescriptorConfig {
    /// Angular resolution of one sector, degrees. Must divide 360 exactly.
    pub theta_deg: f64,
    /// Maximum valid sensing distance, meters.
    pub d_max: f64,
    /// Height band for valid points, meters.
    pub h: f64,
    /// Angular width of the query window, degrees. Must round to an odd
    /// number of sectors so the window is centered.
    pub delta_theta_deg: f64,
}

impl Default for DescriptorConfig {
    fn default() -> Self {
        Self {
            theta_deg: 5.0,
            d_max: 5.0,
            h: 1.0,
            delta_theta_deg: 15.0,
        }
    }
}

impl DescriptorConfig {
    /// Number of sectors `n = 360 / theta`.
    pub fn sector_count(&self) -> usize {
        (360.0 / self.theta_deg).round() as usize
    }

    /// Window width in sectors (odd).
    pub fn window_sectors(&self) -> usize {
        (self.delta_theta_deg / self.theta_deg).round() as usize
    }

    /// One sector's angular width in radians.
    pub fn sector_width_rad(&self) -> f64 {
        self.theta_deg.to_radians()
    }

    /// Sector index containing an angle (radians, any range). Sectors are
    /// half-open bins `[j*theta, (j+1)*theta)`; an angle exactly on a
    /// boundary belongs to the higher bin per plain floor arithmetic.
    pub fn sector_of(&self, angle: f64) -> usize {
        let n = self.sector_count();
        let a = normalize_angle(angle);
        (a / self.sector_width_rad()).floor() as usize % n
    }

    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.theta_deg <= 0.0 {
            errs.push("descriptor.theta_deg must be positive".into());
        } else {
            let n = (360.0 / self.theta_deg).round();
            if n < 1.0 || (n * self.theta_deg - 360.0).abs() > 1e-9 {
                errs.push(format!(
                    "descriptor.theta_deg={} must divide 360 exactly",
                    self.theta_deg
                ));
            }
        }
        if self.d_max <= 0.0 {
            errs.push("descriptor.d_max must be positive".into());
        }
        if self.h <= 0.0 {
            errs.push("descriptor.h must be positive".into());
        }
        if self.delta_theta_deg < self.theta_deg {
            errs.push("descriptor.delta_theta_deg must be >= theta_deg".into());
        } else if self.theta_deg > 0.0 {
            let w = (self.delta_theta_deg / self.theta_deg).round() as i64;
            if w % 2 == 0 {
                errs.push(format!(
                    "descriptor.delta_theta_deg={} must span an odd number of sectors",
                    self.delta_theta_deg
                ));
            }
        }
        errs
    }

    fn validated(&self) -> Result<()> {
        let errs = self.validate();
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }
}

/// Per-sector minimum planar depths around a capture point.
///
/// Sectors with no valid point hold exactly `d_max`. Immutable after
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthDescriptor {
    depths: Vec<f64>,
    config: DescriptorConfig,
}

impl DepthDescriptor {
    /// Wrap precomputed sector depths (deserialization, tests).
    pub fn from_depths(config: DescriptorConfig, depths: Vec<f64>) -> Result<Self> {
        config.validated()?;
        if depths.len() != config.sector_count() {
            return Err(Error::Contract(format!(
                "descriptor needs {} sector depths, got {}",
                config.sector_count(),
                depths.len()
            )));
        }
        Ok(Self { depths, config })
    }

    pub fn depths(&self) -> &[f64] {
        &self.depths
    }

    pub fn config(&self) -> &DescriptorConfig {
        &self.config
    }

    pub fn sector_count(&self) -> usize {
        self.depths.len()
    }

    /// Minimum depth over the odd-width window of sectors centered on the
    /// sector containing `heading`, wrapping across the 0/360 seam.
    pub fn window_min(&self, heading: f64) -> f64 {
        let n = self.depths.len();
        let center = self.config.sector_of(heading) as i64;
        let half = (self.config.window_sectors() as i64 - 1) / 2;
        let mut min = f64::INFINITY;
        for off in -half..=half {
            let idx = (center + off).rem_euclid(n as i64) as usize;
            if self.depths[idx] < min {
                min = self.depths[idx];
            }
        }
        min
    }

    /// Observed-region test: true iff `target` lies strictly inside the free
    /// region this descriptor recorded around `origin`.
    ///
    /// Computes the planar heading and distance from `origin` to `target`;
    /// the target is covered when it is within sensing range and every depth
    /// in the heading window exceeds that distance. This one predicate backs
    /// candidate redundancy filtering, line-of-sight edge creation, and
    /// en-route target validation.
    pub fn covers_point(&self, origin: Point3, target: Point3) -> bool {
        let r = origin.planar_distance(target);
        if r >= self.config.d_max {
            return false;
        }
        let heading = origin.bearing_to(target);
        self.window_min(heading) > r
    }

    /// Serialize in the form embedded in graph files:
    /// `<n> <theta_deg> <d_max> <d1,...,dn>`.
    pub fn to_embedded(&self) -> String {
        let depths: Vec<String> = self.depths.iter().map(|d| format!("{d}")).collect();
        format!(
            "{} {} {} {}",
            self.depths.len(),
            self.config.theta_deg,
            self.config.d_max,
            depths.join(",")
        )
    }

    /// Parse the embedded form. `h` and `delta_theta_deg` are not part of
    /// the embedded record and must come from the surrounding file.
    pub fn parse_embedded(text: &str, h: f64, delta_theta_deg: f64) -> Result<Self> {
        let mut toks = text.split_whitespace();
        let bad = |msg: &str| Error::Contract(format!("bad embedded descriptor: {msg}"));
        let n: usize = toks
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad("missing sector count"))?;
        let theta_deg: f64 = toks
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad("missing theta"))?;
        let d_max: f64 = toks
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad("missing d_max"))?;
        let depths_tok = toks.next().ok_or_else(|| bad("missing depths"))?;
        let depths: std::result::Result<Vec<f64>, _> =
            depths_tok.split(',').map(|d| d.parse::<f64>()).collect();
        let depths = depths.map_err(|_| bad("unparsable depth entry"))?;
        if depths.len() != n {
            return Err(bad(&format!("expected {n} depths, got {}", depths.len())));
        }
        let config = DescriptorConfig {
            theta_deg,
            d_max,
            h,
            delta_theta_deg,
        };
        Self::from_depths(config, depths)
    }

    /// Bytes attributed to this descriptor in the graph memory accounting.
    pub fn memory_bytes(&self) -> usize {
        crate::graph::DESCRIPTOR_FIXED_BYTES + 8 * self.depths.len()
    }
}

/// Keep exactly the scan points inside the valid height band and sensing
/// range: `-h/2 < p_z < h/2` and `|p| < d_max`, all strict.
pub fn extract_valid_points(scan: &DepthScan, config: &DescriptorConfig) -> Vec<Point3> {
    scan.points
        .iter()
        .copied()
        .filter(|p| {
            let half = config.h / 2.0;
            -half < p.z && p.z < half && p.norm() < config.d_max
        })
        .collect()
}

/// Build the per-sector minimum-depth descriptor from valid points.
///
/// The sector index comes from the point's planar bearing; the stored depth
/// is the minimum planar range in that sector, or `d_max` if the sector saw
/// no valid point.
pub fn build_descriptor(points: &[Point3], config: &DescriptorConfig) -> DepthDescriptor {
    let n = config.sector_count();
    let mut depths = vec![config.d_max; n];
    for p in points {
        let range = p.planar_norm();
        if range <= 1e-12 {
            continue; // a point at the origin has no bearing
        }
        let j = config.sector_of(p.y.atan2(p.x));
        if range < depths[j] {
            depths[j] = range;
        }
    }
    DepthDescriptor {
        depths,
        config: *config,
    }
}

/// Construct a point at a polar position in the horizontal plane.
pub fn polar_point(range: f64, angle: f64, z: f64) -> Point3 {
    Point3::new(range * angle.cos(), range * angle.sin(), z)
}

/// Angle of a sector's start boundary in radians.
pub fn sector_start_angle(config: &DescriptorConfig, idx: usize) -> f64 {
    normalize_angle(idx as f64 * config.sector_width_rad() % TAU)
}
