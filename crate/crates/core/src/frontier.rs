//! Traversable-interval extraction and frontier candidate generation.
//!
//! A descriptor exposes openings in two ways: runs of sectors that saw
//! nothing (depth stuck at `d_max`) and sharp depth jumps between adjacent
//! sectors. Each opening becomes an angular interval; a candidate position
//! is the midpoint of the two boundary-depth points of the interval.

use crate::descriptor::{polar_point, DepthDescriptor, DescriptorConfig};
use crate::geom::Point3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalKind {
    /// A run of sectors with no valid depth return.
    MissingDepth,
    /// A jump larger than the discontinuity threshold between two adjacent
    /// sectors.
    Discontinuity,
}

/// An angular interval delimited by two sector indices, spanning
/// counterclockwise from `left` to `right` (wrapping at the seam).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interval {
    pub left: usize,
    pub right: usize,
    pub kind: IntervalKind,
}

impl Interval {
    /// Number of sectors from `left` to `right` going counterclockwise.
    /// Always in `[1, n)`; a full circle is never represented directly.
    pub fn span_sectors(&self, n: usize) -> usize {
        (self.right + n - self.left) % n
    }

    pub fn extent_deg(&self, config: &DescriptorConfig) -> f64 {
        self.span_sectors(config.sector_count()) as f64 * config.theta_deg
    }

    /// Inclusive circular containment of a sector index.
    pub fn contains_sector(&self, sector: usize, n: usize) -> bool {
        (sector + n - self.left) % n <= self.span_sectors(n)
    }
}

/// Thresholds controlling interval extraction and candidate filtering.
#[derive(Debug, Clone, Copy)]
pub struct FrontierConfig {
    /// Minimum angular extent of a missing-depth run, degrees.
    pub phi_d_deg: f64,
    /// Depth jump between adjacent sectors that counts as an opening, meters.
    pub tau_d: f64,
    /// Maximum interval extent before equal splitting, degrees.
    pub split_deg: f64,
    /// Candidates closer than this to the capture point are dropped, meters.
    pub min_clearance: f64,
}

impl Default for FrontierConfig {
    fn default() -> Self {
        Self {
            phi_d_deg: 20.0,
            tau_d: 1.5,
            split_deg: 60.0,
            min_clearance: 0.5,
        }
    }
}

impl FrontierConfig {
    pub fn validate(&self, descriptor: &DescriptorConfig) -> Vec<String> {
        let mut errs = Vec::new();
        if self.phi_d_deg < descriptor.theta_deg {
            errs.push("frontier.phi_d_deg must be >= descriptor.theta_deg".into());
        }
        if self.tau_d <= 0.0 {
            errs.push("frontier.tau_d must be positive".into());
        }
        if self.split_deg < self.phi_d_deg {
            errs.push("frontier.split_deg must be >= frontier.phi_d_deg".into());
        }
        if self.min_clearance < 0.0 {
            errs.push("frontier.min_clearance must be non-negative".into());
        }
        errs
    }

    /// Largest whole-sector extent that does not require splitting.
    fn split_sectors(&self, config: &DescriptorConfig) -> usize {
        ((self.split_deg / config.theta_deg).floor() as usize).max(1)
    }
}

/// Partition `span` sectors starting at `left` into `parts` near-equal
/// consecutive intervals.
fn split_span(left: usize, span: usize, parts: usize, n: usize, kind: IntervalKind) -> Vec<Interval> {
    let mut out = Vec::with_capacity(parts);
    let mut prev = 0usize;
    for i in 1..=parts {
        let next = ((i as f64 * span as f64 / parts as f64).round()) as usize;
        out.push(Interval {
            left: (left + prev) % n,
            right: (left + next) % n,
            kind,
        });
        prev = next;
    }
    out
}

/// Extract traversable angular intervals from a descriptor.
///
/// Missing-depth runs are maximal circular runs of sectors holding exactly
/// `d_max`; a run whose extent reaches `phi_d` produces an interval whose
/// boundaries are the nearest flanking sectors with real returns. Adjacent
/// sector pairs whose depths differ by more than `tau_d` each produce a
/// one-sector discontinuity interval. When every sector is at `d_max`
/// (startup in open space) no flanking boundary exists, so the full circle
/// is emitted directly as an equal split. Results are ordered by `left`.
pub fn find_intervals(desc: &DepthDescriptor, cfg: &FrontierConfig) -> Vec<Interval> {
    let d = desc.depths();
    let config = desc.config();
    let n = d.len();
    let d_max = config.d_max;
    let mut out = Vec::new();

    let missing: Vec<bool> = d.iter().map(|&v| v == d_max).collect();
    if missing.iter().all(|&m| m) {
        let s = cfg.split_sectors(config);
        let parts = n.div_ceil(s);
        return split_span(0, n, parts, n, IntervalKind::MissingDepth);
    }

    // Maximal circular runs of missing sectors.
    let mut j = 0usize;
    while j < n {
        if missing[j] && !missing[(j + n - 1) % n] {
            let mut len = 1usize;
            while missing[(j + len) % n] {
                len += 1;
            }
            let extent = len as f64 * config.theta_deg;
            if extent >= cfg.phi_d_deg {
                if len == n - 1 {
                    // A single real return: both flanking boundaries are the
                    // same sector, so emit the near-full circle pre-split.
                    let s = cfg.split_sectors(config);
                    let anchor = (j + n - 1) % n;
                    out.extend(split_span(
                        anchor,
                        n,
                        n.div_ceil(s),
                        n,
                        IntervalKind::MissingDepth,
                    ));
                } else {
                    out.push(Interval {
                        left: (j + n - 1) % n,
                        right: (j + len) % n,
                        kind: IntervalKind::MissingDepth,
                    });
                }
            }
        }
        j += 1;
    }

    // Depth discontinuities between adjacent sectors.
    for j in 0..n {
        let k = (j + 1) % n;
        if (d[j] - d[k]).abs() > cfg.tau_d {
            out.push(Interval {
                left: j,
                right: k,
                kind: IntervalKind::Discontinuity,
            });
        }
    }

    out.sort_by_key(|iv| iv.left);
    out
}

/// Replace any missing-depth interval wider than `split_deg` with near-equal
/// sub-intervals covering the same range. Discontinuity intervals pass
/// through unchanged. Idempotent on its own output.
pub fn split_large(
    intervals: &[Interval],
    cfg: &FrontierConfig,
    config: &DescriptorConfig,
) -> Vec<Interval> {
    let n = config.sector_count();
    let s = cfg.split_sectors(config);
    let mut out = Vec::with_capacity(intervals.len());
    for iv in intervals {
        let span = iv.span_sectors(n);
        if iv.kind == IntervalKind::MissingDepth && span > s {
            let parts = span.div_ceil(s);
            out.extend(split_span(iv.left, span, parts, n, iv.kind));
        } else {
            out.push(*iv);
        }
    }
    out
}

/// Remove every interval whose sector span contains the bearing of the
/// previous waypoint (boundary sectors count as contained), so no candidate
/// points back the way the agent came.
pub fn filter_by_last_heading(
    intervals: Vec<Interval>,
    last_waypoint_heading: f64,
    config: &DescriptorConfig,
) -> Vec<Interval> {
    let n = config.sector_count();
    let h = config.sector_of(last_waypoint_heading);
    intervals
        .into_iter()
        .filter(|iv| !iv.contains_sector(h, n))
        .collect()
}

/// Candidate position for each interval: the midpoint of the two boundary
/// points, each placed at the boundary sector's start angle at that sector's
/// stored depth. Candidates are expressed in world coordinates by adding the
/// capture position `origin`; candidates closer than `min_clearance` to the
/// origin are dropped.
pub fn candidate_positions(
    desc: &DepthDescriptor,
    intervals: &[Interval],
    origin: Point3,
    cfg: &FrontierConfig,
) -> Vec<Point3> {
    let config = desc.config();
    let w = config.sector_width_rad();
    let d = desc.depths();
    let mut out = Vec::with_capacity(intervals.len());
    for iv in intervals {
        let p_left = polar_point(d[iv.left], iv.left as f64 * w, origin.z);
        let p_right = polar_point(d[iv.right], iv.right as f64 * w, origin.z);
        let mid = Point3::new(
            (p_left.x + p_right.x) / 2.0,
            (p_left.y + p_right.y) / 2.0,
            origin.z,
        );
        if mid.planar_norm() < cfg.min_clearance {
            continue;
        }
        out.push(Point3::new(mid.x + origin.x, mid.y + origin.y, origin.z));
    }
    out
}
