//! Ground-truth grid worlds, the simulated range sensor, and the
//! line-of-sight / coverage oracles used by tests and metrics.
//!
//! Nothing in the planning pipeline reads a [`WorldMap`]; the planner only
//! ever sees [`DepthScan`]s. The map exists so that the simulator can answer
//! "what would the sensor return here" and so that tests can check planner
//! claims against ground truth.

use crate::error::{Error, Result};
use crate::geom::Point3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

/// A closed 2.5D occupancy grid: one horizontal slice plus a uniform ceiling.
///
/// Cells are half-open squares `[x0, x0+res) x [y0, y0+res)`. Row 0 is the
/// first data row of the map file and sits at the lowest `y`.
#[derive(Debug, Clone)]
pub struct WorldMap {
    resolution: f64,
    origin: (f64, f64),
    width: usize,
    height: usize,
    occupied: Vec<bool>,
    ceiling_height: f64,
}

impl WorldMap {
    /// Build a map from raw parts. Used by the generators; `parse` is the
    /// file-format entry point.
    pub fn from_cells(
        resolution: f64,
        origin: (f64, f64),
        width: usize,
        height: usize,
        occupied: Vec<bool>,
        ceiling_height: f64,
    ) -> Result<Self> {
        if resolution <= 0.0 {
            return Err(Error::MapFormat {
                line: 1,
                msg: "resolution must be positive".into(),
            });
        }
        if width == 0 || height == 0 || occupied.len() != width * height {
            return Err(Error::MapFormat {
                line: 1,
                msg: "grid dimensions do not match cell data".into(),
            });
        }
        let map = Self {
            resolution,
            origin,
            width,
            height,
            occupied,
            ceiling_height,
        };
        map.check_closed_boundary()?;
        Ok(map)
    }

    /// Parse the plain-text map format:
    ///
    /// ```text
    /// mapmeta resolution=0.25 origin=0 0 ceiling=2.0
    /// #####
    /// #...#
    /// #####
    /// ```
    ///
    /// `#` is occupied, `.` is free. All rows must have equal length and the
    /// boundary must be fully occupied (worlds are closed).
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::MapFormat {
            line: 1,
            msg: "empty map file".into(),
        })?;
        let (resolution, origin, ceiling) = parse_header(header)?;

        let mut rows: Vec<Vec<bool>> = Vec::new();
        let mut width = 0usize;
        for (idx, line) in lines {
            let file_line = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let row_no = rows.len() + 1;
            let mut row = Vec::with_capacity(line.len());
            for ch in line.chars() {
                match ch {
                    '#' => row.push(true),
                    '.' => row.push(false),
                    other => {
                        return Err(Error::MapFormat {
                            line: file_line,
                            msg: format!("row {row_no} has invalid cell character {other:?}"),
                        })
                    }
                }
            }
            if rows.is_empty() {
                width = row.len();
                if width == 0 {
                    return Err(Error::MapFormat {
                        line: file_line,
                        msg: "row 1 length 0".into(),
                    });
                }
            } else if row.len() != width {
                return Err(Error::MapFormat {
                    line: file_line,
                    msg: format!("row {row_no} length {} != expected {width}", row.len()),
                });
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::MapFormat {
                line: 1,
                msg: "map has no grid rows".into(),
            });
        }
        let height = rows.len();
        let occupied: Vec<bool> = rows.into_iter().flatten().collect();
        Self::from_cells(resolution, origin, width, height, occupied, ceiling)
    }

    fn check_closed_boundary(&self) -> Result<()> {
        for r in 0..self.height {
            for c in 0..self.width {
                let border = r == 0 || r == self.height - 1 || c == 0 || c == self.width - 1;
                if border && !self.occupied[r * self.width + c] {
                    return Err(Error::MapFormat {
                        line: r + 2,
                        msg: format!("open boundary at row {} col {}", r + 1, c + 1),
                    });
                }
            }
        }
        Ok(())
    }

    /// Serialize back to the text format accepted by `parse`.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "mapmeta resolution={} origin={} {} ceiling={}\n",
            self.resolution, self.origin.0, self.origin.1, self.ceiling_height
        );
        for r in 0..self.height {
            for c in 0..self.width {
                out.push(if self.occupied[r * self.width + c] {
                    '#'
                } else {
                    '.'
                });
            }
            out.push('\n');
        }
        out
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> (f64, f64) {
        self.origin
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn ceiling_height(&self) -> f64 {
        self.ceiling_height
    }

    /// Grid cell containing the world point (half-open cells).
    pub fn cell_of(&self, x: f64, y: f64) -> (i64, i64) {
        (
            ((x - self.origin.0) / self.resolution).floor() as i64,
            ((y - self.origin.1) / self.resolution).floor() as i64,
        )
    }

    /// World coordinates of a cell center.
    pub fn cell_center(&self, cx: i64, cy: i64) -> (f64, f64) {
        (
            self.origin.0 + (cx as f64 + 0.5) * self.resolution,
            self.origin.1 + (cy as f64 + 0.5) * self.resolution,
        )
    }

    /// Occupancy of a cell; anything outside the grid counts as occupied.
    pub fn cell_occupied(&self, cx: i64, cy: i64) -> bool {
        if cx < 0 || cy < 0 || cx >= self.width as i64 || cy >= self.height as i64 {
            return true;
        }
        self.occupied[cy as usize * self.width + cx as usize]
    }

    /// Occupancy at a world point.
    pub fn occupied_at(&self, x: f64, y: f64) -> bool {
        let (cx, cy) = self.cell_of(x, y);
        self.cell_occupied(cx, cy)
    }

    pub fn free_cell_count(&self) -> usize {
        self.occupied.iter().filter(|o| !**o).count()
    }

    /// Free area in square meters.
    pub fn free_area(&self) -> f64 {
        self.free_cell_count() as f64 * self.resolution * self.resolution
    }

    /// Iterate over centers of all free cells.
    pub fn free_cell_centers(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.height).flat_map(move |r| {
            (0..self.width).filter_map(move |c| {
                if self.occupied[r * self.width + c] {
                    None
                } else {
                    Some(self.cell_center(c as i64, r as i64))
                }
            })
        })
    }

    /// First intersection of the segment `a -> b` with an occupied cell,
    /// as a parameter `t` in `[0, 1]`, or `None` if the segment is clear.
    ///
    /// Conservative supercover: a crossing exactly on a cell corner checks
    /// both axis-adjacent cells as touched.
    pub fn first_hit(&self, ax: f64, ay: f64, bx: f64, by: f64) -> Option<f64> {
        crate::geom::supercover_first_hit(
            self.origin.0,
            self.origin.1,
            self.resolution,
            ax,
            ay,
            bx,
            by,
            |cx, cy| self.cell_occupied(cx, cy),
        )
    }
}

/// Parameters of the simulated omnidirectional range sensor.
#[derive(Debug, Clone)]
pub struct SensorModel {
    /// Maximum valid sensing distance in meters.
    pub d_max: f64,
    /// Height band for valid points, meters.
    pub h: f64,
    /// Number of evenly spaced azimuth samples per revolution.
    pub rays_per_rev: usize,
    /// Standard deviation of zero-mean Gaussian range noise, meters.
    pub noise_sigma: f64,
    /// Probability that a ray returns no measurement.
    pub dropout_prob: f64,
    /// Probability that a ray's range is replaced by `outlier_range`.
    pub outlier_prob: f64,
    /// Range substituted on an outlier, meters.
    pub outlier_range: f64,
}

impl Default for SensorModel {
    fn default() -> Self {
        Self {
            d_max: 5.0,
            h: 1.0,
            rays_per_rev: 720,
            noise_sigma: 0.05,
            dropout_prob: 0.02,
            outlier_prob: 0.0,
            outlier_range: 0.0,
        }
    }
}

impl SensorModel {
    pub fn validate(&self, sector_count: usize) -> Vec<String> {
        let mut errs = Vec::new();
        if self.d_max <= 0.0 {
            errs.push("sensor.d_max must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.dropout_prob) {
            errs.push("sensor.dropout_prob must be in [0, 1]".into());
        }
        if !(0.0..=1.0).contains(&self.outlier_prob) {
            errs.push("sensor.outlier_prob must be in [0, 1]".into());
        }
        if self.rays_per_rev == 0 || self.rays_per_rev % sector_count != 0 {
            errs.push(format!(
                "sensor.rays_per_rev must be a positive multiple of the sector count {sector_count}"
            ));
        }
        errs
    }
}

/// Agent pose. The sensor is omnidirectional, so heading does not affect
/// sensing; it is kept for completeness.
#[derive(Debug, Clone, Copy)]
pub struct Pose {
    pub position: Point3,
    pub heading: f64,
}

impl Pose {
    pub fn at(position: Point3) -> Self {
        Self {
            position,
            heading: 0.0,
        }
    }
}

/// One frame of range samples, expressed in the body-centered frame whose
/// axes are parallel to the world axes (translation only).
#[derive(Debug, Clone)]
pub struct DepthScan {
    pub points: Vec<Point3>,
    pub stamp: f64,
}

impl DepthScan {
    /// Export as CSV, one `x,y,z` row per point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,z\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{}\n", p.x, p.y, p.z));
        }
        out
    }
}

/// Standard normal deviate via Box-Muller; consumes exactly two uniforms.
fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
}

/// Cast `rays_per_rev` evenly spaced horizontal rays from the pose.
///
/// Per-ray pipeline: true first-hit distance, plus Gaussian range noise,
/// then possible outlier substitution, then clamping to `d_max`; rays that
/// travel the full `d_max` without a hit report exactly `d_max`. Dropped
/// rays yield no point. Deterministic for a fixed `rng_seed`: every ray
/// consumes the same number of random draws regardless of outcome.
pub fn raycast_scan(
    world: &WorldMap,
    sensor: &SensorModel,
    pose: &Pose,
    rng_seed: u64,
) -> Result<DepthScan> {
    let p = pose.position;
    if world.occupied_at(p.x, p.y) {
        return Err(Error::InvalidPose(format!(
            "sensor pose ({}, {}) is inside an occupied cell",
            p.x, p.y
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut points = Vec::with_capacity(sensor.rays_per_rev);
    for i in 0..sensor.rays_per_rev {
        let drop_u: f64 = rng.gen();
        let outlier_u: f64 = rng.gen();
        let noise = gaussian(&mut rng);

        let angle = TAU * i as f64 / sensor.rays_per_rev as f64;
        let (sin_a, cos_a) = angle.sin_cos();
        let bx = p.x + cos_a * sensor.d_max;
        let by = p.y + sin_a * sensor.d_max;
        let true_dist = match world.first_hit(p.x, p.y, bx, by) {
            Some(t) => t * sensor.d_max,
            None => f64::INFINITY,
        };
        let mut range = true_dist + noise * sensor.noise_sigma;
        if outlier_u < sensor.outlier_prob {
            range = sensor.outlier_range;
        }
        if range > sensor.d_max {
            range = sensor.d_max;
        }
        if drop_u < sensor.dropout_prob || range <= 0.0 {
            continue;
        }
        points.push(Point3::new(range * cos_a, range * sin_a, 0.0));
    }
    Ok(DepthScan {
        points,
        stamp: 0.0,
    })
}

/// True iff the segment `a -> b` crosses no occupied cell.
///
/// Conservative: any touched occupied cell blocks, and out-of-bounds space
/// counts as occupied. Endpoints are canonically ordered first so the result
/// is exactly symmetric.
pub fn line_of_sight_free(world: &WorldMap, a: Point3, b: Point3) -> bool {
    let (p, q) = if (a.x, a.y) <= (b.x, b.y) {
        (a, b)
    } else {
        (b, a)
    };
    world.first_hit(p.x, p.y, q.x, q.y).is_none()
}

/// Incremental visibility coverage over the free cells of a map.
///
/// A free cell counts as covered once its center is within `d_max` of some
/// recorded pose and line-of-sight visible from it.
#[derive(Debug, Clone)]
pub struct CoverageTracker {
    seen: Vec<bool>,
    seen_count: usize,
    free_count: usize,
}

impl CoverageTracker {
    pub fn new(world: &WorldMap) -> Self {
        Self {
            seen: vec![false; world.width() * world.height()],
            seen_count: 0,
            free_count: world.free_cell_count(),
        }
    }

    /// Mark every free cell visible from this pose. Only cells inside the
    /// `d_max` disc are examined, so repeated calls stay cheap.
    pub fn add_pose(&mut self, world: &WorldMap, sensor: &SensorModel, pose: &Pose) {
        let p = pose.position;
        let r_cells = (sensor.d_max / world.resolution()).ceil() as i64 + 1;
        let (pcx, pcy) = world.cell_of(p.x, p.y);
        for cy in (pcy - r_cells).max(0)..=(pcy + r_cells).min(world.height() as i64 - 1) {
            for cx in (pcx - r_cells).max(0)..=(pcx + r_cells).min(world.width() as i64 - 1) {
                let idx = cy as usize * world.width() + cx as usize;
                if self.seen[idx] || world.cell_occupied(cx, cy) {
                    continue;
                }
                let (wx, wy) = world.cell_center(cx, cy);
                let target = Point3::new(wx, wy, p.z);
                if p.planar_distance(target) <= sensor.d_max
                    && line_of_sight_free(world, p, target)
                {
                    self.seen[idx] = true;
                    self.seen_count += 1;
                }
            }
        }
    }

    pub fn fraction(&self) -> f64 {
        if self.free_count == 0 {
            return 1.0;
        }
        self.seen_count as f64 / self.free_count as f64
    }
}

/// Fraction of free cells visible from at least one of the poses.
///
/// Monotone non-decreasing under pose-list extension and invariant to
/// pose-list permutation.
pub fn coverage_fraction(world: &WorldMap, poses: &[Pose], sensor: &SensorModel) -> f64 {
    if poses.is_empty() {
        return 0.0;
    }
    let mut tracker = CoverageTracker::new(world);
    for pose in poses {
        tracker.add_pose(world, sensor, pose);
    }
    tracker.fraction()
}


fn parse_header(line: &str) -> Result<(f64, (f64, f64), f64)> {
    let fail = |msg: &str| Error::MapFormat {
        line: 1,
        msg: msg.to_string(),
    };
    let mut tokens = line.split_whitespace();
    if tokens.next() != Some("mapmeta") {
        return Err(fail("header must start with 'mapmeta'"));
    }
    let mut resolution = None;
    let mut origin_x = None;
    let mut origin_y = None;
    let mut ceiling = None;
    while let Some(tok) = tokens.next() {
        if let Some(v) = tok.strip_prefix("resolution=") {
            resolution = Some(v.parse::<f64>().map_err(|_| fail("bad resolution value"))?);
        } else if let Some(v) = tok.strip_prefix("origin=") {
            origin_x = Some(v.parse::<f64>().map_err(|_| fail("bad origin x value"))?);
            let y_tok = tokens.next().ok_or_else(|| fail("origin needs two values"))?;
            origin_y = Some(y_tok.parse::<f64>().map_err(|_| fail("bad origin y value"))?);
        } else if let Some(v) = tok.strip_prefix("ceiling=") {
            ceiling = Some(v.parse::<f64>().map_err(|_| fail("bad ceiling value"))?);
        } else {
            return Err(fail(&format!("unknown header token '{tok}'")));
        }
    }
    let resolution = resolution.ok_or_else(|| fail("missing resolution"))?;
    if resolution <= 0.0 {
        return Err(fail("resolution must be positive"));
    }
    let ox = origin_x.ok_or_else(|| fail("missing origin"))?;
    let oy = origin_y.ok_or_else(|| fail("missing origin"))?;
    let ceiling = ceiling.ok_or_else(|| fail("missing ceiling"))?;
    Ok((resolution, (ox, oy), ceiling))
}
