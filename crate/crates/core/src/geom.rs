//! Minimal 3D point math used across the crate.
//!
//! The planner operates on a single horizontal slice, so most queries are
//! planar; `z` is carried along for node positions and scan points.

use std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Euclidean distance in 3D.
    pub fn distance(self, other: Self) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    /// Euclidean distance in the horizontal plane.
    pub fn planar_distance(self, other: Self) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }

    /// 3D norm of the point treated as a vector from the origin.
    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Planar norm of the point treated as a vector from the origin.
    pub fn planar_norm(self) -> f64 {
        (self.x * self.x + self.y * self.y).sqrt()
    }

    /// Bearing of `other` as seen from `self`, in radians in (-pi, pi].
    pub fn bearing_to(self, other: Self) -> f64 {
        (other.y - self.y).atan2(other.x - self.x)
    }
}

impl std::ops::Add for Point3 {
    type Output = Point3;
    fn add(self, rhs: Point3) -> Point3 {
        Point3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl std::ops::Sub for Point3 {
    type Output = Point3;
    fn sub(self, rhs: Point3) -> Point3 {
        Point3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

/// First intersection of the segment `(ax,ay) -> (bx,by)` with an occupied
/// cell of a uniform grid, as a parameter `t` in `[0, 1]`, or `None` if the
/// segment touches no occupied cell.
///
/// Conservative supercover traversal: a crossing that lands exactly on a
/// cell corner checks both axis-adjacent cells as touched. Cells are
/// half-open squares of side `res` anchored at `(origin_x, origin_y)`.
pub fn supercover_first_hit(
    origin_x: f64,
    origin_y: f64,
    res: f64,
    ax: f64,
    ay: f64,
    bx: f64,
    by: f64,
    occupied: impl Fn(i64, i64) -> bool,
) -> Option<f64> {
    let mut cx = ((ax - origin_x) / res).floor() as i64;
    let mut cy = ((ay - origin_y) / res).floor() as i64;
    if occupied(cx, cy) {
        return Some(0.0);
    }
    let dx = bx - ax;
    let dy = by - ay;
    if dx == 0.0 && dy == 0.0 {
        return None;
    }
    let step_x: i64 = if dx > 0.0 {
        1
    } else if dx < 0.0 {
        -1
    } else {
        0
    };
    let step_y: i64 = if dy > 0.0 {
        1
    } else if dy < 0.0 {
        -1
    } else {
        0
    };
    let boundary = |cell: i64, step: i64, o: f64| -> f64 {
        let edge = if step > 0 { cell + 1 } else { cell };
        o + edge as f64 * res
    };
    let mut t_max_x = if step_x != 0 {
        (boundary(cx, step_x, origin_x) - ax) / dx
    } else {
        f64::INFINITY
    };
    let mut t_max_y = if step_y != 0 {
        (boundary(cy, step_y, origin_y) - ay) / dy
    } else {
        f64::INFINITY
    };
    let t_delta_x = if dx != 0.0 {
        res / dx.abs()
    } else {
        f64::INFINITY
    };
    let t_delta_y = if dy != 0.0 {
        res / dy.abs()
    } else {
        f64::INFINITY
    };

    const TIE: f64 = 1e-12;
    loop {
        let corner = step_x != 0
            && step_y != 0
            && t_max_x.is_finite()
            && (t_max_x - t_max_y).abs() <= TIE * t_max_x.abs().max(1.0);
        if corner {
            let t = t_max_x.min(t_max_y);
            if t > 1.0 {
                return None;
            }
            if occupied(cx + step_x, cy) || occupied(cx, cy + step_y) {
                return Some(t);
            }
            cx += step_x;
            cy += step_y;
            t_max_x += t_delta_x;
            t_max_y += t_delta_y;
            if occupied(cx, cy) {
                return Some(t);
            }
        } else if t_max_x < t_max_y {
            let t = t_max_x;
            if t > 1.0 {
                return None;
            }
            cx += step_x;
            t_max_x += t_delta_x;
            if occupied(cx, cy) {
                return Some(t);
            }
        } else {
            let t = t_max_y;
            if t > 1.0 {
                return None;
            }
            cy += step_y;
            t_max_y += t_delta_y;
            if occupied(cx, cy) {
                return Some(t);
            }
        }
    }
}

/// Normalize an angle into [0, 2*pi).
pub fn normalize_angle(a: f64) -> f64 {
    let mut r = a % TAU;
    if r < 0.0 {
        r += TAU;
    }
    // a % TAU can round back up to exactly TAU for tiny negative inputs
    if r >= TAU {
        r -= TAU;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_wraps_into_range() {
        assert_eq!(normalize_angle(0.0), 0.0);
        assert!((normalize_angle(-0.1) - (TAU - 0.1)).abs() < 1e-12);
        assert!((normalize_angle(TAU + 0.25) - 0.25).abs() < 1e-12);
        let r = normalize_angle(-1e-18);
        assert!((0.0..TAU).contains(&r));
    }

    #[test]
    fn bearing_matches_atan2() {
        let a = Point3::new(1.0, 1.0, 0.0);
        let b = Point3::new(2.0, 2.0, 0.0);
        assert!((a.bearing_to(b) - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
    }
}
