//! Uniform hash grid over node positions for radius queries.
//!
//! Cell size matches the sensing range, so a radius query touches at most a
//! 3x3 block of cells plus an exact distance filter. Insertion and removal
//! are O(1); there is no rebalancing.

use crate::geom::Point3;
use std::collections::HashMap;

#[derive(Debug, Clone)]
pub struct SpatialGrid<K> {
    cells: HashMap<(i64, i64), Vec<(K, Point3)>>,
    cell_size: f64,
}

impl<K: Copy + PartialEq + Ord> SpatialGrid<K> {
    pub fn new(cell_size: f64) -> Self {
        Self {
            cells: HashMap::new(),
            cell_size,
        }
    }

    fn key(&self, p: Point3) -> (i64, i64) {
        (
            (p.x / self.cell_size).floor() as i64,
            (p.y / self.cell_size).floor() as i64,
        )
    }

    pub fn insert(&mut self, id: K, p: Point3) {
        self.cells.entry(self.key(p)).or_default().push((id, p));
    }

    pub fn remove(&mut self, id: K, p: Point3) {
        let key = self.key(p);
        if let Some(v) = self.cells.get_mut(&key) {
            v.retain(|(k, _)| *k != id);
            if v.is_empty() {
                self.cells.remove(&key);
            }
        }
    }

    pub fn update(&mut self, id: K, old: Point3, new: Point3) {
        self.remove(id, old);
        self.insert(id, new);
    }

    /// All ids within 3D Euclidean distance `< radius` of `p`, sorted for
    /// deterministic iteration.
    pub fn query_within(&self, p: Point3, radius: f64) -> Vec<K> {
        let reach = (radius / self.cell_size).ceil() as i64;
        let (cx, cy) = self.key(p);
        let mut out = Vec::new();
        for dx in -reach..=reach {
            for dy in -reach..=reach {
                if let Some(v) = self.cells.get(&(cx + dx, cy + dy)) {
                    for (id, q) in v {
                        if p.distance(*q) < radius {
                            out.push(*id);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}
