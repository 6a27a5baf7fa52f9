//! Uniform hash grid over the weighted (x, y, theta, t) state space, used for
//! witness lookups and best-near selection. The theta axis is modular so
//! headings near +/-pi see each other; the time axis is optional (weight 0
//! collapses it, giving a purely spatial grid).

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::dynamics::normalize_angle;

/// A grid point: position, heading, and arrival time.
pub type GridPoint = (f64, f64, f64, f64);

/// Weighted distance: euclidean on
/// (x, y, theta_weight * wrapped delta-theta, time_weight * delta-t).
pub fn weighted_dist(a: GridPoint, b: GridPoint, theta_weight: f64, time_weight: f64) -> f64 {
    let dth = normalize_angle(a.2 - b.2);
    ((a.0 - b.0).powi(2)
        + (a.1 - b.1).powi(2)
        + (theta_weight * dth).powi(2)
        + (time_weight * (a.3 - b.3)).powi(2))
    .sqrt()
}

pub struct StateGrid {
    cell: f64,
    theta_weight: f64,
    time_weight: f64,
    theta_cells: i64,
    map: HashMap<(i64, i64, i64, i64), Vec<u32>>,
}

impl StateGrid {
    /// `cell` must be at least the largest radius ever queried, so that a
    /// ball always fits inside the 3x3x3x3 neighborhood of its center cell.
    pub fn new(cell: f64, theta_weight: f64, time_weight: f64) -> Self {
        let circumference = 2.0 * PI * theta_weight;
        let theta_cells = ((circumference / cell).ceil() as i64).max(1);
        StateGrid { cell, theta_weight, time_weight, theta_cells, map: HashMap::new() }
    }

    fn key(&self, p: GridPoint) -> (i64, i64, i64, i64) {
        let ix = (p.0 / self.cell).floor() as i64;
        let iy = (p.1 / self.cell).floor() as i64;
        // Shift theta to [0, 2*pi) before scaling so indices stay in range.
        let shifted = (normalize_angle(p.2) + PI).rem_euclid(2.0 * PI);
        let it = ((shifted * self.theta_weight / self.cell).floor() as i64)
            .clamp(0, self.theta_cells - 1);
        let iw = if self.time_weight > 0.0 {
            (p.3 * self.time_weight / self.cell).floor() as i64
        } else {
            0
        };
        (ix, iy, it, iw)
    }

    pub fn insert(&mut self, p: GridPoint, id: u32) {
        self.map.entry(self.key(p)).or_default().push(id);
    }

    pub fn remove(&mut self, p: GridPoint, id: u32) {
        let key = self.key(p);
        if let Some(bucket) = self.map.get_mut(&key) {
            bucket.retain(|x| *x != id);
            if bucket.is_empty() {
                self.map.remove(&key);
            }
        }
    }

    /// Visit every id stored within the 3^4 cell neighborhood of `p`.
    /// Candidates farther than `cell` may appear; callers re-check distances.
    pub fn for_each_near(&self, p: GridPoint, mut visit: impl FnMut(u32)) {
        let (ix, iy, it, iw) = self.key(p);
        let mut theta_offsets = [0i64; 3];
        let mut theta_count = 0;
        for dt in -1..=1 {
            let wrapped = (it + dt).rem_euclid(self.theta_cells);
            if !theta_offsets[..theta_count].contains(&wrapped) {
                theta_offsets[theta_count] = wrapped;
                theta_count += 1;
            }
        }
        let time_range: &[i64] = if self.time_weight > 0.0 { &[-1, 0, 1] } else { &[0] };
        for dx in -1..=1 {
            for dy in -1..=1 {
                for &tz in &theta_offsets[..theta_count] {
                    for dw in time_range {
                        if let Some(bucket) = self.map.get(&(ix + dx, iy + dy, tz, iw + dw)) {
                            for id in bucket {
                                visit(*id);
                            }
                        }
                    }
                }
            }
        }
    }

    pub fn theta_weight(&self) -> f64 {
        self.theta_weight
    }

    pub fn time_weight(&self) -> f64 {
        self.time_weight
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_neighbors_within_cell_radius() {
        let mut grid = StateGrid::new(0.5, 0.3, 0.0);
        grid.insert((1.0, 1.0, 0.0, 0.0), 1);
        grid.insert((1.3, 1.2, 0.1, 0.0), 2);
        grid.insert((5.0, 5.0, 0.0, 0.0), 3);
        let mut found = Vec::new();
        grid.for_each_near((1.1, 1.1, 0.0, 0.0), |id| found.push(id));
        found.sort();
        assert_eq!(found, vec![1, 2]);
    }

    #[test]
    fn theta_axis_wraps() {
        let mut grid = StateGrid::new(0.5, 0.3, 0.0);
        grid.insert((0.0, 0.0, PI - 0.01, 0.0), 1);
        let mut found = Vec::new();
        grid.for_each_near((0.0, 0.0, -PI + 0.01, 0.0), |id| found.push(id));
        assert_eq!(found, vec![1]);
        // And the weighted distance across the seam is small.
        let d = weighted_dist((0.0, 0.0, PI - 0.01, 0.0), (0.0, 0.0, -PI + 0.01, 0.0), 0.3, 0.0);
        assert!(d < 0.01);
    }

    #[test]
    fn time_axis_separates_when_weighted() {
        let mut grid = StateGrid::new(0.25, 0.3, 0.1);
        grid.insert((1.0, 1.0, 0.0, 0.0), 1);
        // Same pose 30 seconds later lands 12 cells away on the time axis.
        let mut found = Vec::new();
        grid.for_each_near((1.0, 1.0, 0.0, 30.0), |id| found.push(id));
        assert!(found.is_empty());
        let d = weighted_dist((1.0, 1.0, 0.0, 0.0), (1.0, 1.0, 0.0, 30.0), 0.3, 0.1);
        assert!((d - 3.0).abs() < 1e-12);
    }

    #[test]
    fn remove_clears_entries() {
        let mut grid = StateGrid::new(0.5, 0.3, 0.1);
        grid.insert((1.0, 1.0, 0.0, 2.0), 1);
        grid.remove((1.0, 1.0, 0.0, 2.0), 1);
        let mut found = Vec::new();
        grid.for_each_near((1.0, 1.0, 0.0, 2.0), |id| found.push(id));
        assert!(found.is_empty());
    }
}
