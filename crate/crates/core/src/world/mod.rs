//! Workspace geometry: bounds, convex polygonal obstacles, and the collision
//! predicates used by both the geometric lead planner and the kinodynamic
//! planner. Contact with an obstacle boundary counts as a collision.

pub mod scenario;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{cross, dist_point_segment, segments_intersect, Point};
use crate::stl::TimeInterval;

#[derive(Debug, Error, PartialEq)]
pub enum WorldError {
    #[error("workspace bounds are degenerate: [{x_min},{x_max}]x[{y_min},{y_max}]")]
    DegenerateBounds { x_min: f64, x_max: f64, y_min: f64, y_max: f64 },
    #[error("obstacle {index}: polygon needs at least 3 vertices")]
    TooFewVertices { index: usize },
    #[error("obstacle {index}: polygon must be convex with counterclockwise vertices")]
    NotConvexCcw { index: usize },
    #[error("obstacle {index}: polygon leaves the workspace bounds")]
    ObstacleOutOfBounds { index: usize },
}

/// Axis-aligned workspace rectangle, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Bounds {
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }
}

/// A convex obstacle polygon with counterclockwise vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Point>,
}

impl ConvexPolygon {
    pub fn new(vertices: Vec<Point>) -> Result<Self, WorldError> {
        let poly = ConvexPolygon { vertices };
        if poly.vertices.len() < 3 {
            return Err(WorldError::TooFewVertices { index: 0 });
        }
        if !poly.is_convex_ccw() {
            return Err(WorldError::NotConvexCcw { index: 0 });
        }
        Ok(poly)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    fn is_convex_ccw(&self) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let c = self.vertices[(i + 2) % n];
            cross(a, b, c) > 0.0
        })
    }

    /// Containment including the boundary.
    pub fn contains(&self, p: Point) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| cross(self.vertices[i], self.vertices[(i + 1) % n], p) >= 0.0)
    }

    /// Closed-segment intersection with the polygon (boundary contact counts).
    pub fn intersects_segment(&self, p: Point, q: Point) -> bool {
        if self.contains(p) || self.contains(q) {
            return true;
        }
        let n = self.vertices.len();
        (0..n).any(|i| {
            segments_intersect(p, q, self.vertices[i], self.vertices[(i + 1) % n])
        })
    }

    /// Distance from a point to the polygon (0 inside or on the boundary).
    pub fn distance(&self, p: Point) -> f64 {
        if self.contains(p) {
            return 0.0;
        }
        let n = self.vertices.len();
        (0..n)
            .map(|i| dist_point_segment(p, self.vertices[i], self.vertices[(i + 1) % n]))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn centroid(&self) -> Point {
        let n = self.vertices.len() as f64;
        let (sx, sy) = self
            .vertices
            .iter()
            .fold((0.0, 0.0), |(sx, sy), v| (sx + v.x, sy + v.y));
        Point::new(sx / n, sy / n)
    }
}

/// A goal disk with its time window.
#[derive(Debug, Clone, PartialEq)]
pub struct GoalRegion {
    pub center: Point,
    pub radius: f64,
    pub interval: TimeInterval,
}

impl GoalRegion {
    pub fn contains(&self, p: Point) -> bool {
        p.dist(self.center) <= self.radius
    }
}

/// Workspace bounds plus obstacles. Immutable after construction; all
/// queries are pure.
#[derive(Debug, Clone, PartialEq)]
pub struct Workspace {
    bounds: Bounds,
    obstacles: Vec<ConvexPolygon>,
}

impl Workspace {
    pub fn new(bounds: Bounds, obstacles: Vec<ConvexPolygon>) -> Result<Self, WorldError> {
        if !(bounds.x_min < bounds.x_max && bounds.y_min < bounds.y_max) {
            return Err(WorldError::DegenerateBounds {
                x_min: bounds.x_min,
                x_max: bounds.x_max,
                y_min: bounds.y_min,
                y_max: bounds.y_max,
            });
        }
        for (index, poly) in obstacles.iter().enumerate() {
            if poly.vertices.len() < 3 {
                return Err(WorldError::TooFewVertices { index });
            }
            if !poly.is_convex_ccw() {
                return Err(WorldError::NotConvexCcw { index });
            }
            if poly.vertices.iter().any(|v| !bounds.contains(*v)) {
                return Err(WorldError::ObstacleOutOfBounds { index });
            }
        }
        Ok(Workspace { bounds, obstacles })
    }

    pub fn empty(bounds: Bounds) -> Result<Self, WorldError> {
        Workspace::new(bounds, Vec::new())
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    pub fn obstacles(&self) -> &[ConvexPolygon] {
        &self.obstacles
    }

    /// True iff `p` is inside the bounds and strictly outside every obstacle.
    pub fn point_free(&self, p: Point) -> bool {
        self.bounds.contains(p) && !self.obstacles.iter().any(|o| o.contains(p))
    }

    /// True iff the closed segment stays in bounds and touches no obstacle.
    pub fn segment_free(&self, p: Point, q: Point) -> bool {
        self.bounds.contains(p)
            && self.bounds.contains(q)
            && !self.obstacles.iter().any(|o| o.intersects_segment(p, q))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square_at(x: f64, y: f64) -> ConvexPolygon {
        ConvexPolygon::new(vec![
            Point::new(x, y),
            Point::new(x + 1.0, y),
            Point::new(x + 1.0, y + 1.0),
            Point::new(x, y + 1.0),
        ])
        .unwrap()
    }

    fn workspace_with_square() -> Workspace {
        Workspace::new(
            Bounds { x_min: 0.0, x_max: 10.0, y_min: 0.0, y_max: 10.0 },
            vec![unit_square_at(4.0, 4.0)],
        )
        .unwrap()
    }

    #[test]
    fn rejects_clockwise_polygon() {
        let cw = ConvexPolygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 0.0),
        ]);
        assert!(matches!(cw, Err(WorldError::NotConvexCcw { .. })));
    }

    #[test]
    fn point_queries() {
        let ws = workspace_with_square();
        assert!(ws.point_free(Point::new(1.0, 1.0)));
        assert!(!ws.point_free(Point::new(4.5, 4.5))); // centroid of the obstacle
        assert!(!ws.point_free(Point::new(4.0, 4.5))); // boundary contact
        assert!(!ws.point_free(Point::new(-1.0, 5.0))); // outside bounds
    }

    #[test]
    fn empty_workspace_is_all_free() {
        let ws = Workspace::empty(Bounds { x_min: 0.0, x_max: 10.0, y_min: 0.0, y_max: 10.0 })
            .unwrap();
        assert!(ws.point_free(Point::new(5.0, 5.0)));
        assert!(ws.segment_free(Point::new(0.0, 0.0), Point::new(10.0, 10.0)));
    }

    #[test]
    fn segment_through_obstacle_is_blocked() {
        let ws = workspace_with_square();
        // Midpoint (4.5, 4.5) is inside the square.
        assert!(!ws.segment_free(Point::new(0.0, 0.0), Point::new(9.0, 9.0)));
        assert!(ws.segment_free(Point::new(0.0, 0.0), Point::new(9.0, 0.0)));
    }

    #[test]
    fn grazing_segment_counts_as_collision() {
        let ws = workspace_with_square();
        // Runs exactly along the obstacle's bottom edge y = 4.
        assert!(!ws.segment_free(Point::new(0.0, 4.0), Point::new(9.0, 4.0)));
        // Touches a single corner at (4, 4).
        assert!(!ws.segment_free(Point::new(3.0, 3.0), Point::new(5.0, 5.0)));
    }

    #[test]
    fn segment_leaving_bounds_is_blocked() {
        let ws = workspace_with_square();
        assert!(!ws.segment_free(Point::new(1.0, 1.0), Point::new(11.0, 1.0)));
    }

    #[test]
    fn polygon_distance() {
        let sq = unit_square_at(4.0, 4.0);
        assert_eq!(sq.distance(Point::new(4.5, 4.5)), 0.0);
        assert!((sq.distance(Point::new(4.5, 2.0)) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn segment_free_implies_interior_points_free() {
        let ws = workspace_with_square();
        let p = Point::new(0.5, 0.5);
        let q = Point::new(9.5, 2.5);
        assert!(ws.segment_free(p, q));
        for k in 0..=100 {
            let s = k as f64 / 100.0;
            let m = Point::new(p.x + s * (q.x - p.x), p.y + s * (q.y - p.y));
            assert!(ws.point_free(m), "interior sample {k} not free");
        }
    }
}
