//! Planar geometry primitives shared by collision checking and lead-path queries.

use serde::{Deserialize, Serialize};

/// A point (or vector) in the workspace plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(&self, other: Point) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }

    pub fn dist_sq(&self, other: Point) -> f64 {
        (self.x - other.x).powi(2) + (self.y - other.y).powi(2)
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Point { x, y }
    }
}

/// Cross product of (b - a) and (c - a). Positive when c lies to the left of a->b.
pub fn cross(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn in_bounding_box(p: Point, a: Point, b: Point) -> bool {
    p.x <= a.x.max(b.x)
        && p.x >= a.x.min(b.x)
        && p.y <= a.y.max(b.y)
        && p.y >= a.y.min(b.y)
}

/// Closed-segment intersection test; touching endpoints and collinear overlap count.
pub fn segments_intersect(p1: Point, q1: Point, p2: Point, q2: Point) -> bool {
    let d1 = cross(p2, q2, p1);
    let d2 = cross(p2, q2, q1);
    let d3 = cross(p1, q1, p2);
    let d4 = cross(p1, q1, q2);

    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }

    (d1 == 0.0 && in_bounding_box(p1, p2, q2))
        || (d2 == 0.0 && in_bounding_box(q1, p2, q2))
        || (d3 == 0.0 && in_bounding_box(p2, p1, q1))
        || (d4 == 0.0 && in_bounding_box(q2, p1, q1))
}

/// Distance from `p` to the closed segment `ab`.
pub fn dist_point_segment(p: Point, a: Point, b: Point) -> f64 {
    let ab = Point::new(b.x - a.x, b.y - a.y);
    let len_sq = ab.x * ab.x + ab.y * ab.y;
    if len_sq == 0.0 {
        return p.dist(a);
    }
    let t = ((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len_sq;
    let t = t.clamp(0.0, 1.0);
    p.dist(Point::new(a.x + t * ab.x, a.y + t * ab.y))
}

/// Minimum distance from `p` to a polyline (0 for a single waypoint means p == waypoint).
pub fn dist_point_polyline(p: Point, polyline: &[Point]) -> f64 {
    match polyline {
        [] => f64::INFINITY,
        [single] => p.dist(*single),
        _ => polyline
            .windows(2)
            .map(|w| dist_point_segment(p, w[0], w[1]))
            .fold(f64::INFINITY, f64::min),
    }
}

/// True when the open segments properly cross (shared endpoints do not count).
///
/// Used for detecting self-intersections of trajectory polylines, where
/// consecutive segments always share an endpoint.
pub fn segments_properly_cross(p1: Point, q1: Point, p2: Point, q2: Point) -> bool {
    let d1 = cross(p2, q2, p1);
    let d2 = cross(p2, q2, q1);
    let d3 = cross(p1, q1, p2);
    let d4 = cross(p1, q1, q2);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// Whether a polyline's interior crosses itself anywhere.
pub fn polyline_self_intersects(points: &[Point]) -> bool {
    if points.len() < 4 {
        return false;
    }
    for i in 0..points.len() - 1 {
        // Skip adjacent segments: they share an endpoint by construction.
        for j in i + 2..points.len() - 1 {
            if segments_properly_cross(points[i], points[i + 1], points[j], points[j + 1]) {
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_intersection_basic() {
        let a = Point::new(0.0, 0.0);
        let b = Point::new(2.0, 2.0);
        let c = Point::new(0.0, 2.0);
        let d = Point::new(2.0, 0.0);
        assert!(segments_intersect(a, b, c, d));
        assert!(!segments_intersect(a, Point::new(1.0, 0.0), c, Point::new(1.0, 2.0)));
    }

    #[test]
    fn segment_touching_counts() {
        // Shared endpoint.
        let a = Point::new(0.0, 0.0);
        let b = Point::new(1.0, 0.0);
        let c = Point::new(1.0, 0.0);
        let d = Point::new(2.0, 1.0);
        assert!(segments_intersect(a, b, c, d));
        // T-junction touch.
        assert!(segments_intersect(
            Point::new(0.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0)
        ));
    }

    #[test]
    fn point_segment_distance() {
        let a = Point::new(0.0, 0.0);
        let b = Point::new(10.0, 0.0);
        assert_eq!(dist_point_segment(Point::new(5.0, 3.0), a, b), 3.0);
        // Beyond an endpoint clamps to the endpoint.
        assert_eq!(dist_point_segment(Point::new(13.0, 4.0), a, b), 5.0);
    }

    #[test]
    fn self_intersection_detects_crossover() {
        let crossing = [
            Point::new(0.0, 0.0),
            Point::new(2.0, 2.0),
            Point::new(2.0, 0.0),
            Point::new(0.0, 2.0),
        ];
        assert!(polyline_self_intersects(&crossing));
        let straight = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(2.0, 0.1),
        ];
        assert!(!polyline_self_intersects(&straight));
    }
}
