//! Geometric lead path through the ordered goal regions, decomposed into
//! layers that gate sampling and tree growth.
//!
//! A lead through n regions (the start counts as region 0) has 2n-1 layers:
//! even layers are the regions themselves, represented by their entry
//! waypoint plus the goal disk; odd layers are the connecting sub-paths.
//! Layers are numbered in visitation order, so a correctly ordered traversal
//! walks layer 0 through layer 2n-2.

mod rrt_star;

pub use rrt_star::{rrt_star, RrtStarParams};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{dist_point_polyline, Point};
use crate::kinoplanner::PlannerParams;
use crate::stl::FragmentSpec;
use crate::taskplan::PlanOrder;
use crate::world::Workspace;

#[derive(Debug, Error, PartialEq)]
pub enum GeoleadError {
    #[error("lead start position is in collision")]
    StartBlocked,
    #[error("no geometric path found for leg {leg} within the iteration budget")]
    NoPath { leg: usize },
    #[error("no collision-free sample near layer {layer} after {attempts} attempts")]
    SampleExhausted { layer: usize, attempts: u32 },
}

/// A goal disk carried by an even (region) layer.
#[derive(Debug, Clone, Copy, PartialEq)]
struct RegionDisk {
    center: Point,
    radius: f64,
}

/// The lead polyline with its layer decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct LeadPath {
    waypoints: Vec<Point>,
    /// Inclusive waypoint index range per layer; even layers are single
    /// waypoints (the region entry), odd layers span a sub-path.
    spans: Vec<(usize, usize)>,
    /// Goal disk per layer; only even layers past the start carry one.
    disks: Vec<Option<RegionDisk>>,
}

impl LeadPath {
    pub fn layer_count(&self) -> usize {
        self.spans.len()
    }

    pub fn waypoints(&self) -> &[Point] {
        &self.waypoints
    }

    pub fn layer_span(&self, layer: usize) -> &[Point] {
        let (a, b) = self.spans[layer];
        &self.waypoints[a..=b]
    }

    /// Minimum distance from `p` to the lead polyline.
    pub fn dist_to_lead(&self, p: Point) -> f64 {
        dist_point_polyline(p, &self.waypoints)
    }

    /// Distance from `p` to one layer's carrier: the span polyline, plus the
    /// region disk for even layers.
    pub fn dist_to_layer(&self, p: Point, layer: usize) -> f64 {
        let span_dist = dist_point_polyline(p, self.layer_span(layer));
        match self.disks[layer] {
            Some(disk) => span_dist.min((p.dist(disk.center) - disk.radius).max(0.0)),
            None => span_dist,
        }
    }

    /// Index of the layer nearest to `p`.
    ///
    /// Ties at a strictly positive distance resolve to the lower index. An
    /// exact zero tie prefers the deepest region (even) layer touching `p`:
    /// junction waypoints belong to the region they enter rather than the
    /// sub-paths meeting there, and when leading legs collapse (start already
    /// inside a goal) the point counts as having reached that region.
    pub fn layer_assign(&self, p: Point) -> usize {
        let mut best = 0usize;
        let mut best_dist = f64::INFINITY;
        let mut zero_even: Option<usize> = None;
        for layer in 0..self.layer_count() {
            let d = self.dist_to_layer(p, layer);
            if d == 0.0 && layer % 2 == 0 {
                zero_even = Some(layer);
            }
            if d < best_dist {
                best_dist = d;
                best = layer;
            }
        }
        if best_dist == 0.0 {
            if let Some(even) = zero_even {
                return even;
            }
        }
        best
    }

    /// Uniform sample along the layer's arc length plus a uniform disk offset
    /// of radius `s_r`, rejection-sampled against obstacles and bounds.
    pub fn sample_near_layer<R: Rng>(
        &self,
        layer: usize,
        s_r: f64,
        workspace: &Workspace,
        rng: &mut R,
    ) -> Result<Point, GeoleadError> {
        const MAX_ATTEMPTS: u32 = 1000;
        let span = self.layer_span(layer);
        let seg_lengths: Vec<f64> = span.windows(2).map(|w| w[0].dist(w[1])).collect();
        let total: f64 = seg_lengths.iter().sum();
        for _ in 0..MAX_ATTEMPTS {
            let on_path = if total == 0.0 {
                span[0]
            } else {
                let mut s = rng.random_range(0.0..=total);
                let mut point = *span.last().unwrap();
                for (k, len) in seg_lengths.iter().enumerate() {
                    if s <= *len {
                        let (a, b) = (span[k], span[k + 1]);
                        let f = if *len == 0.0 { 0.0 } else { s / len };
                        point = Point::new(a.x + f * (b.x - a.x), a.y + f * (b.y - a.y));
                        break;
                    }
                    s -= len;
                }
                point
            };
            let r = s_r * rng.random_range(0.0f64..=1.0).sqrt();
            let ang = rng.random_range(0.0..std::f64::consts::TAU);
            let candidate = Point::new(on_path.x + r * ang.cos(), on_path.y + r * ang.sin());
            if workspace.point_free(candidate) {
                return Ok(candidate);
            }
        }
        Err(GeoleadError::SampleExhausted { layer, attempts: MAX_ATTEMPTS })
    }
}

/// Build the lead for one candidate order: RRT* sub-paths chained through the
/// ordered regions, starting at the initial position. Leg k uses the RNG
/// stream seeded with `seed + k`.
pub fn build_lead(
    order: &PlanOrder,
    fragment: &FragmentSpec,
    workspace: &Workspace,
    start: Point,
    params: &PlannerParams,
    seed: u64,
) -> Result<LeadPath, GeoleadError> {
    let rrt_params = RrtStarParams {
        iterations: params.rrt_iters,
        step: params.rrt_step,
        goal_bias: params.rrt_goal_bias,
    };

    let mut waypoints = vec![start];
    let mut spans = vec![(0usize, 0usize)];
    let mut disks: Vec<Option<RegionDisk>> = vec![None];

    let mut entry = start;
    for (leg, goal_idx) in order.iter().enumerate() {
        let goal = fragment.goal(*goal_idx);
        let center = Point::new(goal.center.0, goal.center.1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(leg as u64));
        let sub_path = rrt_star(workspace, entry, center, goal.radius, &rrt_params, &mut rng)
            .map_err(|e| match e {
                GeoleadError::NoPath { .. } => GeoleadError::NoPath { leg },
                other => other,
            })?;

        let leg_start = waypoints.len() - 1;
        waypoints.extend(sub_path.iter().skip(1));
        let leg_end = waypoints.len() - 1;
        spans.push((leg_start, leg_end)); // odd layer: the sub-path
        spans.push((leg_end, leg_end)); // even layer: the region entry
        disks.push(None);
        disks.push(Some(RegionDisk { center, radius: goal.radius }));
        entry = waypoints[leg_end];
    }

    Ok(LeadPath { waypoints, spans, disks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stl::{extract_fragment, parse_formula};
    use crate::world::Bounds;

    fn empty_workspace() -> Workspace {
        Workspace::empty(Bounds { x_min: -1.0, x_max: 12.0, y_min: -1.0, y_max: 8.0 }).unwrap()
    }

    fn fragment(formula: &str) -> FragmentSpec {
        extract_fragment(&parse_formula(formula).unwrap()).unwrap()
    }

    fn default_params() -> PlannerParams {
        PlannerParams::default_for_tests()
    }

    fn straight_lead() -> LeadPath {
        // Hand-built: start (0,0), one region at (10,0); sub-path via (5,0).
        LeadPath {
            waypoints: vec![Point::new(0.0, 0.0), Point::new(5.0, 0.0), Point::new(10.0, 0.0)],
            spans: vec![(0, 0), (0, 2), (2, 2)],
            disks: vec![None, None, Some(RegionDisk { center: Point::new(10.0, 0.0), radius: 0.3 })],
        }
    }

    #[test]
    fn layer_count_formula() {
        let ws = empty_workspace();
        let frag = fragment(
            "F(dist(x,y; 3,3) <= 0.3) & F(dist(x,y; 6,3) <= 0.3) & F(dist(x,y; 9,3) <= 0.3)",
        );
        let lead = build_lead(&vec![0, 1, 2], &frag, &ws, Point::new(0.0, 0.0), &default_params(), 1)
            .unwrap();
        // start + 3 regions = 4 regions -> 7 layers.
        assert_eq!(lead.layer_count(), 7);

        let frag2 = fragment("F(dist(x,y; 5,4) <= 0.3)");
        let lead2 = build_lead(&vec![0], &frag2, &ws, Point::new(0.0, 0.0), &default_params(), 1)
            .unwrap();
        // start + 1 goal -> 3 layers.
        assert_eq!(lead2.layer_count(), 3);
    }

    #[test]
    fn lead_visits_regions_in_order() {
        let ws = empty_workspace();
        let frag = fragment("F(dist(x,y; 5,4) <= 0.3) & F(dist(x,y; 10,4) <= 0.3)");
        let lead = build_lead(&vec![0, 1], &frag, &ws, Point::new(0.0, 0.0), &default_params(), 2)
            .unwrap();
        let in_disk = |p: Point, c: (f64, f64)| p.dist(Point::new(c.0, c.1)) <= 0.3;
        let first_hit_0 = lead.waypoints().iter().position(|p| in_disk(*p, (5.0, 4.0)));
        let first_hit_1 = lead.waypoints().iter().position(|p| in_disk(*p, (10.0, 4.0)));
        assert!(first_hit_0.unwrap() < first_hit_1.unwrap());
    }

    #[test]
    fn lead_spans_are_contiguous_and_shared() {
        let ws = empty_workspace();
        let frag = fragment("F(dist(x,y; 5,4) <= 0.3) & F(dist(x,y; 10,4) <= 0.3)");
        let lead = build_lead(&vec![0, 1], &frag, &ws, Point::new(0.0, 0.0), &default_params(), 3)
            .unwrap();
        // Odd spans chain: each sub-path starts where the previous ended.
        assert_eq!(lead.spans[1].0, lead.spans[0].1);
        assert_eq!(lead.spans[3].0, lead.spans[2].1);
        // Even spans are single waypoints at the junctions.
        assert_eq!(lead.spans[2].0, lead.spans[2].1);
        assert_eq!(lead.spans[2].0, lead.spans[1].1);
        assert_eq!(lead.spans[4].1, lead.waypoints.len() - 1);
    }

    #[test]
    fn layer_assignment_examples() {
        let lead = straight_lead();
        // Entry waypoint of region 1 -> its region layer (even wins zero tie).
        assert_eq!(lead.layer_assign(Point::new(10.0, 0.0)), 2);
        // Start waypoint -> layer 0.
        assert_eq!(lead.layer_assign(Point::new(0.0, 0.0)), 0);
        // Midpoint of the sub-path, far from both regions -> layer 1.
        assert_eq!(lead.layer_assign(Point::new(5.0, 0.0)), 1);
        assert_eq!(lead.layer_assign(Point::new(5.0, 2.0)), 1);
        // Positive-distance tie between layers resolves to the lower index:
        // (-1, 0) is exactly 1.0 from both the start waypoint (layer 0) and
        // the sub-path polyline (layer 1, clamped to its first endpoint).
        assert_eq!(lead.layer_assign(Point::new(-1.0, 0.0)), 0);
    }

    #[test]
    fn distance_queries() {
        let lead = straight_lead();
        assert_eq!(lead.dist_to_lead(Point::new(5.0, 0.0)), 0.0);
        assert_eq!(lead.dist_to_lead(Point::new(5.0, 3.0)), 3.0);
        // Beyond the last endpoint: distance to that endpoint.
        assert!((lead.dist_to_lead(Point::new(13.0, 4.0)) - 5.0).abs() < 1e-12);
        // Even-layer carrier includes the goal disk.
        assert_eq!(lead.dist_to_layer(Point::new(10.1, 0.0), 2), 0.0);
        assert!((lead.dist_to_layer(Point::new(10.0, 1.0), 2) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn samples_stay_in_the_tube() {
        let lead = straight_lead();
        let ws = empty_workspace();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let p = lead.sample_near_layer(1, 1.0, &ws, &mut rng).unwrap();
            assert!(p.y.abs() <= 1.0 + 1e-12, "sample {p:?} outside the tube");
            assert!(lead.dist_to_layer(p, 1) <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn sampling_a_buried_span_exhausts() {
        use crate::world::ConvexPolygon;
        let bounds = Bounds { x_min: -1.0, x_max: 12.0, y_min: -6.0, y_max: 6.0 };
        let blocker = ConvexPolygon::new(vec![
            Point::new(2.0, -4.0),
            Point::new(8.0, -4.0),
            Point::new(8.0, 4.0),
            Point::new(2.0, 4.0),
        ])
        .unwrap();
        let ws = Workspace::new(bounds, vec![blocker]).unwrap();
        let lead = LeadPath {
            waypoints: vec![Point::new(4.0, 0.0), Point::new(6.0, 0.0)],
            spans: vec![(0, 1)],
            disks: vec![None],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        // s_r = 1 keeps every sample deep inside the blocker.
        assert!(matches!(
            lead.sample_near_layer(0, 1.0, &ws, &mut rng),
            Err(GeoleadError::SampleExhausted { .. })
        ));
    }

    #[test]
    fn start_inside_first_goal_collapses_leg() {
        let ws = empty_workspace();
        let frag = fragment("F(dist(x,y; 0.1,0) <= 0.3) & F(dist(x,y; 5,4) <= 0.3)");
        let lead = build_lead(&vec![0, 1], &frag, &ws, Point::new(0.0, 0.0), &default_params(), 5)
            .unwrap();
        assert_eq!(lead.layer_count(), 5);
        // First leg degenerates to the start waypoint.
        assert_eq!(lead.spans[1], (0, 0));
        // The start point counts as having reached region 1 already.
        assert_eq!(lead.layer_assign(Point::new(0.0, 0.0)), 2);
    }
}
