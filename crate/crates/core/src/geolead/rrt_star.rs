//! Geometric RRT* over the workspace plane, used to build lead sub-paths.

use rand::Rng;

use crate::geometry::Point;
use crate::world::Workspace;

use super::GeoleadError;

struct RrtNode {
    p: Point,
    parent: Option<usize>,
    cost: f64,
    children: Vec<usize>,
}

pub struct RrtStarParams {
    pub iterations: u32,
    pub step: f64,
    pub goal_bias: f64,
}

/// Grow an RRT* from `start` until the iteration budget is spent, then return
/// the cheapest collision-free polyline ending inside the goal disk.
///
/// Rewiring uses the standard shrinking-ball neighbor radius, so path cost
/// improves with budget. Deterministic for a fixed RNG state.
pub fn rrt_star<R: Rng>(
    workspace: &Workspace,
    start: Point,
    goal_center: Point,
    goal_radius: f64,
    params: &RrtStarParams,
    rng: &mut R,
) -> Result<Vec<Point>, GeoleadError> {
    if !workspace.point_free(start) {
        return Err(GeoleadError::StartBlocked);
    }
    if start.dist(goal_center) <= goal_radius {
        return Ok(vec![start]);
    }

    let bounds = workspace.bounds();
    // Planning in 2-D: gamma above the (2(1+1/d) * area/pi)^(1/d) threshold.
    let area = bounds.width() * bounds.height();
    let gamma = 2.0 * (1.5 * area / std::f64::consts::PI).sqrt();

    let mut nodes = vec![RrtNode { p: start, parent: None, cost: 0.0, children: Vec::new() }];
    let mut best_goal: Option<usize> = None;

    for _ in 0..params.iterations {
        let target = if rng.random_range(0.0..1.0) < params.goal_bias {
            goal_center
        } else {
            Point::new(
                rng.random_range(bounds.x_min..=bounds.x_max),
                rng.random_range(bounds.y_min..=bounds.y_max),
            )
        };

        let nearest = (0..nodes.len())
            .min_by(|a, b| {
                nodes[*a]
                    .p
                    .dist_sq(target)
                    .partial_cmp(&nodes[*b].p.dist_sq(target))
                    .unwrap()
            })
            .unwrap();
        let from = nodes[nearest].p;
        let d = from.dist(target);
        if d == 0.0 {
            continue;
        }
        let reach = params.step.min(d);
        let new_p = Point::new(
            from.x + reach * (target.x - from.x) / d,
            from.y + reach * (target.y - from.y) / d,
        );
        if !workspace.point_free(new_p) || !workspace.segment_free(from, new_p) {
            continue;
        }

        let n = nodes.len() as f64;
        let radius = (gamma * ((n + 1.0).ln() / (n + 1.0)).sqrt()).max(params.step);

        // Choose the cheapest reachable parent inside the ball.
        let mut neighbor_ids: Vec<usize> = (0..nodes.len())
            .filter(|i| nodes[*i].p.dist(new_p) <= radius)
            .collect();
        if neighbor_ids.is_empty() {
            neighbor_ids.push(nearest);
        }
        let mut parent = nearest;
        let mut cost = nodes[nearest].cost + from.dist(new_p);
        for &i in &neighbor_ids {
            let candidate = nodes[i].cost + nodes[i].p.dist(new_p);
            if candidate < cost && workspace.segment_free(nodes[i].p, new_p) {
                parent = i;
                cost = candidate;
            }
        }

        let new_id = nodes.len();
        nodes.push(RrtNode { p: new_p, parent: Some(parent), cost, children: Vec::new() });
        nodes[parent].children.push(new_id);

        // Rewire neighbors through the new node where that is cheaper.
        for &i in &neighbor_ids {
            if i == parent {
                continue;
            }
            let through = cost + new_p.dist(nodes[i].p);
            if through < nodes[i].cost && workspace.segment_free(new_p, nodes[i].p) {
                let old_parent = nodes[i].parent.expect("non-root node has a parent");
                nodes[old_parent].children.retain(|c| *c != i);
                nodes[i].parent = Some(new_id);
                nodes[new_id].children.push(i);
                let delta = through - nodes[i].cost;
                propagate_cost(&mut nodes, i, delta);
            }
        }

        if new_p.dist(goal_center) <= goal_radius {
            let better = match best_goal {
                Some(b) => cost < nodes[b].cost,
                None => true,
            };
            if better {
                best_goal = Some(new_id);
            }
        }
    }

    // Rewiring may have changed costs after the last goal hit; re-scan.
    let best = (0..nodes.len())
        .filter(|i| nodes[*i].p.dist(goal_center) <= goal_radius)
        .min_by(|a, b| nodes[*a].cost.partial_cmp(&nodes[*b].cost).unwrap())
        .ok_or(GeoleadError::NoPath { leg: 0 })?;

    let mut path = Vec::new();
    let mut cursor = Some(best);
    while let Some(i) = cursor {
        path.push(nodes[i].p);
        cursor = nodes[i].parent;
    }
    path.reverse();
    Ok(path)
}

fn propagate_cost(nodes: &mut Vec<RrtNode>, root: usize, delta: f64) {
    let mut stack = vec![root];
    while let Some(i) = stack.pop() {
        nodes[i].cost += delta;
        stack.extend(nodes[i].children.iter().copied());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::Bounds;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn empty_workspace() -> Workspace {
        Workspace::empty(Bounds { x_min: -1.0, x_max: 12.0, y_min: -6.0, y_max: 6.0 }).unwrap()
    }

    fn params() -> RrtStarParams {
        RrtStarParams { iterations: 5000, step: 0.5, goal_bias: 0.05 }
    }

    #[test]
    fn start_inside_goal_is_trivial() {
        let ws = empty_workspace();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let path = rrt_star(&ws, Point::new(5.0, 0.1), Point::new(5.0, 0.0), 0.3, &params(), &mut rng)
            .unwrap();
        assert_eq!(path, vec![Point::new(5.0, 0.1)]);
    }

    #[test]
    fn converges_near_straight_line_in_empty_space() {
        let ws = empty_workspace();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let path = rrt_star(&ws, Point::new(0.0, 0.0), Point::new(10.0, 0.0), 0.3, &params(), &mut rng)
            .unwrap();
        let length: f64 = path.windows(2).map(|w| w[0].dist(w[1])).sum();
        // Straight-line lower bound is 10 - 0.3; allow 5% RRT* slack at this
        // budget (calibrated once for the fixed seed set below).
        let lower = 10.0 - 0.3;
        assert!(length >= lower - 1e-9, "path shorter than possible: {length}");
        assert!(length <= lower * 1.05, "path too long: {length}");
        // Every edge collision-free and endpoint inside the goal disk.
        for w in path.windows(2) {
            assert!(ws.segment_free(w[0], w[1]));
        }
        assert!(path.last().unwrap().dist(Point::new(10.0, 0.0)) <= 0.3);
    }

    #[test]
    fn convergence_holds_across_seeds() {
        let ws = empty_workspace();
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let path =
                rrt_star(&ws, Point::new(0.0, 0.0), Point::new(10.0, 0.0), 0.3, &params(), &mut rng)
                    .unwrap();
            let length: f64 = path.windows(2).map(|w| w[0].dist(w[1])).sum();
            assert!(length <= 9.7 * 1.05, "seed {seed}: path length {length}");
        }
    }

    #[test]
    fn walled_off_goal_reports_no_path() {
        use crate::world::ConvexPolygon;
        let bounds = Bounds { x_min: 0.0, x_max: 10.0, y_min: 0.0, y_max: 10.0 };
        // Box around the goal at (8, 8).
        let walls = vec![
            ConvexPolygon::new(vec![
                Point::new(6.0, 6.0),
                Point::new(10.0, 6.0),
                Point::new(10.0, 6.5),
                Point::new(6.0, 6.5),
            ])
            .unwrap(),
            ConvexPolygon::new(vec![
                Point::new(6.0, 6.5),
                Point::new(6.5, 6.5),
                Point::new(6.5, 10.0),
                Point::new(6.0, 10.0),
            ])
            .unwrap(),
        ];
        let ws = Workspace::new(bounds, walls).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let quick = RrtStarParams { iterations: 800, step: 0.5, goal_bias: 0.05 };
        let res = rrt_star(&ws, Point::new(1.0, 1.0), Point::new(8.0, 8.0), 0.3, &quick, &mut rng);
        assert!(matches!(res, Err(GeoleadError::NoPath { .. })));
    }

    #[test]
    fn deterministic_under_seed() {
        let ws = empty_workspace();
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            rrt_star(&ws, Point::new(0.0, 0.0), Point::new(10.0, 0.0), 0.3, &params(), &mut rng)
                .unwrap()
        };
        assert_eq!(run(), run());
    }
}
