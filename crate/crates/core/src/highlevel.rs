//! End-to-end orchestration: enumerate candidate goal orders, build a lead
//! per order, run the layer-guided planner, and stop at the first order whose
//! plan reaches non-negative robustness. Also hosts the re-simulation and
//! offline-robustness verification used to cross-check returned plans.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::dynamics::propagate;
use crate::geolead::{build_lead, GeoleadError};
use crate::geometry::Point;
use crate::kinoplanner::{
    deadline_cutoff_for, MetricSample, PlanResult, RunConfig, SstPlanner, TrajPoint, TreeSnapshot,
};
use crate::monitor::MonitorTemplate;
use crate::stl::{boolean_sat, robustness, EvalError, Trace, TraceError};
use crate::taskplan::{candidate_plans, PlanOrder, TaskPlanError};
use crate::world::scenario::Scenario;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    TaskPlan(#[from] TaskPlanError),
    #[error("monitor template: {0}")]
    Monitor(#[from] crate::monitor::MonitorError),
}

/// Outcome of one candidate order attempt.
#[derive(Debug)]
pub struct OrderOutcome {
    pub order: PlanOrder,
    /// Lead construction failure, when the geometric stage failed.
    pub lead_error: Option<GeoleadError>,
    pub result: Option<PlanResult>,
    /// Tree snapshot, when requested via `SolveOptions::capture_tree`.
    pub snapshot: Option<TreeSnapshot>,
    pub wall_s: f64,
}

#[derive(Debug)]
pub struct SolveReport {
    pub orders: Vec<OrderOutcome>,
    /// Index into `orders` of the first satisfying attempt.
    pub winner: Option<usize>,
    pub wall_s: f64,
}

impl SolveReport {
    pub fn winning_result(&self) -> Option<&PlanResult> {
        self.winner
            .and_then(|i| self.orders[i].result.as_ref())
            .filter(|r| r.satisfied)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub seed: u64,
    /// Total wall budget across orders; `None` bounds each order by the
    /// scenario's iteration budget only, keeping the run deterministic.
    pub wall_budget: Option<Duration>,
    pub whole_tree_selection: bool,
    /// Keep a tree snapshot per attempted order (debug dumps).
    pub capture_tree: bool,
}

impl SolveOptions {
    pub fn from_scenario(scenario: &Scenario) -> Self {
        SolveOptions {
            seed: scenario.seed,
            wall_budget: None,
            whole_tree_selection: false,
            capture_tree: false,
        }
    }
}

// Planner RNG streams are decoupled from the lead's per-leg streams.
const PLANNER_SEED_SALT: u64 = 0x9e3779b97f4a7c15;

/// Iterate candidate orders, splitting any remaining wall budget evenly over
/// the rest of the current sweep (unused time rolls forward). Attempt `i`
/// tries order `i mod m` with seed `scenario seed + i`; hopeless attempts end
/// at the deadline cutoff, and with a wall budget the sweep restarts with
/// fresh seeds until time runs out. Without a wall budget exactly one sweep
/// runs, keeping the call deterministic.
pub fn solve(scenario: &Scenario, options: &SolveOptions) -> Result<SolveReport, SolveError> {
    let template = MonitorTemplate::new(&scenario.formula)?;
    let orders = candidate_plans(&scenario.fragment, scenario.planner.plan_cap)?;
    let cutoff = deadline_cutoff_for(scenario);
    let started = Instant::now();

    let mut report = SolveReport { orders: Vec::new(), winner: None, wall_s: 0.0 };
    let total = orders.len();
    let mut attempt = 0usize;
    loop {
        match options.wall_budget {
            None => {
                if attempt >= total {
                    break;
                }
            }
            Some(budget) => {
                if started.elapsed() >= budget {
                    break;
                }
            }
        }
        let sweep_pos = attempt % total;
        let order = orders[sweep_pos].clone();
        let attempt_started = Instant::now();
        let attempt_seed = options.seed.wrapping_add(attempt as u64);
        let attempt_budget = options.wall_budget.map(|budget| {
            let remaining = budget.saturating_sub(started.elapsed());
            remaining / (total - sweep_pos) as u32
        });

        let lead = match build_lead(
            &order,
            &scenario.fragment,
            &scenario.workspace,
            scenario.start.position(),
            &scenario.planner,
            attempt_seed,
        ) {
            Ok(lead) => lead,
            Err(err) => {
                report.orders.push(OrderOutcome {
                    order,
                    lead_error: Some(err),
                    result: None,
                    snapshot: None,
                    wall_s: attempt_started.elapsed().as_secs_f64(),
                });
                attempt += 1;
                continue;
            }
        };

        let last_goal = scenario.fragment.goal(*order.last().expect("order is nonempty"));
        let mut planner = SstPlanner::new_with_lead(
            scenario,
            &template,
            &lead,
            Point::new(last_goal.center.0, last_goal.center.1),
            last_goal.radius,
            attempt_seed ^ PLANNER_SEED_SALT,
        );
        let config = RunConfig {
            max_iters: scenario.planner.n_max,
            wall_budget: attempt_budget,
            stop_on_satisfied: true,
            metric_stride: 1000,
            whole_tree_selection: options.whole_tree_selection,
            deadline_cutoff: cutoff,
        };
        let result = planner.run(&config);
        let satisfied = result.satisfied;
        let snapshot = options.capture_tree.then(|| planner.snapshot());
        report.orders.push(OrderOutcome {
            order,
            lead_error: None,
            result: Some(result),
            snapshot,
            wall_s: attempt_started.elapsed().as_secs_f64(),
        });
        if satisfied {
            report.winner = Some(report.orders.len() - 1);
            break;
        }
        attempt += 1;
    }
    report.wall_s = started.elapsed().as_secs_f64();
    Ok(report)
}

/// Single baseline run under the same stopping rule as `solve`.
pub fn solve_baseline(
    scenario: &Scenario,
    options: &SolveOptions,
) -> Result<PlanResult, SolveError> {
    solve_baseline_with_tree(scenario, options).map(|(result, _)| result)
}

/// Like `solve`, the baseline retries with fresh seeds while wall budget
/// remains (attempt `i` uses seed `scenario seed + i`); metrics accumulate
/// across attempts so the reported state count is the total work done.
pub fn solve_baseline_with_tree(
    scenario: &Scenario,
    options: &SolveOptions,
) -> Result<(PlanResult, Option<TreeSnapshot>), SolveError> {
    let template = MonitorTemplate::new(&scenario.formula)?;
    let cutoff = deadline_cutoff_for(scenario);
    let started = Instant::now();

    let mut merged: Vec<MetricSample> = Vec::new();
    let mut iter_offset = 0u64;
    let mut state_offset = 0usize;
    let mut wall_offset = 0.0f64;
    let mut running_best = f64::INFINITY;
    let mut any_satisfied = false;
    let mut attempt = 0u64;
    loop {
        let attempt_budget = match options.wall_budget {
            None => None,
            Some(budget) => Some(budget.saturating_sub(started.elapsed())),
        };
        let mut planner = SstPlanner::new_baseline(
            scenario,
            &template,
            options.seed.wrapping_add(attempt) ^ PLANNER_SEED_SALT,
        );
        let config = RunConfig {
            max_iters: scenario.planner.n_max,
            wall_budget: attempt_budget,
            stop_on_satisfied: true,
            metric_stride: 1000,
            whole_tree_selection: false,
            deadline_cutoff: cutoff,
        };
        let mut result = planner.run(&config);
        for m in &result.metrics {
            running_best = running_best.min(m.best_cost);
            any_satisfied |= m.satisfied;
            merged.push(MetricSample {
                iteration: iter_offset + m.iteration,
                wall_s: wall_offset + m.wall_s,
                best_cost: running_best,
                states: state_offset + m.states,
                satisfied: any_satisfied,
            });
        }
        iter_offset += result.iterations;
        state_offset += result.states;
        wall_offset = started.elapsed().as_secs_f64();

        let done = result.satisfied
            || options.wall_budget.is_none()
            || options
                .wall_budget
                .is_some_and(|budget| started.elapsed() >= budget);
        if done {
            let snapshot = options.capture_tree.then(|| planner.snapshot());
            result.metrics = merged;
            result.states = state_offset;
            result.iterations = iter_offset;
            return Ok((result, snapshot));
        }
        attempt += 1;
    }
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("trajectory is empty")]
    Empty,
    #[error("trajectory does not start at the scenario's initial state")]
    WrongStart,
    #[error("re-simulated state diverges from the stored trajectory at t={t} by {error}")]
    Diverged { t: f64, error: f64 },
    #[error("trace: {0}")]
    Trace(#[from] TraceError),
    #[error("robustness: {0}")]
    Eval(#[from] EvalError),
}

/// Re-simulate a trajectory's control sequence from the scenario's initial
/// state and return the substep-resolution trace of (x, y, theta) samples.
pub fn resimulate(scenario: &Scenario, trajectory: &[TrajPoint]) -> Result<Trace, VerifyError> {
    let first = trajectory.first().ok_or(VerifyError::Empty)?;
    let start = scenario.start;
    if first.state != start || first.t != 0.0 {
        return Err(VerifyError::WrongStart);
    }

    let mut samples: Vec<(f64, Vec<f64>)> = vec![(0.0, start.as_vec().to_vec())];
    let mut state = start;
    for pair in trajectory.windows(2) {
        let control = pair[0].control.expect("interior points carry controls");
        let duration = pair[1].t - pair[0].t;
        let prop = propagate(&state, &control, duration, scenario.dynamics.dt, scenario.dynamics.wheelbase);
        for (tau, st) in &prop.steps[1..] {
            samples.push((pair[0].t + tau, st.as_vec().to_vec()));
        }
        state = prop.final_state();
        let stored = pair[1].state;
        let error = ((state.x - stored.x).powi(2)
            + (state.y - stored.y).powi(2)
            + (state.theta - stored.theta).powi(2))
        .sqrt();
        if error > 1e-9 {
            return Err(VerifyError::Diverged { t: pair[1].t, error });
        }
    }
    Ok(Trace::new(samples)?)
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOutcome {
    pub rho: f64,
    pub boolean: bool,
}

/// Offline robustness and Boolean satisfaction of the mission formula over a
/// re-simulated trajectory.
pub fn verify_trajectory(
    scenario: &Scenario,
    trajectory: &[TrajPoint],
) -> Result<VerifyOutcome, VerifyError> {
    let trace = resimulate(scenario, trajectory)?;
    let rho = robustness(&trace, &scenario.formula, 0.0)?;
    let boolean = boolean_sat(&trace, &scenario.formula, 0.0);
    Ok(VerifyOutcome { rho, boolean })
}

/// Serialize a trajectory as rows of `t x y theta v delta` (tab-free, space
/// separated; the final row repeats zeros for the unused control fields).
pub fn trajectory_to_string(trajectory: &[TrajPoint]) -> String {
    let mut out = String::new();
    for point in trajectory {
        let (v, delta) = point.control.map(|c| (c.v, c.delta)).unwrap_or((0.0, 0.0));
        out.push_str(&format!(
            "{} {} {} {} {} {}\n",
            point.t, point.state.x, point.state.y, point.state.theta, v, delta
        ));
    }
    out
}

/// Parse the trajectory format written by [`trajectory_to_string`].
pub fn trajectory_from_str(text: &str) -> Result<Vec<TrajPoint>, String> {
    use crate::dynamics::{CarControl, CarState};
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<f64> = line
            .split_whitespace()
            .map(|f| f.parse::<f64>().map_err(|e| format!("line {}: {e}", lineno + 1)))
            .collect::<Result<_, _>>()?;
        if fields.len() != 6 {
            return Err(format!("line {}: expected 6 fields, got {}", lineno + 1, fields.len()));
        }
        rows.push((fields[0], fields[1], fields[2], fields[3], fields[4], fields[5]));
    }
    let n = rows.len();
    Ok(rows
        .into_iter()
        .enumerate()
        .map(|(k, (t, x, y, theta, v, delta))| TrajPoint {
            t,
            state: CarState { x, y, theta },
            control: (k + 1 < n).then_some(CarControl { v, delta }),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(formula: &str) -> Scenario {
        let text = format!(
            r#"
schema = 1
seed = 5
formula = "{formula}"

[start]
x = 0.5
y = 0.5
theta = 0.0

[workspace]
x_min = 0.0
x_max = 12.0
y_min = 0.0
y_max = 8.0
"#
        );
        Scenario::from_str_named(&text, "hl").unwrap()
    }

    #[test]
    fn start_inside_goal_wins_on_order_zero() {
        let sc = scenario("F(dist(x,y; 0.5,0.5) <= 0.3)");
        let report = solve(&sc, &SolveOptions::from_scenario(&sc)).unwrap();
        assert_eq!(report.winner, Some(0));
        let result = report.winning_result().unwrap();
        assert_eq!(result.trajectory.len(), 1);
        assert_eq!(result.best_cost, 0.0);
    }

    #[test]
    fn winner_survives_offline_verification() {
        let sc = scenario("F(dist(x,y; 4,2) <= 0.3)");
        let report = solve(&sc, &SolveOptions::from_scenario(&sc)).unwrap();
        let result = report.winning_result().expect("solvable scenario");
        let outcome = verify_trajectory(&sc, &result.trajectory).unwrap();
        assert!(outcome.rho >= 0.0, "offline robustness {} < 0", outcome.rho);
        assert!(outcome.boolean);
    }

    #[test]
    fn unreachable_goals_produce_no_winner() {
        // Goal fenced in by walls on every side.
        let text = r#"
schema = 1
seed = 5
formula = "F(dist(x,y; 6,4) <= 0.3)"

[start]
x = 0.5
y = 0.5
theta = 0.0

[workspace]
x_min = 0.0
x_max = 12.0
y_min = 0.0
y_max = 8.0

[[workspace.obstacles]]
vertices = [[5.0, 3.0], [7.0, 3.0], [7.0, 3.4], [5.0, 3.4]]

[[workspace.obstacles]]
vertices = [[5.0, 4.6], [7.0, 4.6], [7.0, 5.0], [5.0, 5.0]]

[[workspace.obstacles]]
vertices = [[5.0, 3.4], [5.4, 3.4], [5.4, 4.6], [5.0, 4.6]]

[[workspace.obstacles]]
vertices = [[6.6, 3.4], [7.0, 3.4], [7.0, 4.6], [6.6, 4.6]]

[planner]
rrt_iters = 600
n_max = 4000
"#;
        let sc = Scenario::from_str_named(text, "walled").unwrap();
        let report = solve(&sc, &SolveOptions::from_scenario(&sc)).unwrap();
        assert!(report.winner.is_none());
        assert_eq!(report.orders.len(), 1);
        let outcome = &report.orders[0];
        assert!(
            outcome.lead_error.is_some()
                || !outcome.result.as_ref().map(|r| r.satisfied).unwrap_or(false)
        );
    }

    #[test]
    fn solve_is_deterministic() {
        let sc = scenario("F(dist(x,y; 3,2) <= 0.3)");
        let opts = SolveOptions::from_scenario(&sc);
        let a = solve(&sc, &opts).unwrap();
        let b = solve(&sc, &opts).unwrap();
        assert_eq!(a.winner, b.winner);
        let (ra, rb) = (a.winning_result().unwrap(), b.winning_result().unwrap());
        assert_eq!(ra.trajectory, rb.trajectory);
        assert_eq!(ra.states, rb.states);
    }

    #[test]
    fn trajectory_round_trips_through_text() {
        let sc = scenario("F(dist(x,y; 3,2) <= 0.3)");
        let report = solve(&sc, &SolveOptions::from_scenario(&sc)).unwrap();
        let traj = &report.winning_result().unwrap().trajectory;
        let text = trajectory_to_string(traj);
        let parsed = trajectory_from_str(&text).unwrap();
        assert_eq!(&parsed, traj);
    }
}
