//! Scenario files: a versioned, human-readable TOML document holding the
//! workspace, the mission formula, and all dynamics/planner parameters.
//! Distances are meters, times seconds, angles radians. See
//! `docs/scenario-format.md` for the schema.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{CarState, DynamicsParams};
use crate::geometry::Point;
use crate::kinoplanner::PlannerParams;
use crate::stl::{extract_fragment, parse_formula, Formula, FragmentSpec};
use crate::world::{Bounds, ConvexPolygon, GoalRegion, WorldError, Workspace};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("scenario parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unsupported schema version {found} (expected {SCHEMA_VERSION})")]
    SchemaVersion { found: u32 },
    #[error("formula: {0}")]
    Formula(#[from] crate::stl::ParseError),
    #[error("formula: {0}")]
    Fragment(#[from] crate::stl::FragmentError),
    #[error("workspace: {0}")]
    World(#[from] WorldError),
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid { field: field.to_string(), message: message.into() }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawScenario {
    schema: u32,
    name: Option<String>,
    #[serde(default)]
    seed: u64,
    formula: String,
    start: RawStart,
    workspace: RawWorkspace,
    #[serde(default)]
    dynamics: RawDynamics,
    #[serde(default)]
    planner: RawPlanner,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawStart {
    x: f64,
    y: f64,
    #[serde(default)]
    theta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawWorkspace {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    #[serde(default)]
    obstacles: Vec<RawObstacle>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawObstacle {
    vertices: Vec<[f64; 2]>,
    /// Marks obstacle geometry authored for this artifact rather than taken
    /// from a published map.
    #[serde(default)]
    reconstructed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
struct RawDynamics {
    wheelbase: f64,
    v_min: f64,
    v_max: f64,
    delta_max: f64,
    dt: f64,
}

impl Default for RawDynamics {
    fn default() -> Self {
        RawDynamics { wheelbase: 0.3, v_min: 0.0, v_max: 2.0, delta_max: 0.5, dt: 0.05 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
struct RawPlanner {
    s_r: f64,
    r_prop: f64,
    t_max: f64,
    n_max: u64,
    budget_s: f64,
    delta_v: f64,
    delta_s: f64,
    theta_weight: f64,
    time_weight: f64,
    rrt_iters: u32,
    rrt_step: f64,
    rrt_goal_bias: f64,
    plan_cap: usize,
}

impl Default for RawPlanner {
    fn default() -> Self {
        RawPlanner {
            s_r: 1.0,
            r_prop: 1.5,
            t_max: 1.0,
            n_max: 1_000_000,
            budget_s: 60.0,
            delta_v: 0.5,
            delta_s: 0.25,
            theta_weight: 0.3,
            time_weight: 0.1,
            rrt_iters: 5000,
            rrt_step: 0.5,
            rrt_goal_bias: 0.05,
            plan_cap: 8,
        }
    }
}

/// A fully validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub formula_text: String,
    pub formula: Formula,
    pub fragment: FragmentSpec,
    pub workspace: Workspace,
    pub start: CarState,
    pub dynamics: DynamicsParams,
    pub planner: PlannerParams,
    /// Whether any obstacle carries the `reconstructed` marker.
    pub reconstructed_obstacles: bool,
}

impl Scenario {
    pub fn load(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let default_name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".to_string());
        Scenario::from_str_named(&text, &default_name)
    }

    pub fn from_str_named(text: &str, default_name: &str) -> Result<Scenario, ScenarioError> {
        let raw: RawScenario = toml::from_str(text)?;
        if raw.schema != SCHEMA_VERSION {
            return Err(ScenarioError::SchemaVersion { found: raw.schema });
        }

        let formula = parse_formula(&raw.formula)?;
        let fragment = extract_fragment(&formula)?;

        let bounds = Bounds {
            x_min: raw.workspace.x_min,
            x_max: raw.workspace.x_max,
            y_min: raw.workspace.y_min,
            y_max: raw.workspace.y_max,
        };
        let reconstructed_obstacles = raw.workspace.obstacles.iter().any(|o| o.reconstructed);
        let obstacles = raw
            .workspace
            .obstacles
            .iter()
            .map(|o| ConvexPolygon::new(o.vertices.iter().map(|v| Point::new(v[0], v[1])).collect()))
            .collect::<Result<Vec<_>, _>>()?;
        let workspace = Workspace::new(bounds, obstacles)?;

        let d = &raw.dynamics;
        if !(d.wheelbase > 0.0) {
            return Err(invalid("dynamics.wheelbase", "must be positive"));
        }
        if !(d.v_max > 0.0) || d.v_min > d.v_max {
            return Err(invalid("dynamics.v_min/v_max", "need v_min <= v_max and v_max > 0"));
        }
        if !(d.delta_max > 0.0 && d.delta_max < std::f64::consts::FRAC_PI_2) {
            return Err(invalid("dynamics.delta_max", "must lie in (0, pi/2)"));
        }
        if !(d.dt > 0.0) {
            return Err(invalid("dynamics.dt", "must be positive"));
        }
        let dynamics = DynamicsParams {
            wheelbase: d.wheelbase,
            v_min: d.v_min,
            v_max: d.v_max,
            delta_max: d.delta_max,
            dt: d.dt,
        };

        let p = &raw.planner;
        for (field, value) in [
            ("planner.s_r", p.s_r),
            ("planner.r_prop", p.r_prop),
            ("planner.t_max", p.t_max),
            ("planner.budget_s", p.budget_s),
            ("planner.delta_v", p.delta_v),
            ("planner.delta_s", p.delta_s),
            ("planner.theta_weight", p.theta_weight),
            ("planner.time_weight", p.time_weight),
            ("planner.rrt_step", p.rrt_step),
            ("planner.rrt_goal_bias", p.rrt_goal_bias),
        ] {
            if !(value > 0.0) {
                return Err(invalid(field, "must be positive"));
            }
        }
        if p.n_max == 0 || p.rrt_iters == 0 || p.plan_cap == 0 {
            return Err(invalid("planner", "iteration counts must be positive"));
        }
        if !(p.delta_s < p.delta_v) {
            return Err(invalid("planner.delta_s", "must be strictly smaller than delta_v"));
        }
        if d.dt > p.t_max {
            return Err(invalid("dynamics.dt", "must not exceed planner.t_max"));
        }
        // A propagation longer than the narrowest deadline window could step
        // across it entirely; the monitor folds at integrator substeps, so the
        // binding constraint is on t_max at scenario level.
        let min_width = fragment
            .bounded
            .iter()
            .map(|g| g.interval.width())
            .fold(f64::INFINITY, f64::min);
        if p.t_max > min_width {
            return Err(invalid(
                "planner.t_max",
                format!("must not exceed the narrowest goal window ({min_width} s)"),
            ));
        }
        let planner = PlannerParams {
            s_r: p.s_r,
            r_prop: p.r_prop,
            t_max: p.t_max,
            n_max: p.n_max,
            budget_s: p.budget_s,
            delta_v: p.delta_v,
            delta_s: p.delta_s,
            theta_weight: p.theta_weight,
            time_weight: p.time_weight,
            rrt_iters: p.rrt_iters,
            rrt_step: p.rrt_step,
            rrt_goal_bias: p.rrt_goal_bias,
            plan_cap: p.plan_cap,
        };

        let start_point = Point::new(raw.start.x, raw.start.y);
        if !workspace.point_free(start_point) {
            return Err(invalid("start", "initial position is not in free space"));
        }
        let start = CarState::new(raw.start.x, raw.start.y, raw.start.theta);

        for (i, goal) in fragment.goals().enumerate() {
            let c = Point::new(goal.center.0, goal.center.1);
            let b = workspace.bounds();
            if c.x - goal.radius < b.x_min
                || c.x + goal.radius > b.x_max
                || c.y - goal.radius < b.y_min
                || c.y + goal.radius > b.y_max
            {
                return Err(invalid(
                    &format!("formula goal {i}"),
                    "goal disk leaves the workspace bounds",
                ));
            }
            for (j, obstacle) in workspace.obstacles().iter().enumerate() {
                if obstacle.distance(c) <= goal.radius {
                    return Err(invalid(
                        &format!("formula goal {i}"),
                        format!("goal disk intersects obstacle {j}"),
                    ));
                }
            }
        }

        Ok(Scenario {
            name: raw.name.unwrap_or_else(|| default_name.to_string()),
            seed: raw.seed,
            formula_text: raw.formula.clone(),
            formula,
            fragment,
            workspace,
            start,
            dynamics,
            planner,
            reconstructed_obstacles,
        })
    }

    /// Goal regions in fragment order (bounded goals first).
    pub fn goal_regions(&self) -> Vec<GoalRegion> {
        self.fragment
            .goals()
            .map(|g| GoalRegion {
                center: Point::new(g.center.0, g.center.1),
                radius: g.radius,
                interval: g.interval,
            })
            .collect()
    }

    /// Non-fatal advisory findings (`r_prop >= s_r` is recommended).
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.planner.r_prop < self.planner.s_r {
            out.push(format!(
                "planner.r_prop ({}) is smaller than planner.s_r ({}); samples may be unreachable",
                self.planner.r_prop, self.planner.s_r
            ));
        }
        out
    }

    /// Human-readable summary used by `lgsst validate`.
    pub fn pretty(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let b = self.workspace.bounds();
        let _ = writeln!(s, "scenario {} (schema {SCHEMA_VERSION})", self.name);
        let _ = writeln!(s, "  seed: {}", self.seed);
        let _ = writeln!(
            s,
            "  workspace: [{}, {}] x [{}, {}] m, {} obstacle(s)",
            b.x_min,
            b.x_max,
            b.y_min,
            b.y_max,
            self.workspace.obstacles().len()
        );
        let _ = writeln!(
            s,
            "  start: ({}, {}, {} rad)",
            self.start.x, self.start.y, self.start.theta
        );
        let _ = writeln!(s, "  formula: {}", self.formula);
        for (i, g) in self.fragment.goals().enumerate() {
            let window = if g.interval.is_unbounded() {
                "[0,inf)".to_string()
            } else {
                format!("[{},{}]", g.interval.start(), g.interval.end())
            };
            let _ = writeln!(
                s,
                "  goal {i}: disk(({}, {}), r={}) in {window}",
                g.center.0, g.center.1, g.radius
            );
        }
        let d = &self.dynamics;
        let _ = writeln!(
            s,
            "  dynamics: L={} m, v in [{}, {}] m/s, |delta| <= {} rad, dt={} s",
            d.wheelbase, d.v_min, d.v_max, d.delta_max, d.dt
        );
        let p = &self.planner;
        let _ = writeln!(
            s,
            "  planner: s_r={}, r_prop={}, t_max={}, n_max={}, budget={} s, delta_v={}, delta_s={}",
            p.s_r, p.r_prop, p.t_max, p.n_max, p.budget_s, p.delta_v, p.delta_s
        );
        s
    }
}
