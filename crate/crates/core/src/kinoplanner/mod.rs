//! Sparse-tree kinodynamic planners minimizing the mission's STL cost.
//!
//! Two planners share one engine. The layer-guided planner samples inside a
//! tube around the lead path, selects parents from layers adjacent to the
//! sampled layer, and gates accepted nodes on lead proximity (`r_prop`) and
//! layer adjacency. The baseline samples the whole free space with no lead,
//! no layers, and no proximity gate. Both use the same witness-based
//! sparsification: a new node is kept only if its witness cell has no
//! representative yet or the new node beats the representative.
//!
//! Node cost is the monitor's `J = -min(partial robustness, 0)`, which
//! plateaus at zero wherever no deadline is currently violated. Plain
//! lowest-cost replacement would freeze arrival times there, so replacement
//! and best-node tracking rank nodes by (goal reached, cost, arrival time).

mod grid;

pub use grid::{weighted_dist, StateGrid};

use std::time::{Duration, Instant};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dynamics::{propagate, sample_control, sample_duration, CarControl, CarState};
use crate::geolead::LeadPath;
use crate::geometry::Point;
use crate::monitor::{Annotation, MonitorTemplate};
use crate::world::scenario::Scenario;

/// Planner knobs carried by the scenario file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannerParams {
    /// Sampler tube radius around the lead, meters.
    pub s_r: f64,
    /// Maximum allowed deviation of accepted nodes from the lead, meters.
    pub r_prop: f64,
    /// Maximum propagation duration, seconds.
    pub t_max: f64,
    /// Iteration budget.
    pub n_max: u64,
    /// Wall-clock budget, seconds.
    pub budget_s: f64,
    /// Best-near selection radius, meters (weighted metric).
    pub delta_v: f64,
    /// Witness pruning radius, meters (weighted metric); must be < delta_v.
    pub delta_s: f64,
    /// Heading weight in the state metric, meters per radian.
    pub theta_weight: f64,
    /// Arrival-time weight in the witness metric, meters per second. Keeps
    /// sparsification from freezing the time frontier on plateaued costs.
    pub time_weight: f64,
    /// RRT* iterations per lead leg.
    pub rrt_iters: u32,
    /// RRT* steering step, meters.
    pub rrt_step: f64,
    /// RRT* goal-sampling probability.
    pub rrt_goal_bias: f64,
    /// Candidate-plan count guard (max goals before n! refusal).
    pub plan_cap: usize,
}

impl PlannerParams {
    /// Defaults mirroring the scenario-file defaults; for unit tests.
    pub fn default_for_tests() -> Self {
        PlannerParams {
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

/// Per-run execution limits and switches.
#[derive(Debug, Clone, Copy)]
pub struct RunConfig {
    pub max_iters: u64,
    /// Wall-clock cut; `None` keeps the run fully deterministic.
    pub wall_budget: Option<Duration>,
    /// Return at the first goal-reaching node instead of planning anytime.
    pub stop_on_satisfied: bool,
    /// Metric sampling stride in iterations.
    pub metric_stride: u64,
    /// Select parents with the literal whole-tree nearest-neighbor rule
    /// instead of layer-adjacent best-near.
    pub whole_tree_selection: bool,
    /// End the run once the newest accepted node's time exceeds this and no
    /// goal node exists: every deadline window has closed, so the attempt is
    /// hopeless. `None` disables the cutoff (pure reach missions).
    pub deadline_cutoff: Option<f64>,
}

impl RunConfig {
    pub fn from_params(params: &PlannerParams, deterministic: bool) -> Self {
        RunConfig {
            max_iters: params.n_max,
            wall_budget: if deterministic {
                None
            } else {
                Some(Duration::from_secs_f64(params.budget_s))
            },
            stop_on_satisfied: false,
            metric_stride: 1000,
            whole_tree_selection: false,
            deadline_cutoff: None,
        }
    }
}

/// Cutoff time after which an unsatisfied run cannot recover: the last
/// deadline plus a propagation's worth of slack.
pub fn deadline_cutoff_for(scenario: &Scenario) -> Option<f64> {
    let last_deadline = scenario
        .fragment
        .bounded
        .iter()
        .map(|g| g.interval.end())
        .fold(f64::NEG_INFINITY, f64::max);
    (last_deadline.is_finite()).then(|| last_deadline + 2.0 * scenario.planner.t_max)
}

/// One point of a returned trajectory. `control` is the input applied from
/// this point until the next one (`None` on the final point).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajPoint {
    pub t: f64,
    pub state: CarState,
    pub control: Option<CarControl>,
}

/// One sample of the planner's progress series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricSample {
    pub iteration: u64,
    pub wall_s: f64,
    pub best_cost: f64,
    pub states: usize,
    pub satisfied: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanResult {
    pub trajectory: Vec<TrajPoint>,
    /// Folded partial robustness at the best node (`None` when every window
    /// is still unobserved).
    pub fold: Option<f64>,
    pub satisfied: bool,
    pub best_cost: f64,
    pub metrics: Vec<MetricSample>,
    /// Final number of states in the graph.
    pub states: usize,
    pub iterations: u64,
}

#[derive(Debug, Clone)]
struct Node {
    state: CarState,
    t: f64,
    parent: Option<u32>,
    control: Option<CarControl>,
    duration: f64,
    layer: usize,
    ann: Annotation,
    cost: f64,
    active: bool,
    pruned: bool,
    children: u32,
    protected: bool,
    witness: u32,
}

struct Witness {
    location: grid::GridPoint,
    rep: u32,
}

#[derive(Debug, Clone, Copy)]
struct Best {
    id: u32,
    satisfied: bool,
    cost: f64,
    t: f64,
}

enum Guidance<'a> {
    Lead { lead: &'a LeadPath, last_goal_center: Point, last_goal_radius: f64 },
    Uniform,
}

/// Findings of a post-run structural audit.
#[derive(Debug, Default)]
pub struct AuditReport {
    pub nodes_checked: usize,
    pub witnesses_checked: usize,
    pub violations: Vec<String>,
}

impl AuditReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

pub struct SstPlanner<'a> {
    scenario: &'a Scenario,
    template: &'a MonitorTemplate,
    guidance: Guidance<'a>,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
    free: Vec<u32>,
    witnesses: Vec<Witness>,
    node_grid: StateGrid,
    witness_grid: StateGrid,
    /// Active node ids per layer (one bucket for the baseline); entries are
    /// filtered lazily on scan.
    active_by_layer: Vec<Vec<u32>>,
    best: Best,
    metrics: Vec<MetricSample>,
    iterations: u64,
    max_accepted_t: f64,
}

impl<'a> SstPlanner<'a> {
    /// Layer-guided planner over a lead; `last_goal_*` identify the final
    /// region of the candidate order.
    pub fn new_with_lead(
        scenario: &'a Scenario,
        template: &'a MonitorTemplate,
        lead: &'a LeadPath,
        last_goal_center: Point,
        last_goal_radius: f64,
        seed: u64,
    ) -> Self {
        let layers = lead.layer_count();
        Self::init(
            scenario,
            template,
            Guidance::Lead { lead, last_goal_center, last_goal_radius },
            layers,
            seed,
        )
    }

    /// Baseline planner: uniform sampling, no lead, no layers.
    pub fn new_baseline(scenario: &'a Scenario, template: &'a MonitorTemplate, seed: u64) -> Self {
        Self::init(scenario, template, Guidance::Uniform, 1, seed)
    }

    fn init(
        scenario: &'a Scenario,
        template: &'a MonitorTemplate,
        guidance: Guidance<'a>,
        layers: usize,
        seed: u64,
    ) -> Self {
        let params = scenario.planner;
        let cell = params.delta_v.max(params.delta_s);
        let start = scenario.start;
        let root_layer = match &guidance {
            Guidance::Lead { lead, .. } => lead.layer_assign(start.position()),
            Guidance::Uniform => 0,
        };
        let root_ann = template.annotate_root(&start.as_vec(), 0.0);
        let root_cost = template.node_cost(&root_ann);
        let root = Node {
            state: start,
            t: 0.0,
            parent: None,
            control: None,
            duration: 0.0,
            layer: root_layer,
            ann: root_ann,
            cost: root_cost,
            active: true,
            pruned: false,
            children: 0,
            protected: true,
            witness: 0,
        };

        let mut planner = SstPlanner {
            scenario,
            template,
            guidance,
            rng: ChaCha8Rng::seed_from_u64(seed),
            nodes: vec![root],
            free: Vec::new(),
            witnesses: Vec::new(),
            node_grid: StateGrid::new(cell, params.theta_weight, 0.0),
            witness_grid: StateGrid::new(cell, params.theta_weight, params.time_weight),
            active_by_layer: vec![Vec::new(); layers],
            best: Best { id: 0, satisfied: false, cost: root_cost, t: 0.0 },
            metrics: Vec::new(),
            iterations: 0,
            max_accepted_t: 0.0,
        };
        let root_coords = (start.x, start.y, start.theta, 0.0);
        planner.node_grid.insert(root_coords, 0);
        let bucket = root_layer.min(layers - 1);
        planner.active_by_layer[bucket].push(0);
        planner.witnesses.push(Witness { location: root_coords, rep: 0 });
        planner.witness_grid.insert(root_coords, 0);
        planner.best.satisfied = planner.is_goal_node(0);
        planner
    }

    /// Whether a node counts as reaching the mission goal: the monitor is
    /// satisfied, and (for the lead planner) the node sits in the final layer
    /// inside the last ordered goal disk.
    fn is_goal_node(&self, id: u32) -> bool {
        let node = &self.nodes[id as usize];
        self.goal_test(&node.ann, node.layer, node.state.position())
    }

    fn goal_test(&self, ann: &Annotation, layer: usize, pos: Point) -> bool {
        if !self.template.is_satisfied(ann) {
            return false;
        }
        match &self.guidance {
            Guidance::Lead { lead, last_goal_center, last_goal_radius } => {
                layer == lead.layer_count() - 1 && pos.dist(*last_goal_center) <= *last_goal_radius
            }
            Guidance::Uniform => true,
        }
    }

    /// Run the planner; anytime unless `stop_on_satisfied`.
    pub fn run(&mut self, config: &RunConfig) -> PlanResult {
        let started = Instant::now();
        self.record_metric(started);
        for i in 1..=config.max_iters {
            if let Some(budget) = config.wall_budget {
                if started.elapsed() >= budget {
                    break;
                }
            }
            self.iterations = i;
            let improved = self.iterate(config.whole_tree_selection);
            if improved || i % config.metric_stride == 0 {
                self.record_metric(started);
            }
            if config.stop_on_satisfied && self.best.satisfied {
                break;
            }
            if let Some(cutoff) = config.deadline_cutoff {
                if !self.best.satisfied && self.max_accepted_t > cutoff {
                    break;
                }
            }
        }
        self.record_metric(started);
        self.result()
    }

    /// The anytime result so far.
    pub fn result(&self) -> PlanResult {
        let best_node = &self.nodes[self.best.id as usize];
        PlanResult {
            trajectory: self.reconstruct(self.best.id),
            fold: self.template.fold(&best_node.ann).value(),
            satisfied: self.best.satisfied,
            best_cost: self.best.cost,
            metrics: self.metrics.clone(),
            states: self.states(),
            iterations: self.iterations,
        }
    }

    /// Number of states currently in the graph.
    pub fn states(&self) -> usize {
        self.nodes.len() - self.free.len()
    }

    fn record_metric(&mut self, started: Instant) {
        let sample = MetricSample {
            iteration: self.iterations,
            wall_s: started.elapsed().as_secs_f64(),
            best_cost: self.best.cost,
            states: self.states(),
            satisfied: self.best.satisfied,
        };
        if let Some(last) = self.metrics.last() {
            if last.iteration == sample.iteration
                && last.best_cost == sample.best_cost
                && last.states == sample.states
            {
                return;
            }
        }
        self.metrics.push(sample);
    }

    /// One planner iteration; true when the best node improved.
    fn iterate(&mut self, whole_tree: bool) -> bool {
        let scenario = self.scenario;
        let params = scenario.planner;
        let dynamics = scenario.dynamics;
        let workspace = &scenario.workspace;
        let template = self.template;
        let lead_opt: Option<&'a LeadPath> = match &self.guidance {
            Guidance::Lead { lead, .. } => Some(lead),
            Guidance::Uniform => None,
        };

        // Sample a layer and a state near it (uniform over free space for
        // the baseline), with a uniform heading.
        let (layer_rand, sample_xy) = match lead_opt {
            Some(lead) => {
                let layer = self.rng.random_range(0..lead.layer_count());
                match lead.sample_near_layer(layer, params.s_r, workspace, &mut self.rng) {
                    Ok(p) => (layer, p),
                    Err(_) => return false,
                }
            }
            None => {
                let bounds = workspace.bounds();
                let mut found = None;
                for _ in 0..1000 {
                    let p = Point::new(
                        self.rng.random_range(bounds.x_min..=bounds.x_max),
                        self.rng.random_range(bounds.y_min..=bounds.y_max),
                    );
                    if workspace.point_free(p) {
                        found = Some(p);
                        break;
                    }
                }
                match found {
                    Some(p) => (0, p),
                    None => return false,
                }
            }
        };
        let theta_rand = self
            .rng
            .random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let sample = (sample_xy.x, sample_xy.y, theta_rand, 0.0);

        let near_id = match self.select(sample, layer_rand, whole_tree) {
            Some(id) => id,
            None => return false,
        };

        let control = sample_control(&mut self.rng, &dynamics);
        let duration = sample_duration(&mut self.rng, params.t_max);
        if duration <= 1e-12 {
            return false;
        }

        let parent_state = self.nodes[near_id as usize].state;
        let parent_t = self.nodes[near_id as usize].t;
        let parent_layer = self.nodes[near_id as usize].layer;
        let prop = propagate(&parent_state, &control, duration, dynamics.dt, dynamics.wheelbase);

        // Collision check and monitor fold at every integrator substep.
        let mut ann = self.nodes[near_id as usize].ann.clone();
        let mut prev = parent_state.position();
        for (tau, st) in &prop.steps[1..] {
            let p = st.position();
            if !workspace.segment_free(prev, p) {
                return false;
            }
            ann = template.annotate_child(&ann, &st.as_vec(), parent_t + tau);
            prev = p;
        }

        let end_state = prop.final_state();
        let end_t = parent_t + duration;
        let end_pos = end_state.position();

        let layer = match lead_opt {
            Some(lead) => {
                if lead.dist_to_lead(end_pos) > params.r_prop {
                    return false;
                }
                let layer = lead.layer_assign(end_pos);
                if layer.abs_diff(parent_layer) > 1 {
                    return false;
                }
                layer
            }
            None => 0,
        };

        let cost = template.node_cost(&ann);
        let end_coords = (end_state.x, end_state.y, end_state.theta, end_t);

        // Witness acceptance: keep the node if its neighborhood is new, or it
        // beats the current representative on (goal, cost, arrival time).
        match self.nearest_witness(end_coords, params.delta_s) {
            Some(witness_id) => {
                let candidate_goal = self.goal_test(&ann, layer, end_pos);
                let rep = self.witnesses[witness_id as usize].rep;
                let rep_rank = self.rank(rep);
                if (!candidate_goal, cost, end_t) < rep_rank {
                    let id = self.add_node(
                        end_state, end_t, near_id, control, duration, layer, ann, cost, witness_id,
                    );
                    self.witnesses[witness_id as usize].rep = id;
                    self.deactivate(rep);
                    self.update_best(id)
                } else {
                    false
                }
            }
            None => {
                let witness_id = self.witnesses.len() as u32;
                let id = self.add_node(
                    end_state, end_t, near_id, control, duration, layer, ann, cost, witness_id,
                );
                self.witnesses.push(Witness { location: end_coords, rep: id });
                self.witness_grid.insert(end_coords, witness_id);
                self.update_best(id)
            }
        }
    }

    /// Ranking used for witness replacement and best tracking:
    /// (not goal, cost, arrival time), smaller is better.
    fn rank(&self, id: u32) -> (bool, f64, f64) {
        let n = &self.nodes[id as usize];
        (!self.is_goal_node(id), n.cost, n.t)
    }

    #[allow(clippy::too_many_arguments)]
    fn add_node(
        &mut self,
        state: CarState,
        t: f64,
        parent: u32,
        control: CarControl,
        duration: f64,
        layer: usize,
        ann: Annotation,
        cost: f64,
        witness: u32,
    ) -> u32 {
        let node = Node {
            state,
            t,
            parent: Some(parent),
            control: Some(control),
            duration,
            layer,
            ann,
            cost,
            active: true,
            pruned: false,
            children: 0,
            protected: false,
            witness,
        };
        let id = match self.free.pop() {
            Some(slot) => {
                self.nodes[slot as usize] = node;
                slot
            }
            None => {
                self.nodes.push(node);
                (self.nodes.len() - 1) as u32
            }
        };
        self.nodes[parent as usize].children += 1;
        self.max_accepted_t = self.max_accepted_t.max(t);
        self.node_grid.insert((state.x, state.y, state.theta, t), id);
        let bucket = layer.min(self.active_by_layer.len() - 1);
        self.active_by_layer[bucket].push(id);
        id
    }

    fn deactivate(&mut self, id: u32) {
        let node = &mut self.nodes[id as usize];
        if !node.active {
            return;
        }
        node.active = false;
        let coords = (node.state.x, node.state.y, node.state.theta, node.t);
        self.node_grid.remove(coords, id);
        self.try_prune(id);
    }

    /// Remove chains of inactive leaves. The root and the current best node
    /// stay in the graph even when childless.
    fn try_prune(&mut self, mut id: u32) {
        loop {
            let node = &self.nodes[id as usize];
            if id == 0 || node.active || node.pruned || node.protected || node.children > 0 {
                return;
            }
            let parent = node.parent.expect("non-root node has a parent");
            self.nodes[id as usize].pruned = true;
            self.free.push(id);
            self.nodes[parent as usize].children -= 1;
            id = parent;
        }
    }

    fn update_best(&mut self, id: u32) -> bool {
        let cand = self.rank(id);
        let current = (!self.best.satisfied, self.best.cost, self.best.t);
        if cand < current {
            let old = self.best.id;
            self.nodes[old as usize].protected = false;
            self.nodes[id as usize].protected = true;
            self.best = Best { id, satisfied: !cand.0, cost: cand.1, t: cand.2 };
            self.try_prune(old);
            true
        } else {
            false
        }
    }

    /// Nearest witness within `radius` of `p` in the weighted metric.
    fn nearest_witness(&self, p: grid::GridPoint, radius: f64) -> Option<u32> {
        let w = self.witness_grid.theta_weight();
        let tw = self.witness_grid.time_weight();
        let witnesses = &self.witnesses;
        let mut best: Option<(f64, u32)> = None;
        self.witness_grid.for_each_near(p, |id| {
            let d = weighted_dist(p, witnesses[id as usize].location, w, tw);
            if d <= radius {
                let key = (d, id);
                if best.is_none() || key < best.unwrap() {
                    best = Some(key);
                }
            }
        });
        best.map(|(_, id)| id)
    }

    /// Parent selection. Default: best-near — the lowest-(cost, t) active
    /// node within `delta_v` of the sample whose layer is adjacent to the
    /// sampled layer, falling back to the nearest such node. `whole_tree`
    /// uses the literal nearest-neighbor rule over all layers instead.
    fn select(&mut self, sample: grid::GridPoint, layer_rand: usize, whole_tree: bool) -> Option<u32> {
        let params = self.scenario.planner;
        let w = params.theta_weight;
        let baseline = matches!(self.guidance, Guidance::Uniform);

        if whole_tree {
            let nodes = &self.nodes;
            let mut best: Option<((f64, u32), u32)> = None;
            for bucket in &self.active_by_layer {
                for &id in bucket {
                    let n = &nodes[id as usize];
                    if !n.active {
                        continue;
                    }
                    let d =
                        weighted_dist(sample, (n.state.x, n.state.y, n.state.theta, 0.0), w, 0.0);
                    let key = (d, id);
                    if best.is_none() || key < best.unwrap().0 {
                        best = Some((key, id));
                    }
                }
            }
            return best.map(|(_, id)| id);
        }

        // Best-near inside the delta_v ball.
        {
            let nodes = &self.nodes;
            let mut best: Option<((f64, f64, u32), u32)> = None;
            self.node_grid.for_each_near(sample, |id| {
                let n = &nodes[id as usize];
                if !n.active || (!baseline && n.layer.abs_diff(layer_rand) > 1) {
                    return;
                }
                let d = weighted_dist(sample, (n.state.x, n.state.y, n.state.theta, 0.0), w, 0.0);
                if d <= params.delta_v {
                    // Lowest cost first; among cost ties extend the latest
                    // arrival, which advances the time frontier while the
                    // cost plateaus between deadline windows.
                    let key = (n.cost, -n.t, id);
                    if best.is_none() || key < best.unwrap().0 {
                        best = Some((key, id));
                    }
                }
            });
            if let Some((_, id)) = best {
                return Some(id);
            }
        }

        // Fallback: nearest active node among the allowed layers, compacting
        // stale bucket entries on the way.
        let buckets: Vec<usize> = if baseline {
            vec![0]
        } else {
            let lo = layer_rand.saturating_sub(1);
            let hi = (layer_rand + 1).min(self.active_by_layer.len() - 1);
            (lo..=hi).collect()
        };
        let mut best: Option<((f64, u32), u32)> = None;
        for bucket_idx in buckets {
            let bucket = std::mem::take(&mut self.active_by_layer[bucket_idx]);
            let mut kept = Vec::with_capacity(bucket.len());
            for id in bucket {
                let n = &self.nodes[id as usize];
                let expected = n.layer.min(self.active_by_layer.len() - 1);
                if !n.active || n.pruned || expected != bucket_idx {
                    continue;
                }
                kept.push(id);
                let d = weighted_dist(sample, (n.state.x, n.state.y, n.state.theta, 0.0), w, 0.0);
                let key = (d, id);
                if best.is_none() || key < best.unwrap().0 {
                    best = Some((key, id));
                }
            }
            self.active_by_layer[bucket_idx] = kept;
        }
        best.map(|(_, id)| id)
    }

    /// Root-to-node trajectory with the control applied from each point.
    pub fn reconstruct(&self, id: u32) -> Vec<TrajPoint> {
        let mut chain = Vec::new();
        let mut cursor = Some(id);
        while let Some(i) = cursor {
            chain.push(i);
            cursor = self.nodes[i as usize].parent;
        }
        chain.reverse();
        let mut out = Vec::with_capacity(chain.len());
        for (k, &i) in chain.iter().enumerate() {
            let n = &self.nodes[i as usize];
            let control = chain
                .get(k + 1)
                .and_then(|next| self.nodes[*next as usize].control);
            out.push(TrajPoint { t: n.t, state: n.state, control });
        }
        out
    }

    /// Re-check every structural invariant of the finished tree: layer
    /// adjacency, lead containment, substep collision freedom, edge
    /// reproducibility, and witness sparsity.
    pub fn audit(&self) -> AuditReport {
        let mut report = AuditReport::default();
        let params = self.scenario.planner;
        let dynamics = self.scenario.dynamics;
        let workspace = &self.scenario.workspace;

        for (idx, node) in self.nodes.iter().enumerate() {
            if node.pruned {
                continue;
            }
            report.nodes_checked += 1;
            let id = idx as u32;
            let Some(parent_id) = node.parent else { continue };
            let parent = &self.nodes[parent_id as usize];

            if parent.pruned {
                report
                    .violations
                    .push(format!("node {id}: parent {parent_id} was pruned"));
                continue;
            }
            if node.t <= parent.t {
                report
                    .violations
                    .push(format!("node {id}: time {} not after parent {}", node.t, parent.t));
            }

            if let Guidance::Lead { lead, .. } = &self.guidance {
                if node.layer.abs_diff(parent.layer) > 1 {
                    report.violations.push(format!(
                        "node {id}: layer jump {} -> {}",
                        parent.layer, node.layer
                    ));
                }
                let dist = lead.dist_to_lead(node.state.position());
                if dist > params.r_prop + 1e-9 {
                    report
                        .violations
                        .push(format!("node {id}: {dist} m from lead exceeds r_prop"));
                }
            }

            let control = node.control.expect("non-root node stores its control");
            let prop =
                propagate(&parent.state, &control, node.duration, dynamics.dt, dynamics.wheelbase);
            let mut prev = parent.state.position();
            for (_, st) in &prop.steps[1..] {
                if !workspace.segment_free(prev, st.position()) {
                    report
                        .violations
                        .push(format!("node {id}: edge collides at substep"));
                    break;
                }
                prev = st.position();
            }
            let end = prop.final_state();
            let err = ((end.x - node.state.x).powi(2)
                + (end.y - node.state.y).powi(2)
                + (end.theta - node.state.theta).powi(2))
            .sqrt();
            if err > 1e-9 {
                report
                    .violations
                    .push(format!("node {id}: re-propagation differs by {err}"));
            }
        }

        let w = params.theta_weight;
        let tw = params.time_weight;
        for (wid, witness) in self.witnesses.iter().enumerate() {
            report.witnesses_checked += 1;
            let rep = &self.nodes[witness.rep as usize];
            if !rep.active || rep.pruned {
                report
                    .violations
                    .push(format!("witness {wid}: representative {} not active", witness.rep));
                continue;
            }
            if rep.witness != wid as u32 {
                report
                    .violations
                    .push(format!("witness {wid}: representative assigned elsewhere"));
            }
            let d = weighted_dist(
                witness.location,
                (rep.state.x, rep.state.y, rep.state.theta, rep.t),
                w,
                tw,
            );
            if d > params.delta_s + 1e-9 {
                report
                    .violations
                    .push(format!("witness {wid}: representative {d} m away"));
            }
            let mut nearest_other = f64::INFINITY;
            self.witness_grid.for_each_near(witness.location, |other| {
                if other as usize != wid {
                    let dd = weighted_dist(
                        witness.location,
                        self.witnesses[other as usize].location,
                        w,
                        tw,
                    );
                    nearest_other = nearest_other.min(dd);
                }
            });
            if nearest_other <= params.delta_s {
                report.violations.push(format!(
                    "witness {wid}: another witness within delta_s ({nearest_other} m)"
                ));
            }
        }
        // Sparsity: active nodes are exactly the representatives, so no two
        // active nodes share a witness and no displaced node stays active.
        for (idx, node) in self.nodes.iter().enumerate() {
            if node.pruned || !node.active {
                continue;
            }
            let assigned = &self.witnesses[node.witness as usize];
            if assigned.rep != idx as u32 {
                report.violations.push(format!(
                    "node {idx}: active but displaced at witness {} (sparsity violation)",
                    node.witness
                ));
            }
        }
        report
    }

    /// Tree snapshot for the debug dump.
    pub fn snapshot(&self) -> TreeSnapshot {
        TreeSnapshot {
            nodes: self
                .nodes
                .iter()
                .enumerate()
                .filter(|(_, n)| !n.pruned)
                .map(|(id, n)| TreeNodeDump {
                    id: id as u32,
                    parent: n.parent,
                    x: n.state.x,
                    y: n.state.y,
                    theta: n.state.theta,
                    t: n.t,
                    layer: n.layer,
                    cost: n.cost,
                    active: n.active,
                })
                .collect(),
            witnesses: self.witnesses.len(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct TreeNodeDump {
    pub id: u32,
    pub parent: Option<u32>,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub t: f64,
    pub layer: usize,
    pub cost: f64,
    pub active: bool,
}

#[derive(Debug, Serialize)]
pub struct TreeSnapshot {
    pub nodes: Vec<TreeNodeDump>,
    pub witnesses: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geolead::build_lead;
    use crate::monitor::MonitorTemplate;

    fn scenario_from(formula: &str, extra: &str) -> Scenario {
        let text = format!(
            r#"
schema = 1
name = "test"
seed = 1
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
{extra}
"#
        );
        Scenario::from_str_named(&text, "test").unwrap()
    }

    fn quick_config(max_iters: u64) -> RunConfig {
        RunConfig {
            max_iters,
            wall_budget: None,
            stop_on_satisfied: true,
            metric_stride: 1000,
            whole_tree_selection: false,
            deadline_cutoff: None,
        }
    }

    #[test]
    fn start_inside_goal_satisfies_at_root() {
        let sc = scenario_from("F(dist(x,y; 0.5,0.5) <= 0.3)", "");
        let template = MonitorTemplate::new(&sc.formula).unwrap();
        let lead = build_lead(
            &vec![0],
            &sc.fragment,
            &sc.workspace,
            sc.start.position(),
            &sc.planner,
            1,
        )
        .unwrap();
        let mut planner = SstPlanner::new_with_lead(
            &sc,
            &template,
            &lead,
            Point::new(0.5, 0.5),
            0.3,
            1,
        );
        let result = planner.run(&quick_config(10));
        assert!(result.satisfied);
        assert_eq!(result.best_cost, 0.0);
        assert_eq!(result.trajectory.len(), 1);
        assert_eq!(result.trajectory[0].t, 0.0);
    }

    #[test]
    fn baseline_start_inside_goal_is_immediate() {
        let sc = scenario_from("F(dist(x,y; 0.5,0.5) <= 0.3)", "");
        let template = MonitorTemplate::new(&sc.formula).unwrap();
        let mut planner = SstPlanner::new_baseline(&sc, &template, 3);
        let result = planner.run(&quick_config(10));
        assert!(result.satisfied);
        assert_eq!(result.best_cost, 0.0);
    }

    #[test]
    fn lead_planner_reaches_an_unbounded_goal() {
        let sc = scenario_from("F(dist(x,y; 5,3) <= 0.3)", "");
        let template = MonitorTemplate::new(&sc.formula).unwrap();
        let lead = build_lead(
            &vec![0],
            &sc.fragment,
            &sc.workspace,
            sc.start.position(),
            &sc.planner,
            7,
        )
        .unwrap();
        let mut planner =
            SstPlanner::new_with_lead(&sc, &template, &lead, Point::new(5.0, 3.0), 0.3, 7);
        let result = planner.run(&quick_config(300_000));
        assert!(result.satisfied, "planner failed to reach the goal");
        assert!(result.fold.unwrap() >= 0.0);
        // Best-cost series never increases.
        for w in result.metrics.windows(2) {
            assert!(w[1].best_cost <= w[0].best_cost + 1e-12);
        }
        // The audit finds a clean tree.
        let audit = planner.audit();
        assert!(audit.ok(), "audit violations: {:?}", audit.violations);
    }

    #[test]
    fn identical_seeds_give_identical_results() {
        let sc = scenario_from("F(dist(x,y; 5,3) <= 0.3)", "");
        let template = MonitorTemplate::new(&sc.formula).unwrap();
        let run = || {
            let mut planner = SstPlanner::new_baseline(&sc, &template, 42);
            let mut config = quick_config(20_000);
            config.stop_on_satisfied = false;
            planner.run(&config)
        };
        let (a, b) = (run(), run());
        assert_eq!(a.trajectory, b.trajectory);
        assert_eq!(a.states, b.states);
        assert_eq!(a.best_cost, b.best_cost);
        let key = |m: &MetricSample| (m.iteration, m.best_cost.to_bits(), m.states);
        assert_eq!(
            a.metrics.iter().map(key).collect::<Vec<_>>(),
            b.metrics.iter().map(key).collect::<Vec<_>>()
        );
    }

    #[test]
    fn reconstruct_times_are_cumulative() {
        let sc = scenario_from("F(dist(x,y; 5,3) <= 0.3)", "");
        let template = MonitorTemplate::new(&sc.formula).unwrap();
        let mut planner = SstPlanner::new_baseline(&sc, &template, 9);
        let result = planner.run(&quick_config(50_000));
        let traj = &result.trajectory;
        assert_eq!(traj[0].t, 0.0);
        for w in traj.windows(2) {
            assert!(w[1].t > w[0].t);
            assert!(w[0].control.is_some());
        }
        assert!(traj.last().unwrap().control.is_none());

        // Re-propagating the stored controls reproduces each stored state.
        for w in traj.windows(2) {
            let control = w[0].control.unwrap();
            let prop = propagate(
                &w[0].state,
                &control,
                w[1].t - w[0].t,
                sc.dynamics.dt,
                sc.dynamics.wheelbase,
            );
            let end = prop.final_state();
            assert!((end.x - w[1].state.x).abs() < 1e-9);
            assert!((end.y - w[1].state.y).abs() < 1e-9);
            assert!((end.theta - w[1].state.theta).abs() < 1e-9);
        }
    }

    #[test]
    fn whole_tree_selection_flag_works() {
        let sc = scenario_from("F(dist(x,y; 3,2) <= 0.3)", "");
        let template = MonitorTemplate::new(&sc.formula).unwrap();
        let lead = build_lead(
            &vec![0],
            &sc.fragment,
            &sc.workspace,
            sc.start.position(),
            &sc.planner,
            2,
        )
        .unwrap();
        let mut planner =
            SstPlanner::new_with_lead(&sc, &template, &lead, Point::new(3.0, 2.0), 0.3, 2);
        let mut config = quick_config(150_000);
        config.whole_tree_selection = true;
        let result = planner.run(&config);
        assert!(result.satisfied);
        let audit = planner.audit();
        assert!(audit.ok(), "audit violations: {:?}", audit.violations);
    }
}
