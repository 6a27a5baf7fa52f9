//! Benchmark harness: repeated seeded runs of both planners over scenario
//! files, metric collection, CSV/JSON export, and cost-curve plots.
//!
//! Runs are seeded `base_seed + run_index` and merged in a fixed order, so a
//! benchmark is reproducible given its config. In `deterministic` mode the
//! planners stop on their iteration budgets instead of wall-clock budgets and
//! the CSV `wall_s` column carries the iteration count, making the output
//! files byte-identical across repeats.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::highlevel::{solve, solve_baseline, SolveOptions, SolveReport};
use crate::kinoplanner::MetricSample;
use crate::render::{plot_cost_curves, CurveGroup};
use crate::world::scenario::{Scenario, ScenarioError};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config: {0}")]
    Config(String),
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Solve(#[from] crate::highlevel::SolveError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlannerKind {
    Lg,
    Baseline,
}

impl PlannerKind {
    pub fn label(&self) -> &'static str {
        match self {
            PlannerKind::Lg => "lg",
            PlannerKind::Baseline => "baseline",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
struct RawBenchConfig {
    scenarios: Vec<PathBuf>,
    #[serde(default = "default_planners")]
    planners: Vec<PlannerKind>,
    #[serde(default = "default_runs")]
    runs: u32,
    /// Per-run wall budget; falls back to each scenario's own budget.
    budget_s: Option<f64>,
    #[serde(default = "default_sample_period")]
    sample_period_s: f64,
    #[serde(default = "default_out_dir")]
    out_dir: PathBuf,
    #[serde(default)]
    base_seed: u64,
}

fn default_planners() -> Vec<PlannerKind> {
    vec![PlannerKind::Lg, PlannerKind::Baseline]
}

fn default_runs() -> u32 {
    20
}

fn default_sample_period() -> f64 {
    1.0
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("bench-out")
}

#[derive(Debug, Clone)]
pub struct BenchmarkConfig {
    pub scenarios: Vec<PathBuf>,
    pub planners: Vec<PlannerKind>,
    pub runs: u32,
    pub budget_s: Option<f64>,
    pub sample_period_s: f64,
    pub out_dir: PathBuf,
    pub base_seed: u64,
    /// Iteration-bounded runs, reproducible output bytes.
    pub deterministic: bool,
    /// 60 runs at 300 s, planning anytime past the first solution.
    pub paper_scale: bool,
    /// Worker threads (0 = library default).
    pub workers: usize,
}

impl BenchmarkConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path.as_ref())?;
        let raw: RawBenchConfig = toml::from_str(&text)?;
        if raw.runs == 0 {
            return Err(BenchError::Config("runs must be at least 1".into()));
        }
        if let Some(b) = raw.budget_s {
            if !(b > 0.0) {
                return Err(BenchError::Config("budget_s must be positive".into()));
            }
        }
        Ok(BenchmarkConfig {
            scenarios: raw.scenarios,
            planners: raw.planners,
            runs: raw.runs,
            budget_s: raw.budget_s,
            sample_period_s: raw.sample_period_s,
            out_dir: raw.out_dir,
            base_seed: raw.base_seed,
            deterministic: false,
            paper_scale: false,
            workers: 0,
        })
    }

    pub fn apply_paper_scale(&mut self) {
        self.paper_scale = true;
        self.runs = 60;
        self.budget_s = Some(300.0);
    }
}

/// Metrics of one planner run.
#[derive(Debug, Clone, Serialize)]
pub struct RunMetrics {
    pub scenario: String,
    pub planner: PlannerKind,
    pub run: u32,
    pub seed: u64,
    pub series: Vec<MetricSample>,
    pub satisfied: bool,
    pub states: usize,
    pub wall_s: f64,
}

/// Fold a multi-order solve into one nonincreasing-cost series: iteration and
/// state counts accumulate across orders, best cost is the running minimum.
fn merge_solve_metrics(report: &SolveReport) -> (Vec<MetricSample>, bool, usize) {
    let mut series: Vec<MetricSample> = Vec::new();
    let mut iter_offset = 0u64;
    let mut state_offset = 0usize;
    let mut wall_offset = 0.0f64;
    let mut best = f64::INFINITY;
    let mut satisfied = false;
    for outcome in &report.orders {
        let Some(result) = &outcome.result else { continue };
        for m in &result.metrics {
            best = best.min(m.best_cost);
            satisfied |= m.satisfied;
            series.push(MetricSample {
                iteration: iter_offset + m.iteration,
                wall_s: wall_offset + m.wall_s,
                best_cost: best,
                states: state_offset + m.states,
                satisfied,
            });
        }
        iter_offset += result.iterations;
        state_offset += result.states;
        wall_offset += outcome.wall_s;
    }
    if series.is_empty() {
        // Every order failed at the lead stage; emit a single stub sample.
        series.push(MetricSample {
            iteration: 0,
            wall_s: 0.0,
            best_cost: f64::INFINITY,
            states: 0,
            satisfied: false,
        });
    }
    let states = series.last().map(|m| m.states).unwrap_or(0);
    (series, report.winner.is_some(), states)
}

fn run_one(
    scenario: &Scenario,
    planner: PlannerKind,
    run: u32,
    seed: u64,
    budget: Option<Duration>,
) -> Result<RunMetrics, BenchError> {
    let options = SolveOptions {
        seed,
        wall_budget: budget,
        whole_tree_selection: false,
        capture_tree: false,
    };
    match planner {
        PlannerKind::Lg => {
            let report = solve(scenario, &options)?;
            let (series, satisfied, states) = merge_solve_metrics(&report);
            Ok(RunMetrics {
                scenario: scenario.name.clone(),
                planner,
                run,
                seed,
                series,
                satisfied,
                states,
                wall_s: report.wall_s,
            })
        }
        PlannerKind::Baseline => {
            let result = solve_baseline(scenario, &options)?;
            let wall_s = result.metrics.last().map(|m| m.wall_s).unwrap_or(0.0);
            Ok(RunMetrics {
                scenario: scenario.name.clone(),
                planner,
                run,
                seed,
                satisfied: result.satisfied,
                states: result.states,
                series: result.metrics,
                wall_s,
            })
        }
    }
}

/// Execute the benchmark matrix. Results come back sorted by
/// (scenario, planner, run) regardless of worker interleaving.
pub fn run_benchmark(config: &BenchmarkConfig) -> Result<Vec<RunMetrics>, BenchError> {
    let mut scenarios = Vec::new();
    for path in &config.scenarios {
        let mut scenario = Scenario::load(path)?;
        if let Some(budget) = config.budget_s {
            scenario.planner.budget_s = budget;
        }
        scenarios.push(scenario);
    }

    let mut jobs = Vec::new();
    for (si, _) in scenarios.iter().enumerate() {
        for planner in &config.planners {
            for run in 0..config.runs {
                jobs.push((si, *planner, run));
            }
        }
    }

    let execute = |jobs: &[(usize, PlannerKind, u32)]| -> Result<Vec<RunMetrics>, BenchError> {
        jobs.par_iter()
            .map(|(si, planner, run)| {
                let scenario = &scenarios[*si];
                let per_run_budget = if config.deterministic {
                    None
                } else {
                    Some(Duration::from_secs_f64(
                        config.budget_s.unwrap_or(scenario.planner.budget_s),
                    ))
                };
                run_one(
                    scenario,
                    *planner,
                    *run,
                    config.base_seed + *run as u64,
                    per_run_budget,
                )
            })
            .collect()
    };

    let mut records = if config.workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| BenchError::Config(e.to_string()))?;
        pool.install(|| execute(&jobs))?
    } else {
        execute(&jobs)?
    };

    records.sort_by(|a, b| {
        (a.scenario.as_str(), a.planner.label(), a.run)
            .cmp(&(b.scenario.as_str(), b.planner.label(), b.run))
    });
    Ok(records)
}

/// Sample a run's nonincreasing cost series onto a grid (step interpolation).
fn resample(series: &[MetricSample], grid: &[f64], deterministic: bool) -> Vec<f64> {
    let xs: Vec<f64> = series
        .iter()
        .map(|m| if deterministic { m.iteration as f64 } else { m.wall_s })
        .collect();
    let mut out = Vec::with_capacity(grid.len());
    let mut value = series.first().map(|m| m.best_cost).unwrap_or(f64::INFINITY);
    let mut k = 0;
    for g in grid {
        while k < xs.len() && xs[k] <= *g {
            value = series[k].best_cost;
            k += 1;
        }
        out.push(value);
    }
    out
}

#[derive(Debug, Serialize)]
struct GroupSummary {
    runs: usize,
    satisfaction_rate: f64,
    median_final_states: f64,
    /// Wall-clock runs only; deterministic runs report iterations instead.
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_wall_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_iterations: Option<f64>,
    grid: Vec<f64>,
    mean_best_cost: Vec<f64>,
    median_best_cost: Vec<f64>,
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Write one CSV per (scenario, planner), a cost-curve SVG per scenario, and
/// a benchmark-wide `summary.json`.
pub fn write_outputs(config: &BenchmarkConfig, records: &[RunMetrics]) -> Result<(), BenchError> {
    std::fs::create_dir_all(&config.out_dir)?;

    let mut by_group: BTreeMap<(String, PlannerKind), Vec<&RunMetrics>> = BTreeMap::new();
    for record in records {
        by_group
            .entry((record.scenario.clone(), record.planner))
            .or_default()
            .push(record);
    }

    let mut summary: BTreeMap<String, GroupSummary> = BTreeMap::new();

    for ((scenario, planner), group) in &by_group {
        let csv_path = config
            .out_dir
            .join(format!("{scenario}_{}.csv", planner.label()));
        let mut writer = csv::Writer::from_path(&csv_path)?;
        writer.write_record(["run", "seed", "wall_s", "best_cost", "states", "satisfied"])?;
        for record in group {
            for m in &record.series {
                let wall = if config.deterministic {
                    m.iteration.to_string()
                } else {
                    m.wall_s.to_string()
                };
                writer.write_record([
                    record.run.to_string(),
                    record.seed.to_string(),
                    wall,
                    m.best_cost.to_string(),
                    m.states.to_string(),
                    m.satisfied.to_string(),
                ])?;
            }
        }
        writer.flush()?;

        let x_end = group
            .iter()
            .flat_map(|r| r.series.last())
            .map(|m| if config.deterministic { m.iteration as f64 } else { m.wall_s })
            .fold(1e-9f64, f64::max);
        let step = if config.deterministic {
            (x_end / 100.0).max(1.0)
        } else {
            config.sample_period_s
        };
        let mut grid = Vec::new();
        let mut x = 0.0;
        while x <= x_end {
            grid.push(x);
            x += step;
        }
        let runs: Vec<Vec<f64>> = group
            .iter()
            .map(|r| resample(&r.series, &grid, config.deterministic))
            .collect();

        let sat = group.iter().filter(|r| r.satisfied).count() as f64 / group.len() as f64;
        let mut finals: Vec<f64> = group.iter().map(|r| r.states as f64).collect();
        let mean_wall = group.iter().map(|r| r.wall_s).sum::<f64>() / group.len() as f64;
        let mean_iters = group
            .iter()
            .map(|r| r.series.last().map(|m| m.iteration).unwrap_or(0) as f64)
            .sum::<f64>()
            / group.len() as f64;
        let n = grid.len();
        let mut mean_cost = vec![0.0; n];
        let mut med_cost = vec![0.0; n];
        for k in 0..n {
            let mut col: Vec<f64> = runs.iter().map(|r| r[k]).collect();
            mean_cost[k] = col.iter().sum::<f64>() / col.len() as f64;
            med_cost[k] = median(&mut col);
        }
        summary.insert(
            format!("{scenario}/{}", planner.label()),
            GroupSummary {
                runs: group.len(),
                satisfaction_rate: sat,
                median_final_states: median(&mut finals),
                mean_wall_s: (!config.deterministic).then_some(mean_wall),
                mean_iterations: config.deterministic.then_some(mean_iters),
                grid,
                mean_best_cost: mean_cost,
                median_best_cost: med_cost,
            },
        );
    }

    // One cost-curve plot per scenario with all planners overlaid.
    let scenario_names: Vec<String> = by_group.keys().map(|(s, _)| s.clone()).collect();
    for scenario in scenario_names.iter().collect::<std::collections::BTreeSet<_>>() {
        let mut groups = Vec::new();
        for (kind, color) in [(PlannerKind::Lg, "#1f77b4"), (PlannerKind::Baseline, "#d62728")] {
            if let Some(entry) = summary.get(&format!("{scenario}/{}", kind.label())) {
                let runs = by_group
                    .get(&((*scenario).clone(), kind))
                    .map(|group| {
                        group
                            .iter()
                            .map(|r| resample(&r.series, &entry.grid, config.deterministic))
                            .collect()
                    })
                    .unwrap_or_default();
                groups.push(CurveGroup {
                    label: kind.label().to_string(),
                    color: color.to_string(),
                    grid: entry.grid.clone(),
                    runs,
                });
            }
        }
        let x_label = if config.deterministic { "iterations" } else { "seconds" };
        let svg = plot_cost_curves(&groups, x_label);
        std::fs::write(config.out_dir.join(format!("{scenario}_cost.svg")), svg)?;
    }

    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    std::fs::write(config.out_dir.join("summary.json"), json)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_trivial_scenario(dir: &Path) -> PathBuf {
        let path = dir.join("trivial.scenario");
        let mut f = std::fs::File::create(&path).unwrap();
        write!(
            f,
            r#"
schema = 1
name = "trivial"
seed = 3
formula = "F(dist(x,y; 0.5,0.5) <= 0.3)"

[start]
x = 0.5
y = 0.5

[workspace]
x_min = 0.0
x_max = 4.0
y_min = 0.0
y_max = 4.0

[planner]
n_max = 2000
"#
        )
        .unwrap();
        path
    }

    #[test]
    fn trivial_benchmark_reports_zero_cost_from_the_start() {
        let dir = tempfile::tempdir().unwrap();
        let scenario = write_trivial_scenario(dir.path());
        let config = BenchmarkConfig {
            scenarios: vec![scenario],
            planners: vec![PlannerKind::Lg, PlannerKind::Baseline],
            runs: 1,
            budget_s: None,
            sample_period_s: 1.0,
            out_dir: dir.path().join("out"),
            base_seed: 7,
            deterministic: true,
            paper_scale: false,
            workers: 1,
        };
        let records = run_benchmark(&config).unwrap();
        assert_eq!(records.len(), 2);
        for record in &records {
            assert!(record.satisfied);
            assert_eq!(record.series.first().unwrap().best_cost, 0.0);
        }
        write_outputs(&config, &records).unwrap();
        let csv = std::fs::read_to_string(dir.path().join("out/trivial_lg.csv")).unwrap();
        assert!(csv.starts_with("run,seed,wall_s,best_cost,states,satisfied"));
        assert!(dir.path().join("out/summary.json").exists());
        assert!(dir.path().join("out/trivial_cost.svg").exists());
    }

    #[test]
    fn deterministic_outputs_are_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let scenario = write_trivial_scenario(dir.path());
        let make = |out: PathBuf| BenchmarkConfig {
            scenarios: vec![scenario.clone()],
            planners: vec![PlannerKind::Baseline],
            runs: 2,
            budget_s: None,
            sample_period_s: 1.0,
            out_dir: out,
            base_seed: 11,
            deterministic: true,
            paper_scale: false,
            workers: 2,
        };
        let c1 = make(dir.path().join("a"));
        let c2 = make(dir.path().join("b"));
        let r1 = run_benchmark(&c1).unwrap();
        let r2 = run_benchmark(&c2).unwrap();
        write_outputs(&c1, &r1).unwrap();
        write_outputs(&c2, &r2).unwrap();
        let a = std::fs::read(dir.path().join("a/trivial_baseline.csv")).unwrap();
        let b = std::fs::read(dir.path().join("b/trivial_baseline.csv")).unwrap();
        assert_eq!(a, b);
        let sa = std::fs::read(dir.path().join("a/summary.json")).unwrap();
        let sb = std::fs::read(dir.path().join("b/summary.json")).unwrap();
        assert_eq!(sa, sb);
    }

    #[test]
    fn series_invariants_hold() {
        let dir = tempfile::tempdir().unwrap();
        let scenario = write_trivial_scenario(dir.path());
        let config = BenchmarkConfig {
            scenarios: vec![scenario],
            planners: vec![PlannerKind::Baseline],
            runs: 1,
            budget_s: None,
            sample_period_s: 1.0,
            out_dir: dir.path().join("out"),
            base_seed: 0,
            deterministic: true,
            paper_scale: false,
            workers: 1,
        };
        let records = run_benchmark(&config).unwrap();
        for record in &records {
            for w in record.series.windows(2) {
                assert!(w[1].best_cost <= w[0].best_cost);
                assert!(w[1].states >= w[0].states);
            }
        }
    }
}
