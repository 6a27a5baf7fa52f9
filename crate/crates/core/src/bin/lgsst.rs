//! Command-line interface: scenario validation, candidate-order listing,
//! lead construction, solving, rendering, and benchmarking.
//!
//! Exit codes: 0 success, 2 validation failure, 3 no solution found.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use lgsst::bench::{run_benchmark, write_outputs, BenchmarkConfig};
use lgsst::geolead::build_lead;
use lgsst::highlevel::{
    solve, solve_baseline_with_tree, trajectory_from_str, trajectory_to_string, verify_trajectory,
    SolveOptions,
};
use lgsst::kinoplanner::TrajPoint;
use lgsst::render::render_scenario;
use lgsst::taskplan::candidate_plans;
use lgsst::world::scenario::Scenario;

const EXIT_VALIDATION: u8 = 2;
const EXIT_NO_SOLUTION: u8 = 3;

#[derive(Parser)]
#[command(name = "lgsst", about = "Layer-guided kinodynamic planning for STL missions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a scenario file and pretty-print it.
    Validate { scenario: PathBuf },
    /// Print the candidate goal visit orders.
    Plans { scenario: PathBuf },
    /// Build the geometric lead for one candidate order.
    Lead {
        scenario: PathBuf,
        /// Candidate order index (as printed by `plans`).
        #[arg(long, default_value_t = 0)]
        order: usize,
        /// Write the labeled polyline to this file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write an SVG overlay to this file.
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Seed override (defaults to the scenario seed).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Solve a scenario and write the winning trajectory.
    Solve {
        scenario: PathBuf,
        /// Planner: `lg` (lead-guided) or `baseline`.
        #[arg(long, default_value = "lg")]
        planner: String,
        /// Seed override (defaults to the scenario seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Total wall budget in seconds; omit for a deterministic
        /// iteration-bounded run.
        #[arg(long)]
        budget: Option<f64>,
        /// Trajectory output path (default `<scenario>_traj.txt`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write a JSON tree snapshot after planning.
        #[arg(long)]
        dump_tree: Option<PathBuf>,
        /// Write an SVG of the scenario and winning trajectory.
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Use literal whole-tree nearest-neighbor selection.
        #[arg(long)]
        whole_tree_selection: bool,
    },
    /// Render a scenario (optionally with a stored trajectory or a lead).
    Render {
        scenario: PathBuf,
        /// Trajectory file to overlay.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        /// Overlay the lead of this candidate order.
        #[arg(long)]
        lead_order: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a benchmark config: repeated seeded runs, CSV/JSON/SVG outputs.
    Bench {
        config: PathBuf,
        /// Iteration-bounded runs with byte-reproducible outputs.
        #[arg(long)]
        deterministic: bool,
        /// 60 runs at 300 s per run.
        #[arg(long)]
        paper_scale: bool,
        /// Worker threads.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Output directory override (also via LGSST_OUT_DIR).
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn load_scenario(path: &PathBuf) -> Result<Scenario, ExitCode> {
    match Scenario::load(path) {
        Ok(s) => Ok(s),
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            Err(ExitCode::from(EXIT_VALIDATION))
        }
    }
}

fn write_file(path: &PathBuf, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Validate { scenario } => {
            let sc = match load_scenario(&scenario) {
                Ok(s) => s,
                Err(code) => return Ok(code),
            };
            print!("{}", sc.pretty());
            for warning in sc.warnings() {
                println!("  warning: {warning}");
            }
            println!("ok");
            Ok(ExitCode::SUCCESS)
        }
        Command::Plans { scenario } => {
            let sc = match load_scenario(&scenario) {
                Ok(s) => s,
                Err(code) => return Ok(code),
            };
            let plans = match candidate_plans(&sc.fragment, sc.planner.plan_cap) {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: {e}");
                    return Ok(ExitCode::from(EXIT_VALIDATION));
                }
            };
            println!("{} candidate order(s):", plans.len());
            for (k, plan) in plans.iter().enumerate() {
                let pretty: Vec<String> = plan
                    .iter()
                    .map(|g| {
                        let goal = sc.fragment.goal(*g);
                        format!("G{g}({},{})", goal.center.0, goal.center.1)
                    })
                    .collect();
                println!("  {k}: {}", pretty.join(" -> "));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Lead { scenario, order, out, svg, seed } => {
            let sc = match load_scenario(&scenario) {
                Ok(s) => s,
                Err(code) => return Ok(code),
            };
            let plans = candidate_plans(&sc.fragment, sc.planner.plan_cap)
                .map_err(|e| anyhow::anyhow!("{e}"))?;
            let Some(plan) = plans.get(order) else {
                eprintln!("error: order {order} out of range ({} candidates)", plans.len());
                return Ok(ExitCode::from(EXIT_VALIDATION));
            };
            let seed = seed.unwrap_or(sc.seed).wrapping_add(order as u64);
            let lead = match build_lead(
                plan,
                &sc.fragment,
                &sc.workspace,
                sc.start.position(),
                &sc.planner,
                seed,
            ) {
                Ok(lead) => lead,
                Err(e) => {
                    eprintln!("error: {e}");
                    return Ok(ExitCode::from(EXIT_NO_SOLUTION));
                }
            };
            println!(
                "lead for order {order}: {} layers, {} waypoints",
                lead.layer_count(),
                lead.waypoints().len()
            );
            if let Some(path) = out {
                let mut text = String::new();
                for layer in 0..lead.layer_count() {
                    for p in lead.layer_span(layer) {
                        text.push_str(&format!("{layer} {} {}\n", p.x, p.y));
                    }
                }
                write_file(&path, &text)?;
                println!("wrote {}", path.display());
            }
            if let Some(path) = svg {
                write_file(&path, &render_scenario(&sc, Some(&lead), None))?;
                println!("wrote {}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Solve {
            scenario,
            planner,
            seed,
            budget,
            out,
            dump_tree,
            svg,
            whole_tree_selection,
        } => {
            let sc = match load_scenario(&scenario) {
                Ok(s) => s,
                Err(code) => return Ok(code),
            };
            let options = SolveOptions {
                seed: seed.unwrap_or(sc.seed),
                wall_budget: budget.map(Duration::from_secs_f64),
                whole_tree_selection,
                capture_tree: dump_tree.is_some(),
            };
            let out_path = out.unwrap_or_else(|| {
                PathBuf::from(format!("{}_traj.txt", sc.name))
            });

            let snapshot;
            let (trajectory, satisfied): (Vec<TrajPoint>, bool) = match planner.as_str() {
                "lg" => {
                    let mut report = solve(&sc, &options).map_err(|e| anyhow::anyhow!("{e}"))?;
                    snapshot = report
                        .winner
                        .and_then(|w| report.orders.get_mut(w).and_then(|o| o.snapshot.take()))
                        .or_else(|| {
                            report.orders.iter_mut().rev().find_map(|o| o.snapshot.take())
                        });
                    for (k, outcome) in report.orders.iter().enumerate() {
                        let status = match (&outcome.lead_error, &outcome.result) {
                            (Some(err), _) => format!("lead failed: {err}"),
                            (None, Some(r)) if r.satisfied => format!(
                                "satisfied, cost {}, {} states, {:.2} s",
                                r.best_cost, r.states, outcome.wall_s
                            ),
                            (None, Some(r)) => format!(
                                "unsatisfied, best cost {}, {} states, {:.2} s",
                                r.best_cost, r.states, outcome.wall_s
                            ),
                            (None, None) => "skipped".to_string(),
                        };
                        println!("order {k} {:?}: {status}", outcome.order);
                    }
                    println!("total wall time: {:.2} s", report.wall_s);
                    match report.winning_result() {
                        Some(result) => (result.trajectory.clone(), true),
                        None => {
                            println!("no satisfying trajectory found");
                            if let (Some(path), Some(tree)) = (&dump_tree, &snapshot) {
                                write_file(path, &serde_json::to_string_pretty(tree)?)?;
                                println!("wrote {}", path.display());
                            }
                            return Ok(ExitCode::from(EXIT_NO_SOLUTION));
                        }
                    }
                }
                "baseline" => {
                    let (result, tree) = solve_baseline_with_tree(&sc, &options)
                        .map_err(|e| anyhow::anyhow!("{e}"))?;
                    snapshot = tree;
                    println!(
                        "baseline: satisfied={}, best cost {}, {} states",
                        result.satisfied, result.best_cost, result.states
                    );
                    if !result.satisfied {
                        if let (Some(path), Some(tree)) = (&dump_tree, &snapshot) {
                            write_file(path, &serde_json::to_string_pretty(tree)?)?;
                            println!("wrote {}", path.display());
                        }
                        return Ok(ExitCode::from(EXIT_NO_SOLUTION));
                    }
                    (result.trajectory, result.satisfied)
                }
                other => {
                    eprintln!("error: unknown planner `{other}` (use lg or baseline)");
                    return Ok(ExitCode::from(EXIT_VALIDATION));
                }
            };

            if satisfied {
                let verdict = verify_trajectory(&sc, &trajectory)
                    .map_err(|e| anyhow::anyhow!("verification failed: {e}"))?;
                println!(
                    "offline robustness {} (boolean {})",
                    verdict.rho, verdict.boolean
                );
            }
            write_file(&out_path, &trajectory_to_string(&trajectory))?;
            println!("wrote {}", out_path.display());
            if let Some(path) = svg {
                write_file(&path, &render_scenario(&sc, None, Some(&trajectory)))?;
                println!("wrote {}", path.display());
            }
            if let (Some(path), Some(tree)) = (&dump_tree, &snapshot) {
                write_file(path, &serde_json::to_string_pretty(tree)?)?;
                println!("wrote {}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Render { scenario, trajectory, lead_order, out } => {
            let sc = match load_scenario(&scenario) {
                Ok(s) => s,
                Err(code) => return Ok(code),
            };
            let traj = match trajectory {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    Some(trajectory_from_str(&text).map_err(|e| anyhow::anyhow!("{e}"))?)
                }
                None => None,
            };
            let lead = match lead_order {
                Some(order) => {
                    let plans = candidate_plans(&sc.fragment, sc.planner.plan_cap)
                        .map_err(|e| anyhow::anyhow!("{e}"))?;
                    let plan = plans
                        .get(order)
                        .ok_or_else(|| anyhow::anyhow!("order {order} out of range"))?;
                    Some(
                        build_lead(
                            plan,
                            &sc.fragment,
                            &sc.workspace,
                            sc.start.position(),
                            &sc.planner,
                            sc.seed.wrapping_add(order as u64),
                        )
                        .map_err(|e| anyhow::anyhow!("{e}"))?,
                    )
                }
                None => None,
            };
            write_file(&out, &render_scenario(&sc, lead.as_ref(), traj.as_deref()))?;
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench { config, deterministic, paper_scale, workers, out_dir } => {
            let mut bench_config = match BenchmarkConfig::from_file(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return Ok(ExitCode::from(EXIT_VALIDATION));
                }
            };
            bench_config.deterministic = deterministic;
            bench_config.workers = workers;
            if paper_scale {
                bench_config.apply_paper_scale();
            }
            if let Some(dir) = out_dir {
                bench_config.out_dir = dir;
            } else if let Ok(dir) = std::env::var("LGSST_OUT_DIR") {
                bench_config.out_dir = PathBuf::from(dir);
            }
            let records = match run_benchmark(&bench_config) {
                Ok(r) => r,
                Err(lgsst::bench::BenchError::Scenario(e)) => {
                    eprintln!("error: {e}");
                    return Ok(ExitCode::from(EXIT_VALIDATION));
                }
                Err(e) => return Err(anyhow::anyhow!("{e}")),
            };
            write_outputs(&bench_config, &records).map_err(|e| anyhow::anyhow!("{e}"))?;
            for record in &records {
                println!(
                    "{} {} run {}: satisfied={}, states={}, wall {:.2} s",
                    record.scenario,
                    record.planner.label(),
                    record.run,
                    record.satisfied,
                    record.states,
                    record.wall_s
                );
            }
            println!("outputs in {}", bench_config.out_dir.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}
