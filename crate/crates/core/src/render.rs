//! Deterministic SVG output: scenario overlays (workspace, obstacles, goal
//! disks and windows, lead layers, trajectory) and cost-over-time curves.
//! All coordinates are printed with fixed precision so identical inputs
//! produce byte-identical files.

use std::fmt::Write as _;

use crate::geolead::LeadPath;
use crate::geometry::Point;
use crate::kinoplanner::TrajPoint;
use crate::world::scenario::Scenario;

const LAYER_COLORS: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

struct Frame {
    scale: f64,
    x_min: f64,
    y_max: f64,
    margin: f64,
    width: f64,
    height: f64,
}

impl Frame {
    fn new(scenario: &Scenario) -> Frame {
        let b = scenario.workspace.bounds();
        let scale = 60.0;
        let margin = 20.0;
        Frame {
            scale,
            x_min: b.x_min,
            y_max: b.y_max,
            margin,
            width: b.width() * scale + 2.0 * margin,
            height: b.height() * scale + 2.0 * margin,
        }
    }

    fn x(&self, x: f64) -> f64 {
        self.margin + (x - self.x_min) * self.scale
    }

    fn y(&self, y: f64) -> f64 {
        // SVG y grows downward.
        self.margin + (self.y_max - y) * self.scale
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.3}")
}

fn polyline_points(frame: &Frame, pts: impl Iterator<Item = Point>) -> String {
    let mut s = String::new();
    for p in pts {
        let _ = write!(s, "{},{} ", fmt(frame.x(p.x)), fmt(frame.y(p.y)));
    }
    s.trim_end().to_string()
}

/// Trajectory color fading from blue (t=0) to red (t=end).
fn time_color(fraction: f64) -> String {
    let f = fraction.clamp(0.0, 1.0);
    let r = (40.0 + 200.0 * f) as u8;
    let g = 60u8;
    let b = (220.0 - 180.0 * f) as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Render the scenario with optional lead and trajectory overlays.
pub fn render_scenario(
    scenario: &Scenario,
    lead: Option<&LeadPath>,
    trajectory: Option<&[TrajPoint]>,
) -> String {
    let frame = Frame::new(scenario);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"##,
        fmt(frame.width),
        fmt(frame.height),
        fmt(frame.width),
        fmt(frame.height)
    );

    // Workspace bounds.
    let b = scenario.workspace.bounds();
    let _ = writeln!(
        svg,
        r##"  <rect x="{}" y="{}" width="{}" height="{}" fill="white" stroke="black" stroke-width="2"/>"##,
        fmt(frame.x(b.x_min)),
        fmt(frame.y(b.y_max)),
        fmt(b.width() * frame.scale),
        fmt(b.height() * frame.scale)
    );

    // Obstacles.
    for poly in scenario.workspace.obstacles() {
        let _ = writeln!(
            svg,
            r##"  <polygon points="{}" fill="#555555" stroke="#222222"/>"##,
            polyline_points(&frame, poly.vertices().iter().copied())
        );
    }

    // Goal disks with their windows.
    for (i, goal) in scenario.goal_regions().iter().enumerate() {
        let _ = writeln!(
            svg,
            r##"  <circle cx="{}" cy="{}" r="{}" fill="#90ee90" fill-opacity="0.6" stroke="#2e8b57"/>"##,
            fmt(frame.x(goal.center.x)),
            fmt(frame.y(goal.center.y)),
            fmt(goal.radius * frame.scale)
        );
        let label = if goal.interval.is_unbounded() {
            format!("G{i} [0,inf)")
        } else {
            format!("G{i} [{},{}]", goal.interval.start(), goal.interval.end())
        };
        let _ = writeln!(
            svg,
            r##"  <text x="{}" y="{}" font-size="12" fill="#2e8b57">{label}</text>"##,
            fmt(frame.x(goal.center.x) + 8.0),
            fmt(frame.y(goal.center.y) - 8.0)
        );
    }

    // Lead polyline colored per layer.
    if let Some(lead) = lead {
        for layer in 0..lead.layer_count() {
            let span = lead.layer_span(layer);
            let color = LAYER_COLORS[layer % LAYER_COLORS.len()];
            if span.len() >= 2 {
                let _ = writeln!(
                    svg,
                    r##"  <polyline points="{}" fill="none" stroke="{color}" stroke-width="3" stroke-opacity="0.8"/>"##,
                    polyline_points(&frame, span.iter().copied())
                );
            } else {
                let _ = writeln!(
                    svg,
                    r##"  <circle cx="{}" cy="{}" r="4" fill="{color}"/>"##,
                    fmt(frame.x(span[0].x)),
                    fmt(frame.y(span[0].y))
                );
            }
        }
    }

    // Trajectory colored by time.
    if let Some(traj) = trajectory {
        if traj.len() >= 2 {
            let t_end = traj.last().unwrap().t.max(1e-9);
            for w in traj.windows(2) {
                let color = time_color(w[0].t / t_end);
                let _ = writeln!(
                    svg,
                    r##"  <line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="2"/>"##,
                    fmt(frame.x(w[0].state.x)),
                    fmt(frame.y(w[0].state.y)),
                    fmt(frame.x(w[1].state.x)),
                    fmt(frame.y(w[1].state.y))
                );
            }
        }
        if let Some(first) = traj.first() {
            let _ = writeln!(
                svg,
                r##"  <circle cx="{}" cy="{}" r="5" fill="#1f3bb4"/>"##,
                fmt(frame.x(first.state.x)),
                fmt(frame.y(first.state.y))
            );
        }
    }

    svg.push_str("</svg>\n");
    svg
}

/// One planner's aligned cost series: per-run best cost sampled on a common
/// grid (step interpolation).
pub struct CurveGroup {
    pub label: String,
    pub color: String,
    /// grid value -> per-run costs at that grid point.
    pub grid: Vec<f64>,
    pub runs: Vec<Vec<f64>>,
}

/// Mean best-cost-over-time curves with min/max bands, one group per planner.
pub fn plot_cost_curves(groups: &[CurveGroup], x_label: &str) -> String {
    let width = 640.0;
    let height = 420.0;
    let ml = 60.0;
    let mr = 20.0;
    let mt = 20.0;
    let mb = 50.0;

    let x_max = groups
        .iter()
        .flat_map(|g| g.grid.last().copied())
        .fold(1e-9f64, f64::max);
    let y_max = groups
        .iter()
        .flat_map(|g| g.runs.iter().flatten().copied())
        .fold(1e-9f64, f64::max);

    let px = |x: f64| ml + (x / x_max) * (width - ml - mr);
    let py = |y: f64| height - mb - (y / y_max) * (height - mt - mb);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"##
    );
    let _ = writeln!(
        svg,
        r##"  <rect x="0" y="0" width="{width}" height="{height}" fill="white"/>"##
    );
    // Axes.
    let _ = writeln!(
        svg,
        r##"  <line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"##,
        fmt(ml),
        fmt(height - mb),
        fmt(width - mr),
        fmt(height - mb)
    );
    let _ = writeln!(
        svg,
        r##"  <line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"##,
        fmt(ml),
        fmt(mt),
        fmt(ml),
        fmt(height - mb)
    );
    let _ = writeln!(
        svg,
        r##"  <text x="{}" y="{}" font-size="12">{x_label}</text>"##,
        fmt(width / 2.0 - 30.0),
        fmt(height - 12.0)
    );
    let _ = writeln!(
        svg,
        r##"  <text x="12" y="{}" font-size="12" transform="rotate(-90 12 {})">best cost J</text>"##,
        fmt(height / 2.0),
        fmt(height / 2.0)
    );
    let _ = writeln!(
        svg,
        r##"  <text x="{}" y="{}" font-size="10">{}</text>"##,
        fmt(width - mr - 40.0),
        fmt(height - mb + 14.0),
        fmt(x_max)
    );
    let _ = writeln!(
        svg,
        r##"  <text x="{}" y="{}" font-size="10">{}</text>"##,
        fmt(ml - 40.0),
        fmt(mt + 10.0),
        fmt(y_max)
    );

    for (gi, group) in groups.iter().enumerate() {
        if group.grid.is_empty() || group.runs.is_empty() {
            continue;
        }
        let n = group.grid.len();
        let mut mean = vec![0.0; n];
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for run in &group.runs {
            for (k, v) in run.iter().enumerate().take(n) {
                mean[k] += v;
                lo[k] = lo[k].min(*v);
                hi[k] = hi[k].max(*v);
            }
        }
        for m in mean.iter_mut() {
            *m /= group.runs.len() as f64;
        }

        // Min/max band as a closed polygon.
        let mut band = String::new();
        for k in 0..n {
            let _ = write!(band, "{},{} ", fmt(px(group.grid[k])), fmt(py(hi[k])));
        }
        for k in (0..n).rev() {
            let _ = write!(band, "{},{} ", fmt(px(group.grid[k])), fmt(py(lo[k])));
        }
        let _ = writeln!(
            svg,
            r##"  <polygon points="{}" fill="{}" fill-opacity="0.15" stroke="none"/>"##,
            band.trim_end(),
            group.color
        );

        let mut line = String::new();
        for k in 0..n {
            let _ = write!(line, "{},{} ", fmt(px(group.grid[k])), fmt(py(mean[k])));
        }
        let _ = writeln!(
            svg,
            r##"  <polyline points="{}" fill="none" stroke="{}" stroke-width="2"/>"##,
            line.trim_end(),
            group.color
        );
        let _ = writeln!(
            svg,
            r##"  <text x="{}" y="{}" font-size="12" fill="{}">{}</text>"##,
            fmt(width - mr - 120.0),
            fmt(mt + 16.0 + 16.0 * gi as f64),
            group.color,
            group.label
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario() -> Scenario {
        Scenario::from_str_named(
            r##"
schema = 1
seed = 1
formula = "F(dist(x,y; 5,4) <= 0.3)"

[start]
x = 0.5
y = 0.5

[workspace]
x_min = 0.0
x_max = 12.0
y_min = 0.0
y_max = 8.0
"##,
            "render-test",
        )
        .unwrap()
    }

    #[test]
    fn empty_scenario_renders_bounds_and_goal() {
        let svg = render_scenario(&scenario(), None, None);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("<rect"));
        assert!(svg.contains("<circle"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn rendering_is_byte_deterministic() {
        let sc = scenario();
        assert_eq!(render_scenario(&sc, None, None), render_scenario(&sc, None, None));
    }

    #[test]
    fn single_run_curve_equals_its_series() {
        let group = CurveGroup {
            label: "lg".into(),
            color: "#1f77b4".into(),
            grid: vec![0.0, 1.0, 2.0],
            runs: vec![vec![2.0, 1.0, 0.0]],
        };
        let svg = plot_cost_curves(&[group], "seconds");
        assert!(svg.contains("polyline"));
        // Zero-width band: identical duplicate runs produce identical band edges.
        let dup = CurveGroup {
            label: "lg".into(),
            color: "#1f77b4".into(),
            grid: vec![0.0, 1.0, 2.0],
            runs: vec![vec![2.0, 1.0, 0.0], vec![2.0, 1.0, 0.0]],
        };
        let svg2 = plot_cost_curves(&[dup], "seconds");
        assert!(svg2.contains("polygon"));
    }
}
