//! STL formula representation: intervals, predicates, and the syntax tree.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum IntervalError {
    #[error("interval bound violation: a={a} > b={b}")]
    BoundOrder { a: f64, b: f64 },
    #[error("interval start must be finite and non-negative, got {a}")]
    BadStart { a: f64 },
}

/// A time window `[a, b]` in seconds. `b` may be `+inf` for unbounded goals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeInterval {
    a: f64,
    b: f64,
}

impl TimeInterval {
    pub fn new(a: f64, b: f64) -> Result<Self, IntervalError> {
        if !a.is_finite() || a < 0.0 {
            return Err(IntervalError::BadStart { a });
        }
        if !(a <= b) {
            return Err(IntervalError::BoundOrder { a, b });
        }
        Ok(TimeInterval { a, b })
    }

    /// The `[0, +inf)` window of unbounded goals.
    pub fn unbounded() -> Self {
        TimeInterval { a: 0.0, b: f64::INFINITY }
    }

    pub fn start(&self) -> f64 {
        self.a
    }

    pub fn end(&self) -> f64 {
        self.b
    }

    pub fn is_unbounded(&self) -> bool {
        self.b.is_infinite()
    }

    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    /// Closed-interval membership: `a <= t <= b`.
    pub fn contains(&self, t: f64) -> bool {
        self.a <= t && t <= self.b
    }

    /// The window shifted by an evaluation time offset: `t + [a, b]`.
    pub fn shifted(&self, t: f64) -> TimeInterval {
        TimeInterval { a: self.a + t, b: self.b + t }
    }
}

impl fmt::Display for TimeInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.a, self.b)
    }
}

/// Order relation of a predicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Ge,
    Gt,
    Le,
    Lt,
}

impl Relation {
    pub fn symbol(&self) -> &'static str {
        match self {
            Relation::Ge => ">=",
            Relation::Gt => ">",
            Relation::Le => "<=",
            Relation::Lt => "<",
        }
    }
}

/// Indices of named state variables accepted by linear predicates.
pub const VAR_NAMES: [&str; 3] = ["x", "y", "theta"];

/// An atomic predicate over the state vector.
///
/// `Linear` compares a linear projection of the state against a threshold.
/// `Disk` is the reach-region form `dist((x,y); c) <= radius`, always over the
/// planar projection of the state.
#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    Linear {
        /// Coefficient per state dimension (missing trailing dims read as 0).
        coeffs: Vec<f64>,
        relation: Relation,
        threshold: f64,
    },
    Disk {
        center: (f64, f64),
        radius: f64,
    },
}

impl Predicate {
    pub fn disk(cx: f64, cy: f64, radius: f64) -> Self {
        Predicate::Disk { center: (cx, cy), radius }
    }

    /// Quantitative robustness of the predicate at one state sample.
    ///
    /// Strict relations share the margin of their non-strict counterparts.
    pub fn robustness(&self, state: &[f64]) -> f64 {
        match self {
            Predicate::Linear { coeffs, relation, threshold } => {
                let value: f64 = coeffs
                    .iter()
                    .enumerate()
                    .map(|(i, c)| c * state.get(i).copied().unwrap_or(0.0))
                    .sum();
                match relation {
                    Relation::Ge | Relation::Gt => value - threshold,
                    Relation::Le | Relation::Lt => threshold - value,
                }
            }
            Predicate::Disk { center, radius } => {
                let dx = state.first().copied().unwrap_or(0.0) - center.0;
                let dy = state.get(1).copied().unwrap_or(0.0) - center.1;
                radius - (dx * dx + dy * dy).sqrt()
            }
        }
    }

    /// Boolean satisfaction at one state sample, with strict relations strict.
    pub fn holds(&self, state: &[f64]) -> bool {
        let margin = self.robustness(state);
        match self {
            Predicate::Linear { relation: Relation::Gt | Relation::Lt, .. } => margin > 0.0,
            _ => margin >= 0.0,
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::Linear { coeffs, relation, threshold } => {
                let mut first = true;
                for (i, c) in coeffs.iter().enumerate() {
                    if *c == 0.0 {
                        continue;
                    }
                    let name = VAR_NAMES.get(i).copied().unwrap_or("?");
                    if first {
                        if *c == 1.0 {
                            write!(f, "{name}")?;
                        } else if *c == -1.0 {
                            write!(f, "-{name}")?;
                        } else {
                            write!(f, "{c}*{name}")?;
                        }
                        first = false;
                    } else if *c < 0.0 {
                        if *c == -1.0 {
                            write!(f, " - {name}")?;
                        } else {
                            write!(f, " - {}*{name}", -c)?;
                        }
                    } else if *c == 1.0 {
                        write!(f, " + {name}")?;
                    } else {
                        write!(f, " + {c}*{name}")?;
                    }
                }
                if first {
                    write!(f, "0")?;
                }
                write!(f, " {} {}", relation.symbol(), threshold)
            }
            Predicate::Disk { center, radius } => {
                write!(f, "dist(x,y; {},{}) <= {}", center.0, center.1, radius)
            }
        }
    }
}

/// STL syntax tree over predicates, Boolean connectives, and bounded
/// temporal operators, plus the unbounded eventually used for open-ended goals.
#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    True,
    Pred(Predicate),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Until(TimeInterval, Box<Formula>, Box<Formula>),
    Eventually(TimeInterval, Box<Formula>),
    EventuallyUnbounded(Box<Formula>),
    Globally(TimeInterval, Box<Formula>),
}

impl Formula {
    pub fn and(lhs: Formula, rhs: Formula) -> Formula {
        Formula::And(Box::new(lhs), Box::new(rhs))
    }

    pub fn or(lhs: Formula, rhs: Formula) -> Formula {
        Formula::Or(Box::new(lhs), Box::new(rhs))
    }

    pub fn not(inner: Formula) -> Formula {
        Formula::Not(Box::new(inner))
    }

    pub fn eventually(interval: TimeInterval, inner: Formula) -> Formula {
        Formula::Eventually(interval, Box::new(inner))
    }

    pub fn eventually_unbounded(inner: Formula) -> Formula {
        Formula::EventuallyUnbounded(Box::new(inner))
    }

    pub fn globally(interval: TimeInterval, inner: Formula) -> Formula {
        Formula::Globally(interval, Box::new(inner))
    }

    pub fn until(interval: TimeInterval, lhs: Formula, rhs: Formula) -> Formula {
        Formula::Until(interval, Box::new(lhs), Box::new(rhs))
    }
}

// Precedence levels for printing with minimal parentheses:
// atoms and unary operators bind tightest, then U, then &, then |.
fn precedence(f: &Formula) -> u8 {
    match f {
        Formula::Or(..) => 0,
        Formula::And(..) => 1,
        Formula::Until(..) => 2,
        _ => 3,
    }
}

fn fmt_child(child: &Formula, parent_prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if precedence(child) < parent_prec {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::Pred(p) => write!(f, "{p}"),
            Formula::Not(inner) => {
                write!(f, "!")?;
                fmt_child(inner, 3, f)
            }
            Formula::And(lhs, rhs) => {
                fmt_child(lhs, 1, f)?;
                write!(f, " & ")?;
                fmt_child(rhs, 2, f)
            }
            Formula::Or(lhs, rhs) => {
                fmt_child(lhs, 0, f)?;
                write!(f, " | ")?;
                fmt_child(rhs, 1, f)
            }
            Formula::Until(iv, lhs, rhs) => {
                fmt_child(lhs, 3, f)?;
                write!(f, " U{iv} ")?;
                fmt_child(rhs, 3, f)
            }
            Formula::Eventually(iv, inner) => {
                write!(f, "F{iv} ")?;
                fmt_child(inner, 3, f)
            }
            Formula::EventuallyUnbounded(inner) => {
                write!(f, "F ")?;
                fmt_child(inner, 3, f)
            }
            Formula::Globally(iv, inner) => {
                write!(f, "G{iv} ")?;
                fmt_child(inner, 3, f)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_rejects_reversed_bounds() {
        assert_eq!(
            TimeInterval::new(3.0, 1.0),
            Err(IntervalError::BoundOrder { a: 3.0, b: 1.0 })
        );
        assert!(TimeInterval::new(1.0, 1.0).is_ok());
        assert!(TimeInterval::new(0.0, f64::INFINITY).is_ok());
        assert!(TimeInterval::new(-1.0, 1.0).is_err());
    }

    #[test]
    fn disk_robustness_is_signed_distance_margin() {
        let p = Predicate::disk(5.0, 4.0, 0.3);
        assert!((p.robustness(&[5.0, 4.0]) - 0.3).abs() < 1e-12);
        assert!((p.robustness(&[5.0, 5.0]) - (0.3 - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn linear_robustness_margins() {
        let p = Predicate::Linear {
            coeffs: vec![1.0, 0.0],
            relation: Relation::Ge,
            threshold: 2.0,
        };
        assert_eq!(p.robustness(&[5.0, 0.0]), 3.0);
        let q = Predicate::Linear {
            coeffs: vec![1.0, -2.0],
            relation: Relation::Le,
            threshold: 1.0,
        };
        assert_eq!(q.robustness(&[1.0, 1.0]), 2.0);
    }
}
