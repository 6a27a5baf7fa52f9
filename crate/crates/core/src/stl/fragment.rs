//! Extraction of the planning fragment: a top-level conjunction of
//! time-bounded and unbounded reach-region goals over disk predicates.

use thiserror::Error;

use super::ast::{Formula, Predicate, TimeInterval};

#[derive(Debug, Error, PartialEq)]
pub enum FragmentError {
    #[error("formula is not in the planning fragment: {offender} ({reason})")]
    NotInFragment { offender: String, reason: String },
    #[error("goal regions must be pairwise disjoint disks: goals {i} and {j} overlap")]
    OverlappingRegions { i: usize, j: usize },
}

/// A reach-region goal: be inside the disk at some instant of the window.
#[derive(Debug, Clone, PartialEq)]
pub struct Goal {
    pub center: (f64, f64),
    pub radius: f64,
    pub interval: TimeInterval,
}

impl Goal {
    pub fn is_bounded(&self) -> bool {
        !self.interval.is_unbounded()
    }

    pub fn predicate(&self) -> Predicate {
        Predicate::disk(self.center.0, self.center.1, self.radius)
    }
}

/// The planning fragment: bounded goals (finite deadline windows) followed by
/// unbounded goals, in the formula's textual order.
#[derive(Debug, Clone, PartialEq)]
pub struct FragmentSpec {
    pub bounded: Vec<Goal>,
    pub unbounded: Vec<Goal>,
}

impl FragmentSpec {
    /// All goals, bounded first, then unbounded; `PlanOrder` indices refer to
    /// positions in this sequence.
    pub fn goals(&self) -> impl Iterator<Item = &Goal> {
        self.bounded.iter().chain(self.unbounded.iter())
    }

    pub fn goal(&self, index: usize) -> &Goal {
        if index < self.bounded.len() {
            &self.bounded[index]
        } else {
            &self.unbounded[index - self.bounded.len()]
        }
    }

    pub fn goal_count(&self) -> usize {
        self.bounded.len() + self.unbounded.len()
    }

    /// Reassemble the fragment formula (conjunction in goal order).
    pub fn to_formula(&self) -> Formula {
        let mut terms = Vec::new();
        for g in &self.bounded {
            terms.push(Formula::eventually(g.interval, Formula::Pred(g.predicate())));
        }
        for g in &self.unbounded {
            terms.push(Formula::eventually_unbounded(Formula::Pred(g.predicate())));
        }
        let mut iter = terms.into_iter();
        let first = iter.next().expect("fragment has at least one goal");
        iter.fold(first, Formula::and)
    }
}

fn disjoint(a: &Goal, b: &Goal) -> bool {
    let dx = a.center.0 - b.center.0;
    let dy = a.center.1 - b.center.1;
    (dx * dx + dy * dy).sqrt() > a.radius + b.radius
}

fn reject(offender: &Formula, reason: &str) -> FragmentError {
    FragmentError::NotInFragment {
        offender: offender.to_string(),
        reason: reason.to_string(),
    }
}

fn collect_conjuncts<'a>(phi: &'a Formula, out: &mut Vec<&'a Formula>) {
    match phi {
        Formula::And(lhs, rhs) => {
            collect_conjuncts(lhs, out);
            collect_conjuncts(rhs, out);
        }
        other => out.push(other),
    }
}

/// Check that `phi` is a conjunction of eventually-reach-disk goals and split
/// it into bounded and unbounded goal lists.
pub fn extract_fragment(phi: &Formula) -> Result<FragmentSpec, FragmentError> {
    let mut conjuncts = Vec::new();
    collect_conjuncts(phi, &mut conjuncts);

    let mut bounded = Vec::new();
    let mut unbounded = Vec::new();
    for term in conjuncts {
        match term {
            Formula::Eventually(interval, inner) => {
                let goal_pred = disk_of(inner, term)?;
                bounded.push(Goal {
                    center: goal_pred.0,
                    radius: goal_pred.1,
                    interval: *interval,
                });
            }
            Formula::EventuallyUnbounded(inner) => {
                let goal_pred = disk_of(inner, term)?;
                unbounded.push(Goal {
                    center: goal_pred.0,
                    radius: goal_pred.1,
                    interval: TimeInterval::unbounded(),
                });
            }
            Formula::True => return Err(reject(term, "no goal present")),
            Formula::Not(_) => return Err(reject(term, "negated goal")),
            Formula::Or(..) => return Err(reject(term, "disjunction of goals")),
            Formula::Until(..) | Formula::Globally(..) => {
                return Err(reject(term, "unsupported temporal operator"))
            }
            Formula::Pred(_) => return Err(reject(term, "predicate without eventually")),
            Formula::And(..) => unreachable!("conjunctions were flattened"),
        }
    }

    let spec = FragmentSpec { bounded, unbounded };
    if spec.goal_count() == 0 {
        return Err(reject(phi, "no goal present"));
    }
    let goals: Vec<&Goal> = spec.goals().collect();
    for i in 0..goals.len() {
        for j in i + 1..goals.len() {
            if !disjoint(goals[i], goals[j]) {
                return Err(FragmentError::OverlappingRegions { i, j });
            }
        }
    }
    Ok(spec)
}

fn disk_of(inner: &Formula, goal: &Formula) -> Result<((f64, f64), f64), FragmentError> {
    match inner {
        Formula::Pred(Predicate::Disk { center, radius }) => Ok((*center, *radius)),
        Formula::Eventually(..) | Formula::EventuallyUnbounded(..) | Formula::Until(..)
        | Formula::Globally(..) => Err(reject(goal, "nested temporal operator")),
        _ => Err(reject(goal, "goal body must be a disk predicate")),
    }
}
