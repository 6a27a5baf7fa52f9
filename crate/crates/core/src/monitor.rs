//! Incremental per-node partial robustness over the planner tree.
//!
//! Each temporal operator of the mission formula owns one annotation slot.
//! A slot holds either a real partial-robustness value or the "no value yet"
//! symbol (a bounded window that has never been observed). Child annotations
//! are computed from the parent annotation and the current (state, time)
//! only; the trajectory itself is never replayed.
//!
//! Slot update for a bounded eventually `F[a,b] p`:
//!   - while `t` is inside `[a, b]`: max-accumulate the predicate value,
//!     treating a still-empty slot as the identity;
//!   - outside the window the parent's slot is carried forward unchanged, so
//!     a goal observed in its window is never forgotten after the window
//!     closes.
//! Unbounded eventually max-accumulates at every step. Conjunction folds
//! slots with min, skipping empty slots.

use std::fmt;

use thiserror::Error;

use crate::stl::{Formula, Predicate, TimeInterval};

#[derive(Debug, Error, PartialEq)]
pub enum MonitorError {
    #[error("monitor supports only predicates, conjunction, and eventually: found {0}")]
    Unsupported(String),
    #[error("temporal goals may not nest: {0}")]
    NestedTemporal(String),
    #[error("formula has no temporal goal")]
    NoGoals,
}

/// A slot value: a real partial robustness, or no value yet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Slot {
    Star,
    Value(f64),
}

impl Slot {
    pub fn is_star(&self) -> bool {
        matches!(self, Slot::Star)
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Slot::Star => None,
            Slot::Value(v) => Some(*v),
        }
    }

    fn max_with(self, other: Slot) -> Slot {
        match (self, other) {
            (Slot::Star, s) | (s, Slot::Star) => s,
            (Slot::Value(a), Slot::Value(b)) => Slot::Value(a.max(b)),
        }
    }

    fn min_with(self, other: Slot) -> Slot {
        match (self, other) {
            (Slot::Star, s) | (s, Slot::Star) => s,
            (Slot::Value(a), Slot::Value(b)) => Slot::Value(a.min(b)),
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slot::Star => write!(f, "*"),
            Slot::Value(v) => write!(f, "{v}"),
        }
    }
}

/// Per-node annotation: one slot per temporal operator of the template.
#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    slots: Vec<Slot>,
}

impl Annotation {
    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn slot(&self, index: usize) -> Slot {
        self.slots[index]
    }
}

enum Node {
    And(Box<Node>, Box<Node>),
    /// Bounded eventually with its slot index; `None` interval = unbounded.
    Goal {
        slot: usize,
        window: Option<TimeInterval>,
        body: PredTree,
    },
}

/// Temporal-free body under an eventually: predicates joined by conjunction.
enum PredTree {
    Leaf(Predicate),
    And(Box<PredTree>, Box<PredTree>),
}

impl PredTree {
    fn eval(&self, state: &[f64]) -> f64 {
        match self {
            PredTree::Leaf(p) => p.robustness(state),
            PredTree::And(lhs, rhs) => lhs.eval(state).min(rhs.eval(state)),
        }
    }
}

/// The mission formula's syntax tree with one annotation slot per temporal
/// operator. Immutable and shareable between planner runs.
pub struct MonitorTemplate {
    root: Node,
    slot_count: usize,
    windows: Vec<Option<TimeInterval>>,
}

impl MonitorTemplate {
    pub fn new(phi: &Formula) -> Result<Self, MonitorError> {
        let mut windows = Vec::new();
        let root = build_node(phi, &mut windows)?;
        if windows.is_empty() {
            return Err(MonitorError::NoGoals);
        }
        Ok(MonitorTemplate { root, slot_count: windows.len(), windows })
    }

    pub fn slot_count(&self) -> usize {
        self.slot_count
    }

    /// Shifted window per slot (`None` for unbounded goals).
    pub fn windows(&self) -> &[Option<TimeInterval>] {
        &self.windows
    }

    /// Annotation of the planner-tree root (t = 0): the degenerate case of
    /// the child update with an all-empty parent.
    pub fn annotate_root(&self, state: &[f64], t: f64) -> Annotation {
        let parent = Annotation { slots: vec![Slot::Star; self.slot_count] };
        self.annotate_child(&parent, state, t)
    }

    /// Annotation of a node from its parent's annotation and the current
    /// sample only.
    pub fn annotate_child(&self, parent: &Annotation, state: &[f64], t: f64) -> Annotation {
        debug_assert_eq!(parent.slots.len(), self.slot_count);
        let mut slots = parent.slots.clone();
        update_node(&self.root, &mut slots, state, t);
        Annotation { slots }
    }

    /// Fold the annotation through the syntax tree: min over conjunctions
    /// with empty slots skipped.
    pub fn fold(&self, ann: &Annotation) -> Slot {
        fold_node(&self.root, &ann.slots)
    }

    /// The node cost used by the planner: `-min(folded value, 0)`, with an
    /// all-empty fold costing 0.
    pub fn node_cost(&self, ann: &Annotation) -> f64 {
        match self.fold(ann) {
            Slot::Star => 0.0,
            Slot::Value(v) if v < 0.0 => -v,
            Slot::Value(_) => 0.0,
        }
    }

    /// True when every goal window has been observed and the folded partial
    /// robustness is non-negative.
    pub fn is_satisfied(&self, ann: &Annotation) -> bool {
        ann.slots.iter().all(|s| !s.is_star())
            && matches!(self.fold(ann), Slot::Value(v) if v >= 0.0)
    }
}

fn build_node(phi: &Formula, windows: &mut Vec<Option<TimeInterval>>) -> Result<Node, MonitorError> {
    match phi {
        Formula::And(lhs, rhs) => {
            let l = build_node(lhs, windows)?;
            let r = build_node(rhs, windows)?;
            Ok(Node::And(Box::new(l), Box::new(r)))
        }
        Formula::Eventually(interval, inner) => {
            let body = build_pred_tree(inner)?;
            let slot = windows.len();
            windows.push(Some(*interval));
            Ok(Node::Goal { slot, window: Some(*interval), body })
        }
        Formula::EventuallyUnbounded(inner) => {
            let body = build_pred_tree(inner)?;
            let slot = windows.len();
            windows.push(None);
            Ok(Node::Goal { slot, window: None, body })
        }
        other => Err(MonitorError::Unsupported(other.to_string())),
    }
}

fn build_pred_tree(phi: &Formula) -> Result<PredTree, MonitorError> {
    match phi {
        Formula::Pred(p) => Ok(PredTree::Leaf(p.clone())),
        Formula::And(lhs, rhs) => Ok(PredTree::And(
            Box::new(build_pred_tree(lhs)?),
            Box::new(build_pred_tree(rhs)?),
        )),
        Formula::Eventually(..) | Formula::EventuallyUnbounded(..) | Formula::Until(..)
        | Formula::Globally(..) => Err(MonitorError::NestedTemporal(phi.to_string())),
        other => Err(MonitorError::Unsupported(other.to_string())),
    }
}

fn update_node(node: &Node, slots: &mut [Slot], state: &[f64], t: f64) {
    match node {
        Node::And(lhs, rhs) => {
            update_node(lhs, slots, state, t);
            update_node(rhs, slots, state, t);
        }
        Node::Goal { slot, window, body } => {
            let in_window = match window {
                Some(iv) => iv.contains(t),
                None => true,
            };
            if in_window {
                let now = Slot::Value(body.eval(state));
                slots[*slot] = slots[*slot].max_with(now);
            }
            // Outside the window the inherited parent value stands.
        }
    }
}

fn fold_node(node: &Node, slots: &[Slot]) -> Slot {
    match node {
        Node::And(lhs, rhs) => fold_node(lhs, slots).min_with(fold_node(rhs, slots)),
        Node::Goal { slot, .. } => slots[*slot],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stl::parse_formula;

    fn template(text: &str) -> MonitorTemplate {
        MonitorTemplate::new(&parse_formula(text).unwrap()).unwrap()
    }

    #[test]
    fn root_before_window_is_star() {
        let tpl = template("F[4,5] x > 2");
        let ann = tpl.annotate_root(&[0.0], 0.0);
        assert_eq!(ann.slot(0), Slot::Star);
    }

    #[test]
    fn root_at_window_start_takes_predicate_value() {
        let tpl = template("F[0,5] x > 2");
        let ann = tpl.annotate_root(&[3.0], 0.0);
        assert_eq!(ann.slot(0), Slot::Value(1.0));
    }

    #[test]
    fn unbounded_goal_is_real_from_the_root() {
        let tpl = template("F x > 2");
        let ann = tpl.annotate_root(&[0.0], 0.0);
        assert_eq!(ann.slot(0), Slot::Value(-2.0));
    }

    #[test]
    fn first_in_window_observation_replaces_star() {
        let tpl = template("F[4,5] x > 2");
        let root = tpl.annotate_root(&[0.0], 0.0);
        let child = tpl.annotate_child(&root, &[3.0], 4.2);
        assert_eq!(child.slot(0), Slot::Value(1.0));
    }

    #[test]
    fn max_accumulates_inside_window() {
        let tpl = template("F[4,5] x > 2");
        let root = tpl.annotate_root(&[0.0], 0.0);
        let a = tpl.annotate_child(&root, &[3.0], 4.2);
        let b = tpl.annotate_child(&a, &[2.5], 4.8);
        assert_eq!(b.slot(0), Slot::Value(1.0));
    }

    #[test]
    fn value_survives_past_window_close() {
        let tpl = template("F[4,5] x > 2");
        let root = tpl.annotate_root(&[0.0], 0.0);
        let a = tpl.annotate_child(&root, &[3.0], 4.5);
        let b = tpl.annotate_child(&a, &[-10.0], 7.0);
        assert_eq!(b.slot(0), Slot::Value(1.0));
    }

    #[test]
    fn conjunction_skips_star_slots() {
        let tpl = template("F[0,1] x > 2 & F[4,5] y > 1");
        let ann = tpl.annotate_root(&[5.0, 0.0], 0.5);
        assert_eq!(ann.slot(0), Slot::Value(3.0));
        assert_eq!(ann.slot(1), Slot::Star);
        assert_eq!(tpl.fold(&ann), Slot::Value(3.0));
    }

    #[test]
    fn node_cost_clamps_at_zero() {
        let tpl = template("F x > 2");
        let good = tpl.annotate_root(&[2.5], 0.0);
        assert_eq!(tpl.node_cost(&good), 0.0);
        let bad = tpl.annotate_root(&[1.8], 0.0);
        assert!((tpl.node_cost(&bad) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn all_star_fold_costs_zero() {
        let tpl = template("F[4,5] x > 2");
        let ann = tpl.annotate_root(&[0.0], 0.0);
        assert_eq!(tpl.fold(&ann), Slot::Star);
        assert_eq!(tpl.node_cost(&ann), 0.0);
        assert!(!tpl.is_satisfied(&ann));
    }

    #[test]
    fn satisfaction_requires_all_windows_observed_and_nonnegative_fold() {
        let tpl = template("F[0,1] x > 2 & F[2,3] x > 2");
        let root = tpl.annotate_root(&[2.1], 0.0);
        assert!(!tpl.is_satisfied(&root)); // second window unobserved
        let later = tpl.annotate_child(&root, &[2.4], 2.5);
        assert!(tpl.is_satisfied(&later));
        let losing = tpl.annotate_child(&root, &[1.0], 2.5);
        assert!(!tpl.is_satisfied(&losing)); // fold negative
    }

    #[test]
    fn rejects_unsupported_operators() {
        for text in ["G[0,1] x > 0", "(x > 0) U[0,1] (y > 0)", "!F x > 0", "F x > 0 | F y > 0", "true"] {
            let phi = parse_formula(text).unwrap();
            assert!(MonitorTemplate::new(&phi).is_err(), "{text} should be rejected");
        }
        let nested = parse_formula("F[0,2] F x > 0").unwrap();
        assert!(matches!(
            MonitorTemplate::new(&nested),
            Err(MonitorError::NestedTemporal(_))
        ));
    }

    #[test]
    fn satisfied_implies_zero_cost() {
        let tpl = template("F[0,1] x > 2 & F[2,3] x > 2");
        let root = tpl.annotate_root(&[2.1], 0.0);
        let later = tpl.annotate_child(&root, &[2.4], 2.5);
        assert!(tpl.is_satisfied(&later));
        assert_eq!(tpl.node_cost(&later), 0.0);
    }
}
