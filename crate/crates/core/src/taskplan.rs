//! Candidate visit orders of the goal regions, filtered by time-interval
//! precedence.
//!
//! Two bounded goals whose windows share no interior point must be visited in
//! deadline order: the window ending first comes first. Windows touching at a
//! single endpoint count as non-overlapping (a single instant cannot host two
//! visits to disjoint regions), which forces an order there too. Unbounded
//! goals participate in the permutations but generate no constraints.

use itertools::Itertools;
use thiserror::Error;

use crate::stl::{FragmentSpec, TimeInterval};

#[derive(Debug, Error, PartialEq)]
pub enum TaskPlanError {
    #[error("{goals} goals exceed the candidate-plan cap of {cap} (n! explosion guard)")]
    TooManyGoals { goals: usize, cap: usize },
}

/// A visit order: a permutation of goal indices into `FragmentSpec::goals()`.
pub type PlanOrder = Vec<usize>;

/// True iff the two windows share no interior point: `b1 <= a2 or b2 <= a1`.
pub fn no_time_overlap(i1: TimeInterval, i2: TimeInterval) -> bool {
    i1.end() <= i2.start() || i2.end() <= i1.start()
}

/// Precedence constraints (i must precede j) among the fragment's goals.
fn constraints(fragment: &FragmentSpec) -> Vec<(usize, usize)> {
    let goals: Vec<_> = fragment.goals().collect();
    let mut out = Vec::new();
    for i in 0..goals.len() {
        for j in 0..goals.len() {
            if i == j || !goals[i].is_bounded() || !goals[j].is_bounded() {
                continue;
            }
            if no_time_overlap(goals[i].interval, goals[j].interval)
                && goals[i].interval.end() <= goals[j].interval.start()
            {
                out.push((i, j));
            }
        }
    }
    out
}

/// All permutations of the goals that violate no precedence constraint, in
/// lexicographic order of the index sequence.
pub fn candidate_plans(fragment: &FragmentSpec, cap: usize) -> Result<Vec<PlanOrder>, TaskPlanError> {
    let n = fragment.goal_count();
    if n > cap {
        return Err(TaskPlanError::TooManyGoals { goals: n, cap });
    }
    let constraints = constraints(fragment);
    let plans = (0..n)
        .permutations(n)
        .filter(|perm| {
            let mut position = vec![0usize; n];
            for (pos, goal) in perm.iter().enumerate() {
                position[*goal] = pos;
            }
            constraints.iter().all(|(i, j)| position[*i] < position[*j])
        })
        .collect();
    Ok(plans)
}
