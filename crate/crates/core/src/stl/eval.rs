//! Offline Boolean and quantitative semantics over finite sampled traces.
//!
//! Semantics are pointwise at sample instants: temporal operators take their
//! max/min over the trace samples falling inside the (closed) shifted window.
//! A bounded window containing no sample is an error rather than a silent
//! empty fold; this evaluator doubles as the test oracle for the incremental
//! monitor and must fail loudly instead of guessing.

use thiserror::Error;

use super::ast::{Formula, TimeInterval};

#[derive(Debug, Error, PartialEq)]
pub enum TraceError {
    #[error("trace must be nonempty")]
    Empty,
    #[error("trace must start at t=0, got {0}")]
    NonzeroStart(f64),
    #[error("trace times must be strictly increasing (sample {index})")]
    NonIncreasing { index: usize },
    #[error("trace states must share one dimension (sample {index})")]
    MixedDimensions { index: usize },
}

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("window {window} shifted to t={t} contains no trace sample")]
    EmptyWindow { window: TimeInterval, t: f64 },
}

/// A sampled trajectory: strictly increasing times starting at 0, one state
/// vector per sample, all of equal dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    samples: Vec<(f64, Vec<f64>)>,
}

impl Trace {
    pub fn new(samples: Vec<(f64, Vec<f64>)>) -> Result<Self, TraceError> {
        if samples.is_empty() {
            return Err(TraceError::Empty);
        }
        if samples[0].0 != 0.0 {
            return Err(TraceError::NonzeroStart(samples[0].0));
        }
        let dim = samples[0].1.len();
        for (index, window) in samples.windows(2).enumerate() {
            if window[1].0 <= window[0].0 {
                return Err(TraceError::NonIncreasing { index: index + 1 });
            }
            if window[1].1.len() != dim {
                return Err(TraceError::MixedDimensions { index: index + 1 });
            }
        }
        Ok(Trace { samples })
    }

    pub fn samples(&self) -> &[(f64, Vec<f64>)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn end_time(&self) -> f64 {
        self.samples.last().map(|(t, _)| *t).unwrap_or(0.0)
    }

    /// Indices of samples with `lo <= t <= hi`.
    fn indices_in(&self, lo: f64, hi: f64) -> impl Iterator<Item = usize> + '_ {
        let start = self.samples.partition_point(|(t, _)| *t < lo);
        self.samples[start..]
            .iter()
            .take_while(move |(t, _)| *t <= hi)
            .enumerate()
            .map(move |(k, _)| start + k)
    }

    fn index_at(&self, t: f64) -> usize {
        // Callers evaluate at sample times; fall back to the last sample <= t.
        match self.samples.binary_search_by(|(s, _)| s.partial_cmp(&t).unwrap()) {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        }
    }
}

/// Boolean satisfaction of `phi` by `trace` at evaluation time `t`.
pub fn boolean_sat(trace: &Trace, phi: &Formula, t: f64) -> bool {
    sat_at(trace, phi, trace.index_at(t))
}

fn sat_at(trace: &Trace, phi: &Formula, idx: usize) -> bool {
    let samples = trace.samples();
    let t = samples[idx].0;
    match phi {
        Formula::True => true,
        Formula::Pred(p) => p.holds(&samples[idx].1),
        Formula::Not(inner) => !sat_at(trace, inner, idx),
        Formula::And(lhs, rhs) => sat_at(trace, lhs, idx) && sat_at(trace, rhs, idx),
        Formula::Or(lhs, rhs) => sat_at(trace, lhs, idx) || sat_at(trace, rhs, idx),
        Formula::Until(iv, lhs, rhs) => {
            let shifted = iv.shifted(t);
            trace.indices_in(shifted.start(), shifted.end()).any(|u| {
                sat_at(trace, rhs, u)
                    && trace
                        .indices_in(t, samples[u].0)
                        .filter(|k| *k < u)
                        .all(|k| sat_at(trace, lhs, k))
            })
        }
        Formula::Eventually(iv, inner) => {
            let shifted = iv.shifted(t);
            trace
                .indices_in(shifted.start(), shifted.end())
                .any(|u| sat_at(trace, inner, u))
        }
        Formula::EventuallyUnbounded(inner) => trace
            .indices_in(t, f64::INFINITY)
            .any(|u| sat_at(trace, inner, u)),
        Formula::Globally(iv, inner) => {
            let shifted = iv.shifted(t);
            trace
                .indices_in(shifted.start(), shifted.end())
                .all(|u| sat_at(trace, inner, u))
        }
    }
}

/// Quantitative robustness degree of `phi` over `trace` at time `t`.
pub fn robustness(trace: &Trace, phi: &Formula, t: f64) -> Result<f64, EvalError> {
    rob_at(trace, phi, trace.index_at(t))
}

fn rob_at(trace: &Trace, phi: &Formula, idx: usize) -> Result<f64, EvalError> {
    let samples = trace.samples();
    let t = samples[idx].0;
    match phi {
        Formula::True => Ok(f64::INFINITY),
        Formula::Pred(p) => Ok(p.robustness(&samples[idx].1)),
        Formula::Not(inner) => Ok(-rob_at(trace, inner, idx)?),
        Formula::And(lhs, rhs) => Ok(rob_at(trace, lhs, idx)?.min(rob_at(trace, rhs, idx)?)),
        Formula::Or(lhs, rhs) => Ok(rob_at(trace, lhs, idx)?.max(rob_at(trace, rhs, idx)?)),
        Formula::Until(iv, lhs, rhs) => {
            let shifted = iv.shifted(t);
            let mut best: Option<f64> = None;
            for u in trace.indices_in(shifted.start(), shifted.end()) {
                let mut value = rob_at(trace, rhs, u)?;
                for k in trace.indices_in(t, samples[u].0).filter(|k| *k < u) {
                    value = value.min(rob_at(trace, lhs, k)?);
                }
                best = Some(best.map_or(value, |b: f64| b.max(value)));
            }
            best.ok_or(EvalError::EmptyWindow { window: *iv, t })
        }
        Formula::Eventually(iv, inner) => {
            let shifted = iv.shifted(t);
            let mut best: Option<f64> = None;
            for u in trace.indices_in(shifted.start(), shifted.end()) {
                let value = rob_at(trace, inner, u)?;
                best = Some(best.map_or(value, |b: f64| b.max(value)));
            }
            best.ok_or(EvalError::EmptyWindow { window: *iv, t })
        }
        Formula::EventuallyUnbounded(inner) => {
            let mut best: Option<f64> = None;
            for u in trace.indices_in(t, f64::INFINITY) {
                let value = rob_at(trace, inner, u)?;
                best = Some(best.map_or(value, |b: f64| b.max(value)));
            }
            // t is at most the final sample time, so the suffix is nonempty.
            Ok(best.expect("suffix of a nonempty trace"))
        }
        Formula::Globally(iv, inner) => {
            let shifted = iv.shifted(t);
            let mut worst: Option<f64> = None;
            for u in trace.indices_in(shifted.start(), shifted.end()) {
                let value = rob_at(trace, inner, u)?;
                worst = Some(worst.map_or(value, |w: f64| w.min(value)));
            }
            worst.ok_or(EvalError::EmptyWindow { window: *iv, t })
        }
    }
}
