//! STL formulas: syntax tree, text parser, offline Boolean and quantitative
//! semantics over sampled traces, and planning-fragment extraction.

mod ast;
mod eval;
mod fragment;
mod parser;

pub use ast::{Formula, IntervalError, Predicate, Relation, TimeInterval, VAR_NAMES};
pub use eval::{boolean_sat, robustness, EvalError, Trace, TraceError};
pub use fragment::{extract_fragment, FragmentError, FragmentSpec, Goal};
pub use parser::{parse_formula, ParseError};
