//! Epistemic formulas, domain relations and the lazy evaluator.

mod eval;
mod formula;
mod relations;

pub use eval::{and3, or3, EvalContext, EvalError};
pub use formula::{Formula, GroupMode, Target, Term};
pub use relations::{Predicate, Relation, RelationRegistry, COMPARISONS};
