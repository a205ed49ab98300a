//! Forward-search epistemic planning with pluggable agent perspectives.
//!
//! Goals, preconditions and effect conditions are epistemic formulas that
//! are evaluated lazily at each search node. What each agent can observe is
//! decided by a [`perspective::Perspective`], so knowledge is computed from
//! the state rather than compiled into extra fluents.

pub mod bench;
pub mod dsl;
pub mod epistemic;
pub mod perspective;
pub mod planning;
pub mod search;
pub mod state;

pub use epistemic::{EvalContext, EvalError, Formula, GroupMode, RelationRegistry, Target, Term};
pub use perspective::{Perspective, PerspectiveError, PerspectiveKind, PerspectiveSpec};
pub use state::{AgentId, Anchor, AnchorTerm, Domain, LocalState, State, StateError, Symbol, Value, VarDecl, VarId, VarKind, VarSet};
