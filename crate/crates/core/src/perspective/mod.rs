//! Agent perspective functions.
//!
//! A perspective maps a local state to the part of it an agent can observe.
//! Every built-in is expressed through a single visibility predicate,
//! [`Perspective::sees`], which may answer "undetermined" when the local state
//! lacks the information needed to decide (for example the observer's own
//! pose). `apply` keeps exactly the entries whose visibility is positively
//! established, which makes every built-in contracting and idempotent.

mod euclidean;
mod rooms;
mod social;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use euclidean::Euclidean2d;
pub use rooms::{latch_name, LatchedRooms, LATCH_PREFIX};
pub use social::Social;

use crate::state::{AgentId, Anchor, AnchorTerm, LocalState, Value, VarDecl, VarId, VarSet};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PerspectiveError {
    #[error("unknown agent #{0}")]
    UnknownAgent(AgentId),
    #[error("perspective {kind}: missing parameter `{param}`")]
    MissingParam { kind: &'static str, param: &'static str },
    #[error("perspective {kind}: bad parameter `{param}`: {reason}")]
    BadParam {
        kind: &'static str,
        param: String,
        reason: String,
    },
    #[error("variable `{var}`: {reason}")]
    BadAnchor { var: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PerspectiveKind {
    Full,
    Euclidean2d,
    LatchedRooms,
    Social,
}

impl PerspectiveKind {
    pub fn name(self) -> &'static str {
        match self {
            PerspectiveKind::Full => "full",
            PerspectiveKind::Euclidean2d => "euclidean2d",
            PerspectiveKind::LatchedRooms => "latched-rooms",
            PerspectiveKind::Social => "social",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "full" => PerspectiveKind::Full,
            "euclidean2d" => PerspectiveKind::Euclidean2d,
            "latched-rooms" => PerspectiveKind::LatchedRooms,
            "social" => PerspectiveKind::Social,
            _ => return None,
        })
    }
}

impl fmt::Display for PerspectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A raw perspective parameter as written in a problem file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParamValue {
    Int(i64),
    Ident(String),
    Tuple(Vec<ParamValue>),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(i) => write!(f, "{i}"),
            ParamValue::Ident(s) => f.write_str(s),
            ParamValue::Tuple(items) => {
                f.write_str("(")?;
                for (k, it) in items.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{it}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Named, parameterised visibility rule. Parameters may repeat (one `pose`
/// entry per agent, for instance) and keep their written order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerspectiveSpec {
    pub kind: PerspectiveKind,
    pub params: Vec<(String, ParamValue)>,
}

impl PerspectiveSpec {
    pub fn full() -> Self {
        PerspectiveSpec {
            kind: PerspectiveKind::Full,
            params: Vec::new(),
        }
    }

    /// Resolves names against the problem vocabulary and builds the rule.
    pub fn build(
        &self,
        agents: &[String],
        vars: &[VarDecl],
    ) -> Result<Arc<dyn Perspective>, PerspectiveError> {
        let cx = Vocab { agents, vars };
        Ok(match self.kind {
            PerspectiveKind::Full => Arc::new(Full),
            PerspectiveKind::Euclidean2d => Arc::new(Euclidean2d::build(&self.params, &cx)?),
            PerspectiveKind::LatchedRooms => Arc::new(LatchedRooms::build(&self.params, &cx)?),
            PerspectiveKind::Social => Arc::new(Social::build(&self.params, &cx)?),
        })
    }
}

/// Visibility rule for one problem. Implementations must be pure.
///
/// `sees` must be monotone: if it returns `Some(b)` for a local state, it
/// returns `Some(b)` for every larger local state of the same global state.
/// It must also only depend on entries it itself reports as visible, which
/// is what makes `apply` idempotent.
pub trait Perspective: Send + Sync + fmt::Debug {
    fn num_agents(&self) -> usize;

    /// Whether `agent` observes `var` given the information in `l`.
    /// `None` means `l` is too small to decide.
    fn sees(&self, agent: AgentId, var: VarId, l: &LocalState) -> Option<bool>;

    /// The agent's local state: entries of `l` it is known to observe.
    fn apply(&self, agent: AgentId, l: &LocalState) -> LocalState {
        let keep = VarSet::from_iter(
            l.num_vars(),
            l.domain()
                .iter()
                .filter(|&v| self.sees(agent, v, l) == Some(true)),
        );
        l.with_mask(keep)
    }
}

/// Checked entry point: rejects agents the perspective does not know.
pub fn apply_perspective(
    p: &dyn Perspective,
    agent: AgentId,
    l: &LocalState,
) -> Result<LocalState, PerspectiveError> {
    if agent >= p.num_agents() {
        return Err(PerspectiveError::UnknownAgent(agent));
    }
    Ok(p.apply(agent, l))
}

/// Full observability. The agent count is irrelevant to the rule and only
/// used for argument checking, so it is left unbounded.
#[derive(Debug, Clone, Copy)]
pub struct Full;

impl Perspective for Full {
    fn num_agents(&self) -> usize {
        usize::MAX
    }

    fn sees(&self, _agent: AgentId, _var: VarId, _l: &LocalState) -> Option<bool> {
        Some(true)
    }

    fn apply(&self, _agent: AgentId, l: &LocalState) -> LocalState {
        l.clone()
    }
}

/// Name lookup shared by the built-in constructors.
pub(crate) struct Vocab<'a> {
    pub agents: &'a [String],
    pub vars: &'a [VarDecl],
}

impl Vocab<'_> {
    pub fn agent(&self, kind: &'static str, p: &ParamValue) -> Result<AgentId, PerspectiveError> {
        let name = ident(kind, p)?;
        self.agents
            .iter()
            .position(|a| a == name)
            .ok_or_else(|| bad(kind, name, "not a declared agent"))
    }

    pub fn var(&self, kind: &'static str, p: &ParamValue) -> Result<VarId, PerspectiveError> {
        let name = ident(kind, p)?;
        self.var_named(name)
            .ok_or_else(|| bad(kind, name, "not a declared variable"))
    }

    pub fn var_named(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn agent_named(&self, name: &str) -> Option<AgentId> {
        self.agents.iter().position(|a| a == name)
    }
}

pub(crate) fn ident<'p>(kind: &'static str, p: &'p ParamValue) -> Result<&'p str, PerspectiveError> {
    match p {
        ParamValue::Ident(s) => Ok(s),
        other => Err(bad(kind, &other.to_string(), "expected an identifier")),
    }
}

pub(crate) fn tuple<'p>(
    kind: &'static str,
    name: &str,
    p: &'p ParamValue,
    len: usize,
) -> Result<&'p [ParamValue], PerspectiveError> {
    match p {
        ParamValue::Tuple(items) if items.len() == len => Ok(items),
        _ => Err(bad(kind, name, &format!("expected a {len}-tuple"))),
    }
}

pub(crate) fn bad(kind: &'static str, param: &str, reason: &str) -> PerspectiveError {
    PerspectiveError::BadParam {
        kind,
        param: param.to_string(),
        reason: reason.to_string(),
    }
}

/// Reads an anchor term; `None` when it names a variable absent from `l`.
#[inline]
pub(crate) fn term_value<'a>(t: &'a AnchorTerm, l: &'a LocalState) -> Option<&'a Value> {
    match t {
        AnchorTerm::Lit(v) => Some(v),
        AnchorTerm::Var(v) => l.get(*v),
    }
}

/// Anchors may only reference variables that carry the very same anchor.
/// Visibility of an anchored entry then implies visibility of everything it
/// was computed from, so applying a perspective twice changes nothing.
pub(crate) fn check_anchor_closure(vars: &[VarDecl]) -> Result<(), PerspectiveError> {
    for decl in vars {
        let terms: Vec<&AnchorTerm> = match &decl.anchor {
            Anchor::Pos(x, y) => vec![x, y],
            Anchor::Room(r) => vec![r],
            _ => continue,
        };
        for t in terms {
            if let AnchorTerm::Var(u) = t {
                if vars[*u].anchor != decl.anchor {
                    return Err(PerspectiveError::BadAnchor {
                        var: decl.name.clone(),
                        reason: format!(
                            "anchor refers to `{}`, which must carry the same anchor",
                            vars[*u].name
                        ),
                    });
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::State;

    #[test]
    fn full_is_identity() {
        let s = State::new(vec![Value::Int(1), Value::Bool(true)]).to_local();
        assert_eq!(Full.apply(0, &s), s);
        let part = s.restrict(&VarSet::from_iter(2, [1]));
        assert_eq!(apply_perspective(&Full, 3, &part).unwrap(), part);
    }

    #[test]
    fn kind_names_round_trip() {
        for k in [
            PerspectiveKind::Full,
            PerspectiveKind::Euclidean2d,
            PerspectiveKind::LatchedRooms,
            PerspectiveKind::Social,
        ] {
            assert_eq!(PerspectiveKind::from_name(k.name()), Some(k));
        }
        assert_eq!(PerspectiveKind::from_name("kripke"), None);
    }
}
