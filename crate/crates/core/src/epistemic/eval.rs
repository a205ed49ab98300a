//! Lazy, three-valued evaluation of epistemic formulas.
//!
//! Inside nested operators a formula is evaluated in an agent's local state,
//! which can be missing variables. The evaluator then answers `None`
//! ("undetermined from here") instead of guessing. Seeing a formula means
//! being able to determine its truth value, so an agent sees a nested
//! formula exactly when evaluating it in that agent's local state gives a
//! definite answer. At the top level `None` counts as false.
//!
//! Every `None` produced from a local state `l` stays `None` or becomes
//! definite in larger local states of the same global state, and definite
//! answers never flip. On a complete state every answer is definite.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rustc_hash::FxHashMap;
use smallvec::SmallVec;
use thiserror::Error;

use super::formula::{Formula, GroupMode, Target, Term};
use super::relations::RelationRegistry;
use crate::perspective::Perspective;
use crate::state::{AgentId, LocalState, State, StateError, Value, VarId, VarSet};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("relation `{name}` takes {expected} arguments, got {got}")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("unknown agent #{0}")]
    UnknownAgent(AgentId),
    #[error("unknown variable #{0}")]
    UnknownVar(VarId),
    #[error("empty agent group")]
    EmptyGroup,
    #[error("operator parameter #{0} used outside an operator")]
    UnboundParam(usize),
    #[error(transparent)]
    State(#[from] StateError),
}

/// Kleene conjunction.
#[inline]
pub fn and3(a: Option<bool>, b: Option<bool>) -> Option<bool> {
    match (a, b) {
        (Some(false), _) | (_, Some(false)) => Some(false),
        (Some(true), Some(true)) => Some(true),
        _ => None,
    }
}

/// Kleene disjunction.
#[inline]
pub fn or3(a: Option<bool>, b: Option<bool>) -> Option<bool> {
    match (a, b) {
        (Some(true), _) | (_, Some(true)) => Some(true),
        (Some(false), Some(false)) => Some(false),
        _ => None,
    }
}

/// Everything an evaluation needs: perspectives, relations and the counter
/// of epistemic operator evaluations.
#[derive(Debug, Clone)]
pub struct EvalContext {
    perspective: Arc<dyn Perspective>,
    relations: Arc<RelationRegistry>,
    num_agents: usize,
    num_vars: usize,
    calls: Arc<AtomicU64>,
}

impl EvalContext {
    pub fn new(
        perspective: Arc<dyn Perspective>,
        relations: Arc<RelationRegistry>,
        num_agents: usize,
        num_vars: usize,
    ) -> Self {
        EvalContext {
            perspective,
            relations,
            num_agents,
            num_vars,
            calls: Arc::new(AtomicU64::new(0)),
        }
    }

    pub fn perspective(&self) -> &dyn Perspective {
        &*self.perspective
    }

    pub fn relations(&self) -> &RelationRegistry {
        &self.relations
    }

    pub fn num_agents(&self) -> usize {
        self.num_agents
    }

    /// Number of epistemic operator nodes evaluated so far, over the whole
    /// lifetime of this context and its clones.
    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    /// Truth of `f` in `l`; undetermined counts as false.
    pub fn eval(&self, f: &Formula, l: &LocalState) -> Result<bool, EvalError> {
        Ok(self.eval3(f, l)? == Some(true))
    }

    pub fn eval_state(&self, f: &Formula, s: &State) -> Result<bool, EvalError> {
        self.eval(f, &s.to_local())
    }

    /// Three-valued truth of `f` in `l`.
    pub fn eval3(&self, f: &Formula, l: &LocalState) -> Result<Option<bool>, EvalError> {
        let mut run = Run::new(self);
        let out = run.eval3(f, l);
        self.calls.fetch_add(run.calls, Ordering::Relaxed);
        out
    }

    /// The agent's local state, checked.
    pub fn apply_perspective(&self, agent: AgentId, l: &LocalState) -> Result<LocalState, EvalError> {
        self.check_agent(agent)?;
        Ok(self.perspective.apply(agent, l))
    }

    /// Largest local state below `l` that every agent in `group` sees in full.
    pub fn fc(&self, group: &[AgentId], l: &LocalState) -> Result<LocalState, EvalError> {
        Ok(self.fc_counted(group, l)?.0)
    }

    /// Like [`fc`](Self::fc), also returning how many intersection steps
    /// were applied before the result stopped changing.
    pub fn fc_counted(&self, group: &[AgentId], l: &LocalState) -> Result<(LocalState, usize), EvalError> {
        Run::new(self).fc(group, l)
    }

    /// Checks relation names, arities, agents and variables.
    pub fn validate(&self, f: &Formula) -> Result<(), EvalError> {
        let mut err = None;
        f.visit(&mut |g| {
            if err.is_some() {
                return;
            }
            let r = match g {
                Formula::Rel { name, args } => self.check_rel(name, args.len()).and_then(|_| {
                    args.iter().try_for_each(|t| match t {
                        Term::Var(v) => self.check_var(*v),
                        _ => Ok(()),
                    })
                }),
                Formula::SeesVar(i, v) => self.check_agent(*i).and_then(|_| self.check_var(*v)),
                Formula::Sees(i, _) | Formula::Knows(i, _) => self.check_agent(*i),
                Formula::GroupSees(_, grp, t) => self.check_group(grp).and_then(|_| match t {
                    Target::Var(v) => self.check_var(*v),
                    Target::Formula(_) => Ok(()),
                }),
                Formula::GroupKnows(_, grp, _) => self.check_group(grp),
                _ => Ok(()),
            };
            if let Err(e) = r {
                err = Some(e);
            }
        });
        err.map_or(Ok(()), Err)
    }

    fn check_rel(&self, name: &str, got: usize) -> Result<(), EvalError> {
        let rel = self
            .relations
            .get(name)
            .ok_or_else(|| EvalError::UnknownRelation(name.to_string()))?;
        if rel.arity != got {
            return Err(EvalError::Arity {
                name: name.to_string(),
                expected: rel.arity,
                got,
            });
        }
        Ok(())
    }

    fn check_agent(&self, agent: AgentId) -> Result<(), EvalError> {
        if agent < self.num_agents {
            Ok(())
        } else {
            Err(EvalError::UnknownAgent(agent))
        }
    }

    fn check_var(&self, v: VarId) -> Result<(), EvalError> {
        if v < self.num_vars {
            Ok(())
        } else {
            Err(EvalError::UnknownVar(v))
        }
    }

    fn check_group(&self, group: &[AgentId]) -> Result<(), EvalError> {
        if group.is_empty() {
            return Err(EvalError::EmptyGroup);
        }
        group.iter().try_for_each(|&i| self.check_agent(i))
    }
}

/// State of one top-level evaluation: perspective memo and call tally.
struct Run<'a> {
    ctx: &'a EvalContext,
    memo: FxHashMap<(AgentId, VarSet), LocalState>,
    calls: u64,
}

impl<'a> Run<'a> {
    fn new(ctx: &'a EvalContext) -> Self {
        Run {
            ctx,
            memo: FxHashMap::default(),
            calls: 0,
        }
    }

    fn apply(&mut self, agent: AgentId, l: &LocalState) -> Result<LocalState, EvalError> {
        self.ctx.check_agent(agent)?;
        let key = (agent, l.domain().clone());
        if let Some(hit) = self.memo.get(&key) {
            return Ok(hit.clone());
        }
        let out = self.ctx.perspective.apply(agent, l);
        self.memo.insert(key, out.clone());
        Ok(out)
    }

    fn sees(&self, agent: AgentId, v: VarId, l: &LocalState) -> Result<Option<bool>, EvalError> {
        self.ctx.check_agent(agent)?;
        Ok(self.ctx.perspective.sees(agent, v, l))
    }

    fn fc(&mut self, group: &[AgentId], l: &LocalState) -> Result<(LocalState, usize), EvalError> {
        if group.is_empty() {
            return Err(EvalError::EmptyGroup);
        }
        let mut cur = l.clone();
        let mut steps = 0;
        loop {
            let mut next = self.apply(group[0], &cur)?;
            for &i in &group[1..] {
                next = next.intersect(&self.apply(i, &cur)?)?;
            }
            steps += 1;
            if next.domain() == cur.domain() {
                return Ok((cur, steps));
            }
            cur = next;
        }
    }

    fn rel(&self, name: &str, args: &[Term], l: &LocalState) -> Result<Option<bool>, EvalError> {
        let rel = self
            .ctx
            .relations
            .get(name)
            .ok_or_else(|| EvalError::UnknownRelation(name.to_string()))?;
        if rel.arity != args.len() {
            return Err(EvalError::Arity {
                name: name.to_string(),
                expected: rel.arity,
                got: args.len(),
            });
        }
        let mut vals: SmallVec<[Value; 6]> = SmallVec::new();
        for t in args {
            match t {
                Term::Var(v) => match l.get(*v) {
                    Some(x) => vals.push(x.clone()),
                    None => return Ok(None),
                },
                Term::Lit(x) => vals.push(x.clone()),
                Term::Param(k) => return Err(EvalError::UnboundParam(*k)),
            }
        }
        Ok(Some(rel.holds(&vals)))
    }

    fn eval3(&mut self, f: &Formula, l: &LocalState) -> Result<Option<bool>, EvalError> {
        match f {
            Formula::Rel { name, args } => self.rel(name, args, l),
            Formula::Not(g) => Ok(self.eval3(g, l)?.map(|b| !b)),
            Formula::And(a, b) => {
                let x = self.eval3(a, l)?;
                if x == Some(false) {
                    return Ok(x);
                }
                Ok(and3(x, self.eval3(b, l)?))
            }
            Formula::SeesVar(i, v) => {
                self.calls += 1;
                self.sees(*i, *v, l)
            }
            Formula::Sees(i, g) => {
                self.calls += 1;
                self.whether(*i, g, l)
            }
            Formula::Knows(i, g) => {
                self.calls += 1;
                let truth = self.eval3(g, l)?;
                if truth == Some(false) {
                    return Ok(truth);
                }
                Ok(and3(truth, self.whether(*i, g, l)?))
            }
            Formula::GroupSees(mode, group, target) => {
                self.calls += 1;
                self.group_whether(*mode, group, target, l)
            }
            Formula::GroupKnows(mode, group, g) => {
                self.calls += 1;
                let truth = self.eval3(g, l)?;
                if truth == Some(false) {
                    return Ok(truth);
                }
                let target = Target::Formula(g.clone());
                Ok(and3(truth, self.group_whether(*mode, group, &target, l)?))
            }
        }
    }

    /// Resolves an epistemic sub-formula inside a derived local state `inner`:
    /// it is seen when its truth there is definite. From a complete state an
    /// indefinite answer can no longer improve, so it becomes "not seen".
    fn definite_in(&mut self, f: &Formula, inner: &LocalState, outer: &LocalState) -> Result<Option<bool>, EvalError> {
        Ok(match self.eval3(f, inner)? {
            Some(_) => Some(true),
            None if outer.is_total() => Some(false),
            None => None,
        })
    }

    /// Whether agent `i` sees (can determine) `f` in `l`.
    fn whether(&mut self, i: AgentId, f: &Formula, l: &LocalState) -> Result<Option<bool>, EvalError> {
        match f {
            Formula::Rel { args, .. } => {
                let mut acc = Some(true);
                for t in args {
                    if let Term::Var(v) = t {
                        acc = and3(acc, self.sees(i, *v, l)?);
                        if acc == Some(false) {
                            break;
                        }
                    }
                }
                Ok(acc)
            }
            Formula::Not(g) => self.whether(i, g, l),
            Formula::And(a, b) => {
                let x = self.whether(i, a, l)?;
                if x == Some(false) {
                    return Ok(x);
                }
                Ok(and3(x, self.whether(i, b, l)?))
            }
            // An agent always knows what it itself sees and knows.
            Formula::SeesVar(j, _) | Formula::Sees(j, _) | Formula::Knows(j, _) if *j == i => {
                self.ctx.check_agent(i)?;
                Ok(Some(true))
            }
            _ => {
                let li = self.apply(i, l)?;
                self.definite_in(f, &li, l)
            }
        }
    }

    fn group_whether(
        &mut self,
        mode: GroupMode,
        group: &[AgentId],
        target: &Target,
        l: &LocalState,
    ) -> Result<Option<bool>, EvalError> {
        if group.is_empty() {
            return Err(EvalError::EmptyGroup);
        }
        match mode {
            GroupMode::Everyone => {
                let mut acc = Some(true);
                for &i in group {
                    let r = match target {
                        Target::Var(v) => self.sees(i, *v, l)?,
                        Target::Formula(f) => self.whether(i, f, l)?,
                    };
                    acc = and3(acc, r);
                    if acc == Some(false) {
                        break;
                    }
                }
                Ok(acc)
            }
            GroupMode::Distributed => match target {
                Target::Var(v) => self.someone_sees(group, *v, l),
                Target::Formula(f) => {
                    let mut joint: Option<LocalState> = None;
                    self.distributed_whether(group, f, l, &mut joint)
                }
            },
            GroupMode::Common => {
                let common = self.fc(group, l)?.0;
                match target {
                    Target::Var(v) => Ok(present(common.contains(*v), l)),
                    Target::Formula(f) => self.common_whether(f, l, &common),
                }
            }
        }
    }

    fn someone_sees(&self, group: &[AgentId], v: VarId, l: &LocalState) -> Result<Option<bool>, EvalError> {
        let mut acc = Some(false);
        for &i in group {
            acc = or3(acc, self.sees(i, v, l)?);
            if acc == Some(true) {
                break;
            }
        }
        Ok(acc)
    }

    fn distributed_whether(
        &mut self,
        group: &[AgentId],
        f: &Formula,
        l: &LocalState,
        joint: &mut Option<LocalState>,
    ) -> Result<Option<bool>, EvalError> {
        match f {
            Formula::Rel { args, .. } => {
                let mut acc = Some(true);
                for t in args {
                    if let Term::Var(v) = t {
                        acc = and3(acc, self.someone_sees(group, *v, l)?);
                    }
                }
                Ok(acc)
            }
            Formula::Not(g) => self.distributed_whether(group, g, l, joint),
            Formula::And(a, b) => {
                let x = self.distributed_whether(group, a, l, joint)?;
                if x == Some(false) {
                    return Ok(x);
                }
                Ok(and3(x, self.distributed_whether(group, b, l, joint)?))
            }
            Formula::SeesVar(j, _) | Formula::Sees(j, _) | Formula::Knows(j, _) if group.contains(j) => Ok(Some(true)),
            _ => {
                if joint.is_none() {
                    let mut u = self.apply(group[0], l)?;
                    for &i in &group[1..] {
                        u = u.union(&self.apply(i, l)?)?;
                    }
                    *joint = Some(u);
                }
                let u = joint.clone().expect("joint state computed above");
                self.definite_in(f, &u, l)
            }
        }
    }

    fn common_whether(&mut self, f: &Formula, l: &LocalState, common: &LocalState) -> Result<Option<bool>, EvalError> {
        match f {
            Formula::Rel { args, .. } => {
                let all = args.iter().all(|t| match t {
                    Term::Var(v) => common.contains(*v),
                    _ => true,
                });
                Ok(present(all, l))
            }
            Formula::Not(g) => self.common_whether(g, l, common),
            Formula::And(a, b) => {
                let x = self.common_whether(a, l, common)?;
                if x == Some(false) {
                    return Ok(x);
                }
                Ok(and3(x, self.common_whether(b, l, common)?))
            }
            _ => self.definite_in(f, common, l),
        }
    }
}

/// Membership in a derived local state: absence only becomes definite once
/// the surrounding state is complete.
fn present(found: bool, outer: &LocalState) -> Option<bool> {
    if found {
        Some(true)
    } else if outer.is_total() {
        Some(false)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perspective::Full;

    fn ctx() -> EvalContext {
        EvalContext::new(Arc::new(Full), Arc::new(RelationRegistry::builtin()), 2, 2)
    }

    #[test]
    fn kleene_tables() {
        assert_eq!(and3(None, Some(false)), Some(false));
        assert_eq!(and3(None, Some(true)), None);
        assert_eq!(or3(None, Some(true)), Some(true));
        assert_eq!(or3(None, Some(false)), None);
    }

    #[test]
    fn full_perspective_collapses_knowledge() {
        let c = ctx();
        let s = State::new(vec![Value::Int(3), Value::Int(4)]);
        let phi = Formula::eq(0, 3);
        assert!(c.eval_state(&Formula::knows(1, phi.clone()), &s).unwrap());
        assert!(c.eval_state(&Formula::group_knows(GroupMode::Common, vec![0, 1], phi.clone()), &s).unwrap());
        assert!(!c.eval_state(&Formula::knows(1, Formula::eq(0, 4)), &s).unwrap());
    }

    #[test]
    fn missing_variable_is_false_not_error() {
        let c = ctx();
        let l = LocalState::from_pairs(2, [(1, Value::Int(4))]);
        assert_eq!(c.eval3(&Formula::eq(0, 3), &l).unwrap(), None);
        assert!(!c.eval(&Formula::eq(0, 3), &l).unwrap());
        assert!(!c.eval(&Formula::not(Formula::eq(0, 3)), &l).unwrap());
    }

    #[test]
    fn errors_are_reported() {
        let c = ctx();
        let s = State::new(vec![Value::Int(3), Value::Int(4)]).to_local();
        let bad = Formula::rel("between", vec![Term::Var(0)]);
        assert_eq!(c.eval(&bad, &s), Err(EvalError::UnknownRelation("between".into())));
        let arity = Formula::rel("=", vec![Term::Var(0)]);
        assert!(matches!(c.eval(&arity, &s), Err(EvalError::Arity { .. })));
        assert_eq!(
            c.eval(&Formula::knows(5, Formula::eq(0, 3)), &s),
            Err(EvalError::UnknownAgent(5))
        );
        assert!(c.validate(&Formula::SeesVar(0, 9)).is_err());
        assert!(c.validate(&Formula::knows(1, Formula::eq(1, 2))).is_ok());
    }

    #[test]
    fn calls_count_operator_nodes() {
        let c = ctx();
        let s = State::new(vec![Value::Int(3), Value::Int(4)]).to_local();
        let before = c.calls();
        let f = Formula::knows(0, Formula::knows(1, Formula::eq(0, 3)));
        assert!(c.eval(&f, &s).unwrap());
        assert!(c.calls() >= before + 2);
    }

    #[test]
    fn fc_singleton_is_one_application() {
        let c = ctx();
        let s = State::new(vec![Value::Int(3), Value::Int(4)]).to_local();
        let (out, steps) = c.fc_counted(&[0], &s).unwrap();
        assert_eq!(out, s);
        assert_eq!(steps, 1);
        assert_eq!(c.fc(&[], &s), Err(EvalError::EmptyGroup));
    }
}
