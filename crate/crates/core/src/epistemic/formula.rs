use std::collections::BTreeSet;

use crate::state::{AgentId, Value, VarId};

/// Argument of a relation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(VarId),
    Lit(Value),
    /// Operator parameter, replaced by a literal when the operator is grounded.
    Param(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupMode {
    /// Everyone in the group.
    Everyone,
    /// Distributed over the group (union of perspectives).
    Distributed,
    /// Common to the group (fixed point of intersected perspectives).
    Common,
}

impl GroupMode {
    pub fn letter(self) -> char {
        match self {
            GroupMode::Everyone => 'E',
            GroupMode::Distributed => 'D',
            GroupMode::Common => 'C',
        }
    }
}

/// What a group visibility operator is applied to.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Target {
    Var(VarId),
    Formula(Box<Formula>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Rel { name: String, args: Vec<Term> },
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    SeesVar(AgentId, VarId),
    Sees(AgentId, Box<Formula>),
    Knows(AgentId, Box<Formula>),
    GroupSees(GroupMode, Vec<AgentId>, Target),
    GroupKnows(GroupMode, Vec<AgentId>, Box<Formula>),
}

impl Formula {
    pub fn rel(name: &str, args: Vec<Term>) -> Self {
        Formula::Rel {
            name: name.to_string(),
            args,
        }
    }

    /// `var = value`.
    pub fn eq(var: VarId, value: impl Into<Value>) -> Self {
        Formula::rel("=", vec![Term::Var(var), Term::Lit(value.into())])
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    /// Left-nested conjunction; `None` for an empty list.
    pub fn conj(items: impl IntoIterator<Item = Formula>) -> Option<Self> {
        items.into_iter().reduce(Formula::and)
    }

    pub fn sees(agent: AgentId, f: Formula) -> Self {
        Formula::Sees(agent, Box::new(f))
    }

    pub fn knows(agent: AgentId, f: Formula) -> Self {
        Formula::Knows(agent, Box::new(f))
    }

    pub fn group_knows(mode: GroupMode, agents: Vec<AgentId>, f: Formula) -> Self {
        Formula::GroupKnows(mode, agents, Box::new(f))
    }

    pub fn group_sees(mode: GroupMode, agents: Vec<AgentId>, f: Formula) -> Self {
        Formula::GroupSees(mode, agents, Target::Formula(Box::new(f)))
    }

    /// The top-level conjuncts of a formula.
    pub fn conjuncts(&self) -> Vec<&Formula> {
        match self {
            Formula::And(a, b) => {
                let mut out = a.conjuncts();
                out.extend(b.conjuncts());
                out
            }
            other => vec![other],
        }
    }

    /// Nesting depth of epistemic operators.
    pub fn depth(&self) -> usize {
        match self {
            Formula::Rel { .. } => 0,
            Formula::Not(f) => f.depth(),
            Formula::And(a, b) => a.depth().max(b.depth()),
            Formula::SeesVar(..) => 1,
            Formula::GroupSees(_, _, Target::Var(_)) => 1,
            Formula::Sees(_, f) | Formula::Knows(_, f) | Formula::GroupKnows(_, _, f) => 1 + f.depth(),
            Formula::GroupSees(_, _, Target::Formula(f)) => 1 + f.depth(),
        }
    }

    /// Every variable occurring in the formula.
    pub fn vars(&self) -> BTreeSet<VarId> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<VarId>) {
        match self {
            Formula::Rel { args, .. } => {
                out.extend(args.iter().filter_map(|t| match t {
                    Term::Var(v) => Some(*v),
                    _ => None,
                }));
            }
            Formula::Not(f) | Formula::Sees(_, f) | Formula::Knows(_, f) | Formula::GroupKnows(_, _, f) => {
                f.collect_vars(out)
            }
            Formula::And(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Formula::SeesVar(_, v) | Formula::GroupSees(_, _, Target::Var(v)) => {
                out.insert(*v);
            }
            Formula::GroupSees(_, _, Target::Formula(f)) => f.collect_vars(out),
        }
    }

    /// Every agent occurring in the formula.
    pub fn agents(&self) -> BTreeSet<AgentId> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| match f {
            Formula::SeesVar(i, _) | Formula::Sees(i, _) | Formula::Knows(i, _) => {
                out.insert(*i);
            }
            Formula::GroupSees(_, g, _) | Formula::GroupKnows(_, g, _) => out.extend(g.iter().copied()),
            _ => {}
        });
        out
    }

    /// Pre-order traversal over every sub-formula.
    pub fn visit(&self, f: &mut impl FnMut(&Formula)) {
        f(self);
        match self {
            Formula::Rel { .. } | Formula::SeesVar(..) | Formula::GroupSees(_, _, Target::Var(_)) => {}
            Formula::Not(g) | Formula::Sees(_, g) | Formula::Knows(_, g) | Formula::GroupKnows(_, _, g) => g.visit(f),
            Formula::GroupSees(_, _, Target::Formula(g)) => g.visit(f),
            Formula::And(a, b) => {
                a.visit(f);
                b.visit(f);
            }
        }
    }

    /// Replaces parameter references by the given values.
    pub fn substitute(&self, params: &[Value]) -> Formula {
        let sub = |f: &Formula| Box::new(f.substitute(params));
        match self {
            Formula::Rel { name, args } => Formula::Rel {
                name: name.clone(),
                args: args
                    .iter()
                    .map(|t| match t {
                        Term::Param(k) => Term::Lit(params[*k].clone()),
                        other => other.clone(),
                    })
                    .collect(),
            },
            Formula::Not(f) => Formula::Not(sub(f)),
            Formula::And(a, b) => Formula::And(sub(a), sub(b)),
            Formula::SeesVar(i, v) => Formula::SeesVar(*i, *v),
            Formula::Sees(i, f) => Formula::Sees(*i, sub(f)),
            Formula::Knows(i, f) => Formula::Knows(*i, sub(f)),
            Formula::GroupSees(m, g, Target::Var(v)) => Formula::GroupSees(*m, g.clone(), Target::Var(*v)),
            Formula::GroupSees(m, g, Target::Formula(f)) => {
                Formula::GroupSees(*m, g.clone(), Target::Formula(sub(f)))
            }
            Formula::GroupKnows(m, g, f) => Formula::GroupKnows(*m, g.clone(), sub(f)),
        }
    }

    pub fn has_params(&self) -> bool {
        let mut found = false;
        self.visit(&mut |f| {
            if let Formula::Rel { args, .. } = f {
                found |= args.iter().any(|t| matches!(t, Term::Param(_)));
            }
        });
        found
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vars_of_examples() {
        assert_eq!(Formula::eq(4, 3).vars().into_iter().collect::<Vec<_>>(), vec![4]);
        let f = Formula::and(Formula::SeesVar(0, 2), Formula::eq(5, 1));
        assert_eq!(f.vars().into_iter().collect::<Vec<_>>(), vec![2, 5]);
        let f = Formula::knows(0, Formula::knows(1, Formula::eq(7, 1)));
        assert_eq!(f.vars().into_iter().collect::<Vec<_>>(), vec![7]);
    }

    #[test]
    fn depth_and_conjuncts() {
        let f = Formula::and(
            Formula::knows(0, Formula::eq(1, 1)),
            Formula::not(Formula::knows(1, Formula::knows(0, Formula::eq(1, 1)))),
        );
        assert_eq!(f.depth(), 2);
        assert_eq!(f.conjuncts().len(), 2);
        assert_eq!(f.agents().into_iter().collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn substitution_grounds_params() {
        let f = Formula::rel("=", vec![Term::Param(0), Term::Lit(Value::sym("p1"))]);
        assert!(f.has_params());
        let g = f.substitute(&[Value::sym("p1")]);
        assert!(!g.has_params());
        assert_eq!(
            g,
            Formula::rel("=", vec![Term::Lit(Value::sym("p1")), Term::Lit(Value::sym("p1"))])
        );
    }
}
