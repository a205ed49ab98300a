//! Problems, operators, grounding, successor generation and plan validation.

use std::fmt;
use std::sync::Arc;

use smallvec::SmallVec;
use thiserror::Error;

use crate::epistemic::{EvalContext, EvalError, Formula, RelationRegistry, Term};
use crate::perspective::{Perspective, PerspectiveError, PerspectiveSpec};
use crate::state::{State, Value, VarDecl, VarId, VarKind};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProblemError {
    #[error("problem declares no agents")]
    NoAgents,
    #[error("duplicate name `{0}`")]
    Duplicate(String),
    #[error("initial state has {got} values for {expected} variables")]
    InitialSize { expected: usize, got: usize },
    #[error("value {value} of `{var}` lies outside its domain")]
    OutOfDomain { var: String, value: Value },
    #[error("operator `{op}` assigns constant `{var}`")]
    AssignsConstant { op: String, var: String },
    #[error("operator `{op}`: {reason}")]
    BadOperator { op: String, reason: String },
    #[error(transparent)]
    Perspective(#[from] PerspectiveError),
    #[error("in {place}: {source}")]
    Formula { place: String, source: EvalError },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanError {
    #[error("unknown operator `{0}`")]
    UnknownOperator(String),
    #[error("operator `{op}` takes {expected} arguments, got {got}")]
    ArgCount { op: String, expected: usize, got: usize },
    #[error("argument `{arg}` is not a value of parameter `{param}` of `{op}`")]
    BadArgument { op: String, param: String, arg: String },
    #[error("malformed action `{0}`")]
    Syntax(String),
    #[error("action `{0}` is not applicable")]
    Inapplicable(String),
    #[error("effect of `{action}` on `{var}` is not an integer expression")]
    Type { action: String, var: String },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Values an operator parameter ranges over.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParamDomain {
    Range(i64, i64),
    Set(Vec<Value>),
}

impl ParamDomain {
    pub fn values(&self) -> Vec<Value> {
        match self {
            ParamDomain::Range(lo, hi) => (*lo..=*hi).map(Value::Int).collect(),
            ParamDomain::Set(vs) => vs.clone(),
        }
    }

    pub fn contains(&self, v: &Value) -> bool {
        match (self, v) {
            (ParamDomain::Range(lo, hi), Value::Int(i)) => lo <= i && i <= hi,
            (ParamDomain::Set(vs), v) => vs.contains(v),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub domain: ParamDomain,
}

/// Right-hand side of an assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Lit(Value),
    Var(VarId),
    Param(usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
}

impl Expr {
    fn substitute(&self, args: &[Value]) -> Expr {
        match self {
            Expr::Param(k) => Expr::Lit(args[*k].clone()),
            Expr::Add(a, b) => Expr::Add(Box::new(a.substitute(args)), Box::new(b.substitute(args))),
            Expr::Sub(a, b) => Expr::Sub(Box::new(a.substitute(args)), Box::new(b.substitute(args))),
            other => other.clone(),
        }
    }

    /// Value in `s`; `None` on arithmetic over non-integers or overflow.
    fn eval(&self, s: &State) -> Option<Value> {
        Some(match self {
            Expr::Lit(v) => v.clone(),
            Expr::Var(v) => s.get(*v).clone(),
            Expr::Param(_) => return None,
            Expr::Add(a, b) => Value::Int(a.eval(s)?.as_int()?.checked_add(b.eval(s)?.as_int()?)?),
            Expr::Sub(a, b) => Value::Int(a.eval(s)?.as_int()?.checked_sub(b.eval(s)?.as_int()?)?),
        })
    }

    fn visit_params(&self, f: &mut impl FnMut(usize)) {
        match self {
            Expr::Param(k) => f(*k),
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                a.visit_params(f);
                b.visit_params(f);
            }
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Effect {
    /// Applied only when the condition holds in the state before the action.
    pub when: Option<Formula>,
    pub var: VarId,
    pub expr: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Operator {
    pub name: String,
    pub params: Vec<Param>,
    pub pre: Option<Formula>,
    pub effects: Vec<Effect>,
}

impl Operator {
    /// All instances, first parameter varying slowest.
    pub fn ground(&self, index: usize) -> Vec<Action> {
        let domains: Vec<Vec<Value>> = self.params.iter().map(|p| p.domain.values()).collect();
        if domains.iter().any(|d| d.is_empty()) {
            return Vec::new();
        }
        let mut out = Vec::new();
        let mut digits = vec![0usize; domains.len()];
        loop {
            let args: Vec<Value> = digits.iter().zip(&domains).map(|(&d, dom)| dom[d].clone()).collect();
            out.push(self.instantiate(index, args));
            let mut k = digits.len();
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                digits[k] += 1;
                if digits[k] < domains[k].len() {
                    break;
                }
                digits[k] = 0;
            }
        }
    }

    fn instantiate(&self, index: usize, args: Vec<Value>) -> Action {
        let effects = self
            .effects
            .iter()
            .map(|e| Effect {
                when: e.when.as_ref().map(|c| c.substitute(&args)),
                var: e.var,
                expr: e.expr.substitute(&args),
            })
            .collect();
        Action {
            op: index,
            name: self.name.clone(),
            pre: self.pre.as_ref().map(|p| p.substitute(&args)),
            args,
            effects,
        }
    }
}

/// A grounded operator instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Action {
    pub op: usize,
    pub name: String,
    pub args: Vec<Value>,
    pub pre: Option<Formula>,
    pub effects: Vec<Effect>,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.name)?;
        for (k, a) in self.args.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

pub type Updates = SmallVec<[(VarId, Value); 4]>;

/// An epistemic planning problem together with its compiled perspective.
#[derive(Debug, Clone)]
pub struct Problem {
    name: String,
    agents: Vec<String>,
    vars: Vec<VarDecl>,
    perspective: PerspectiveSpec,
    operators: Vec<Operator>,
    initial: State,
    goals: Vec<Formula>,
    maintain: Vec<Formula>,
    fluents: Vec<VarId>,
    compiled: Arc<dyn Perspective>,
    relations: Arc<RelationRegistry>,
}

impl PartialEq for Problem {
    fn eq(&self, o: &Self) -> bool {
        self.name == o.name
            && self.agents == o.agents
            && self.vars == o.vars
            && self.perspective == o.perspective
            && self.operators == o.operators
            && self.initial == o.initial
            && self.goals == o.goals
            && self.maintain == o.maintain
    }
}

/// Unvalidated problem parts.
#[derive(Debug, Clone)]
pub struct ProblemParts {
    pub name: String,
    pub agents: Vec<String>,
    pub vars: Vec<VarDecl>,
    pub perspective: PerspectiveSpec,
    pub operators: Vec<Operator>,
    pub initial: Vec<Value>,
    pub goals: Vec<Formula>,
    pub maintain: Vec<Formula>,
}

impl Problem {
    pub fn new(parts: ProblemParts) -> Result<Self, ProblemError> {
        Self::with_relations(parts, RelationRegistry::builtin())
    }

    pub fn with_relations(parts: ProblemParts, relations: RelationRegistry) -> Result<Self, ProblemError> {
        let ProblemParts {
            name,
            agents,
            vars,
            perspective,
            operators,
            initial,
            goals,
            maintain,
        } = parts;
        if agents.is_empty() {
            return Err(ProblemError::NoAgents);
        }
        let mut seen = std::collections::HashSet::new();
        for n in agents.iter().chain(vars.iter().map(|v| &v.name)) {
            if !seen.insert(n.as_str()) {
                return Err(ProblemError::Duplicate(n.clone()));
            }
        }
        let mut op_names = std::collections::HashSet::new();
        for op in &operators {
            if !op_names.insert(op.name.as_str()) {
                return Err(ProblemError::Duplicate(op.name.clone()));
            }
        }
        if initial.len() != vars.len() {
            return Err(ProblemError::InitialSize {
                expected: vars.len(),
                got: initial.len(),
            });
        }
        for (d, v) in vars.iter().zip(&initial) {
            if !d.domain.contains(v) {
                return Err(ProblemError::OutOfDomain {
                    var: d.name.clone(),
                    value: v.clone(),
                });
            }
        }
        let compiled = perspective.build(&agents, &vars)?;
        let relations = Arc::new(relations);
        let ctx = EvalContext::new(compiled.clone(), relations.clone(), agents.len(), vars.len());
        let check = |place: String, f: &Formula| ctx.validate(f).map_err(|source| ProblemError::Formula { place, source });
        for (k, g) in goals.iter().enumerate() {
            check(format!("goal {}", k + 1), g)?;
        }
        for (k, m) in maintain.iter().enumerate() {
            check(format!("maintain {}", k + 1), m)?;
        }
        for op in &operators {
            check_operator(op, &vars, &check)?;
        }
        let fluents = (0..vars.len()).filter(|&v| vars[v].kind == VarKind::Fluent).collect();
        Ok(Problem {
            name,
            agents,
            vars,
            perspective,
            operators,
            initial: State::new(initial),
            goals,
            maintain,
            fluents,
            compiled,
            relations,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn agents(&self) -> &[String] {
        &self.agents
    }

    pub fn vars(&self) -> &[VarDecl] {
        &self.vars
    }

    pub fn perspective_spec(&self) -> &PerspectiveSpec {
        &self.perspective
    }

    pub fn perspective(&self) -> &Arc<dyn Perspective> {
        &self.compiled
    }

    pub fn relations(&self) -> &Arc<RelationRegistry> {
        &self.relations
    }

    pub fn operators(&self) -> &[Operator] {
        &self.operators
    }

    pub fn initial(&self) -> &State {
        &self.initial
    }

    /// Goal conjuncts, one per goal statement.
    pub fn goals(&self) -> &[Formula] {
        &self.goals
    }

    /// The whole goal as one formula; `None` when there is no goal.
    pub fn goal(&self) -> Option<Formula> {
        Formula::conj(self.goals.iter().cloned())
    }

    pub fn maintain(&self) -> &[Formula] {
        &self.maintain
    }

    pub fn fluents(&self) -> &[VarId] {
        &self.fluents
    }

    pub fn agent_id(&self, name: &str) -> Option<usize> {
        self.agents.iter().position(|a| a == name)
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v.name == name)
    }

    /// Fresh evaluation context with its own call counter.
    pub fn context(&self) -> EvalContext {
        EvalContext::new(
            self.compiled.clone(),
            self.relations.clone(),
            self.agents.len(),
            self.vars.len(),
        )
    }

    /// Every grounded action, operators in declaration order.
    pub fn ground_all(&self) -> Vec<Action> {
        self.operators
            .iter()
            .enumerate()
            .flat_map(|(k, op)| op.ground(k))
            .collect()
    }

    /// Largest nesting depth over goals and maintain constraints.
    pub fn depth(&self) -> usize {
        self.goals.iter().chain(&self.maintain).map(Formula::depth).max().unwrap_or(0)
    }

    pub fn goal_holds(&self, ctx: &EvalContext, s: &State) -> Result<bool, EvalError> {
        let l = s.to_local();
        for g in &self.goals {
            if !ctx.eval(g, &l)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn maintain_holds(&self, ctx: &EvalContext, s: &State) -> Result<bool, EvalError> {
        let l = s.to_local();
        for m in &self.maintain {
            if !ctx.eval(m, &l)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Assignments made by `a` in `s`, or `None` when `a` is not applicable
    /// (failed precondition or an assignment leaving its domain).
    pub fn updates(&self, ctx: &EvalContext, a: &Action, s: &State) -> Result<Option<Updates>, PlanError> {
        let mut local = None;
        if let Some(pre) = &a.pre {
            if !ctx.eval(pre, local.get_or_insert_with(|| s.to_local()))? {
                return Ok(None);
            }
        }
        let mut out = Updates::new();
        for e in &a.effects {
            if let Some(c) = &e.when {
                if !ctx.eval(c, local.get_or_insert_with(|| s.to_local()))? {
                    continue;
                }
            }
            let v = e.expr.eval(s).ok_or_else(|| PlanError::Type {
                action: a.to_string(),
                var: self.vars[e.var].name.clone(),
            })?;
            if !self.vars[e.var].domain.contains(&v) {
                return Ok(None);
            }
            debug_assert_eq!(self.vars[e.var].kind, VarKind::Fluent);
            out.push((e.var, v));
        }
        Ok(Some(out))
    }

    pub fn applicable(&self, ctx: &EvalContext, a: &Action, s: &State) -> Result<bool, PlanError> {
        Ok(self.updates(ctx, a, s)?.is_some())
    }

    /// Successor state; an error when `a` is not applicable.
    pub fn apply(&self, ctx: &EvalContext, a: &Action, s: &State) -> Result<State, PlanError> {
        match self.updates(ctx, a, s)? {
            Some(u) => Ok(s.with(&u)),
            None => Err(PlanError::Inapplicable(a.to_string())),
        }
    }

    /// Grounds `name(args)` against this problem's operators.
    pub fn action(&self, name: &str, args: &[Value]) -> Result<Action, PlanError> {
        let (k, op) = self
            .operators
            .iter()
            .enumerate()
            .find(|(_, o)| o.name == name)
            .ok_or_else(|| PlanError::UnknownOperator(name.to_string()))?;
        if op.params.len() != args.len() {
            return Err(PlanError::ArgCount {
                op: name.to_string(),
                expected: op.params.len(),
                got: args.len(),
            });
        }
        for (p, a) in op.params.iter().zip(args) {
            if !p.domain.contains(a) {
                return Err(PlanError::BadArgument {
                    op: name.to_string(),
                    param: p.name.clone(),
                    arg: a.to_string(),
                });
            }
        }
        Ok(op.instantiate(k, args.to_vec()))
    }

    /// Parses one plan line such as `move(-2,-2)` or `sense()`.
    pub fn parse_action(&self, line: &str) -> Result<Action, PlanError> {
        let line = line.trim();
        let (name, rest) = match line.find('(') {
            Some(i) => (&line[..i], &line[i..]),
            None => (line, "()"),
        };
        let inner = rest
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| PlanError::Syntax(line.to_string()))?;
        let name = name.trim();
        let op = self
            .operators
            .iter()
            .find(|o| o.name == name)
            .ok_or_else(|| PlanError::UnknownOperator(name.to_string()))?;
        let raw: Vec<&str> = if inner.trim().is_empty() {
            Vec::new()
        } else {
            inner.split(',').map(str::trim).collect()
        };
        if raw.len() != op.params.len() {
            return Err(PlanError::ArgCount {
                op: name.to_string(),
                expected: op.params.len(),
                got: raw.len(),
            });
        }
        let args = raw
            .iter()
            .zip(&op.params)
            .map(|(r, p)| parse_arg(r, &p.domain))
            .collect::<Vec<_>>();
        self.action(name, &args)
    }

    /// Parses a plan file: one action per line, blank lines and `#` comments ignored.
    pub fn parse_plan(&self, text: &str) -> Result<Vec<Action>, PlanError> {
        text.lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(|l| self.parse_action(l))
            .collect()
    }

    /// Simulates `plan` from the initial state.
    pub fn validate_plan(&self, ctx: &EvalContext, plan: &[Action]) -> Result<Verdict, PlanError> {
        let mut s = self.initial.clone();
        if !self.maintain_holds(ctx, &s)? {
            return Ok(Verdict::MaintainViolated { state: 0 });
        }
        for (k, a) in plan.iter().enumerate() {
            match self.updates(ctx, a, &s)? {
                None => return Ok(Verdict::Inapplicable { step: k + 1 }),
                Some(u) => s = s.with(&u),
            }
            if !self.maintain_holds(ctx, &s)? {
                return Ok(Verdict::MaintainViolated { state: k + 1 });
            }
        }
        if self.goal_holds(ctx, &s)? {
            Ok(Verdict::Valid)
        } else {
            Ok(Verdict::GoalUnmet)
        }
    }
}

fn parse_arg(raw: &str, dom: &ParamDomain) -> Value {
    if let Ok(i) = raw.parse::<i64>() {
        return Value::Int(i);
    }
    match raw {
        "true" | "false" if !dom.contains(&Value::sym(raw)) => Value::Bool(raw == "true"),
        _ => Value::sym(raw),
    }
}

fn check_operator(
    op: &Operator,
    vars: &[VarDecl],
    check: &impl Fn(String, &Formula) -> Result<(), ProblemError>,
) -> Result<(), ProblemError> {
    let bad = |reason: String| ProblemError::BadOperator {
        op: op.name.clone(),
        reason,
    };
    let np = op.params.len();
    let param_ok = |f: &Formula| -> Result<(), ProblemError> {
        let mut worst = None;
        f.visit(&mut |g| {
            if let Formula::Rel { args, .. } = g {
                for t in args {
                    if let Term::Param(k) = t {
                        if *k >= np {
                            worst = Some(*k);
                        }
                    }
                }
            }
        });
        match worst {
            Some(k) => Err(bad(format!("parameter #{k} out of range"))),
            None => Ok(()),
        }
    };
    // Formulas are checked on a representative grounding so that relation
    // arities and agents are validated even when parameters occur.
    let sample: Vec<Value> = op
        .params
        .iter()
        .map(|p| p.domain.values().into_iter().next().unwrap_or(Value::Int(0)))
        .collect();
    if let Some(pre) = &op.pre {
        param_ok(pre)?;
        check(format!("precondition of `{}`", op.name), &pre.substitute(&sample))?;
    }
    for e in &op.effects {
        let Some(decl) = vars.get(e.var) else {
            return Err(bad(format!("unknown variable #{}", e.var)));
        };
        if decl.kind == VarKind::Constant {
            return Err(ProblemError::AssignsConstant {
                op: op.name.clone(),
                var: decl.name.clone(),
            });
        }
        let mut out_of_range = false;
        e.expr.visit_params(&mut |k| out_of_range |= k >= np);
        if out_of_range {
            return Err(bad("parameter out of range in effect".into()));
        }
        if let Some(c) = &e.when {
            param_ok(c)?;
            check(format!("effect condition of `{}`", op.name), &c.substitute(&sample))?;
        }
    }
    Ok(())
}

/// Outcome of simulating a plan. Steps count from 1; state 0 is the
/// initial state and state k the one reached after step k.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Valid,
    Inapplicable { step: usize },
    MaintainViolated { state: usize },
    GoalUnmet,
}

impl Verdict {
    pub fn is_valid(self) -> bool {
        self == Verdict::Valid
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Valid => f.write_str("valid"),
            Verdict::Inapplicable { step } => write!(f, "step {step} inapplicable"),
            Verdict::MaintainViolated { state } => write!(f, "maintain violated at state {state}"),
            Verdict::GoalUnmet => f.write_str("goal unmet"),
        }
    }
}
