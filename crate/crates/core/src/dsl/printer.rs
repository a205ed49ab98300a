use std::fmt::Write;

use crate::epistemic::{Formula, Target, Term};
use crate::planning::{Expr, ParamDomain, Problem};
use crate::state::{Anchor, AnchorTerm, Domain, Value, VarKind};

struct Names<'a> {
    problem: &'a Problem,
    params: &'a [String],
}

impl Names<'_> {
    fn var(&self, v: usize) -> &str {
        &self.problem.vars()[v].name
    }

    fn agent(&self, a: usize) -> &str {
        &self.problem.agents()[a]
    }

    fn agents(&self, g: &[usize]) -> String {
        g.iter().map(|&a| self.agent(a)).collect::<Vec<_>>().join(", ")
    }

    fn term(&self, t: &Term) -> String {
        match t {
            Term::Var(v) => self.var(*v).to_string(),
            Term::Lit(x) => x.to_string(),
            Term::Param(k) => self.params.get(*k).cloned().unwrap_or_else(|| format!("?{k}")),
        }
    }

    fn formula(&self, f: &Formula) -> String {
        match f {
            Formula::And(a, b) => {
                let rhs = match **b {
                    Formula::And(..) => format!("({})", self.formula(b)),
                    _ => self.formula(b),
                };
                format!("{} and {rhs}", self.formula(a))
            }
            _ => self.unary(f),
        }
    }

    /// Body of a knowledge operator: epistemic subformulas are written bare.
    fn body(&self, f: &Formula) -> String {
        match f {
            Formula::SeesVar(..)
            | Formula::Sees(..)
            | Formula::Knows(..)
            | Formula::GroupSees(..)
            | Formula::GroupKnows(..) => self.unary(f),
            _ => format!("({})", self.formula(f)),
        }
    }

    fn unary(&self, f: &Formula) -> String {
        match f {
            Formula::Rel { name, args } if super::is_comparison(name) && args.len() == 2 => {
                format!("{} {name} {}", self.term(&args[0]), self.term(&args[1]))
            }
            Formula::Rel { name, args } => {
                let args: Vec<String> = args.iter().map(|t| self.term(t)).collect();
                format!("@{name}({})", args.join(", "))
            }
            Formula::Not(g) => format!("not {}", self.unary(g)),
            Formula::And(..) => format!("({})", self.formula(f)),
            Formula::SeesVar(i, v) => format!("S[{}] {}", self.agent(*i), self.var(*v)),
            Formula::Sees(i, g) => format!("S[{}] ({})", self.agent(*i), self.formula(g)),
            Formula::Knows(i, g) => format!("K[{}] {}", self.agent(*i), self.body(g)),
            Formula::GroupSees(m, g, Target::Var(v)) => {
                format!("{}S[{}] {}", m.letter(), self.agents(g), self.var(*v))
            }
            Formula::GroupSees(m, g, Target::Formula(t)) => {
                format!("{}S[{}] ({})", m.letter(), self.agents(g), self.formula(t))
            }
            Formula::GroupKnows(m, g, t) => format!("{}K[{}] {}", m.letter(), self.agents(g), self.body(t)),
        }
    }

    fn expr(&self, e: &Expr) -> String {
        let side = |e: &Expr| match e {
            Expr::Add(..) | Expr::Sub(..) => format!("({})", self.expr(e)),
            _ => self.expr(e),
        };
        match e {
            Expr::Lit(v) => v.to_string(),
            Expr::Var(v) => self.var(*v).to_string(),
            Expr::Param(k) => self.term(&Term::Param(*k)),
            Expr::Add(a, b) => format!("{} + {}", self.expr(a), side(b)),
            Expr::Sub(a, b) => format!("{} - {}", self.expr(a), side(b)),
        }
    }

    fn anchor_term(&self, t: &AnchorTerm) -> String {
        match t {
            AnchorTerm::Var(v) => self.var(*v).to_string(),
            AnchorTerm::Lit(x) => x.to_string(),
        }
    }
}

fn value_set(vs: &[Value]) -> String {
    let items: Vec<String> = vs.iter().map(Value::to_string).collect();
    format!("{{{}}}", items.join(", "))
}

/// Formula in concrete syntax, using the problem's agent and variable names.
pub fn print_formula(f: &Formula, problem: &Problem) -> String {
    Names { problem, params: &[] }.formula(f)
}

/// Problem in concrete syntax. Parsing the output gives back an equal problem.
pub fn print_problem(problem: &Problem) -> String {
    let top = Names { problem, params: &[] };
    let mut out = String::new();
    let _ = writeln!(out, "problem \"{}\"", problem.name().replace('"', "\\\""));
    let _ = writeln!(out, "agents {}", problem.agents().join(" "));
    let spec = problem.perspective_spec();
    let _ = write!(out, "perspective {} {{", spec.kind.name());
    for (k, v) in &spec.params {
        let _ = write!(out, "\n  {k} = {v}");
    }
    out.push_str(if spec.params.is_empty() { "}\n" } else { "\n}\n" });
    for (id, decl) in problem.vars().iter().enumerate() {
        let kw = if decl.kind == VarKind::Constant { "const" } else { "var" };
        let dom = match &decl.domain {
            Domain::Range(lo, hi) => format!("{lo}..{hi}"),
            Domain::Bool => "bool".to_string(),
            Domain::Set(vs) => value_set(vs),
        };
        let anchor = match &decl.anchor {
            Anchor::None => String::new(),
            Anchor::Pos(x, y) => format!(" @pos({}, {})", top.anchor_term(x), top.anchor_term(y)),
            Anchor::Room(r) => format!(" @room({})", top.anchor_term(r)),
            Anchor::Page => " @page".to_string(),
        };
        let _ = writeln!(out, "{kw} {}: {dom}{anchor} = {}", decl.name, problem.initial().get(id));
    }
    for op in problem.operators() {
        let params: Vec<String> = op.params.iter().map(|p| p.name.clone()).collect();
        let names = Names {
            problem,
            params: &params,
        };
        let sig: Vec<String> = op
            .params
            .iter()
            .map(|p| match &p.domain {
                ParamDomain::Range(lo, hi) => format!("{}: {lo}..{hi}", p.name),
                ParamDomain::Set(vs) => format!("{}: {}", p.name, value_set(vs)),
            })
            .collect();
        let _ = writeln!(out, "operator {}({}) {{", op.name, sig.join(", "));
        if let Some(pre) = &op.pre {
            let _ = writeln!(out, "  pre: {}", names.formula(pre));
        }
        if !op.effects.is_empty() {
            out.push_str("  eff:\n");
        }
        for e in &op.effects {
            let when = match &e.when {
                Some(c) => format!("when {} then ", names.formula(c)),
                None => String::new(),
            };
            let _ = writeln!(out, "    {when}{} := {}", names.var(e.var), names.expr(&e.expr));
        }
        out.push_str("}\n");
    }
    for g in problem.goals() {
        let _ = writeln!(out, "goal: {}", top.formula(g));
    }
    for m in problem.maintain() {
        let _ = writeln!(out, "maintain: {}", top.formula(m));
    }
    out
}
