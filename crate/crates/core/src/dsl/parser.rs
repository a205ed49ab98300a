//! Recursive-descent parser producing an unresolved syntax tree, followed by
//! name resolution against the declared vocabulary.

use std::collections::{HashMap, HashSet};

use super::lexer::{lex, Tok, Token};
use super::{Diagnostic, Span};
use crate::epistemic::{Formula, GroupMode, RelationRegistry, Target, Term};
use crate::perspective::{ParamValue, PerspectiveKind, PerspectiveSpec};
use crate::planning::{Effect, Expr, Operator, Param, ParamDomain, Problem, ProblemError, ProblemParts};
use crate::state::{Anchor, AnchorTerm, Domain, Value, VarDecl, VarKind};

const KEYWORDS: [&str; 9] = [
    "problem",
    "agents",
    "perspective",
    "var",
    "const",
    "init",
    "operator",
    "goal",
    "maintain",
];

const EPISTEMIC: [&str; 8] = ["S", "K", "ES", "EK", "DS", "DK", "CS", "CK"];

#[derive(Debug, Clone)]
struct Name {
    text: String,
    span: Span,
}

#[derive(Debug, Clone)]
enum RTerm {
    Name(Name),
    Int(i64),
}

#[derive(Debug, Clone)]
enum RTarget {
    Var(Name),
    Formula(Box<RFormula>),
}

#[derive(Debug, Clone)]
enum RFormula {
    Rel { name: Name, args: Vec<RTerm> },
    Not(Box<RFormula>),
    And(Box<RFormula>, Box<RFormula>),
    Sees(Name, RTarget),
    Knows(Name, Box<RFormula>),
    Group { mode: GroupMode, knows: bool, agents: Vec<Name>, target: RTarget, span: Span },
}

#[derive(Debug, Clone)]
enum RExpr {
    Term(RTerm),
    Add(Box<RExpr>, Box<RExpr>),
    Sub(Box<RExpr>, Box<RExpr>),
}

#[derive(Debug, Clone)]
enum RAnchor {
    None,
    Pos(RTerm, RTerm),
    Room(RTerm),
    Page,
}

#[derive(Debug, Clone)]
struct RVar {
    name: Name,
    domain: Domain,
    anchor: RAnchor,
    init: Option<(Value, Span)>,
    constant: bool,
}

#[derive(Debug, Clone)]
struct REffect {
    when: Option<RFormula>,
    var: Name,
    expr: RExpr,
}

#[derive(Debug, Clone)]
struct ROperator {
    name: Name,
    params: Vec<(Name, ParamDomain)>,
    pre: Option<RFormula>,
    effects: Vec<REffect>,
}

#[derive(Debug, Clone)]
struct RPerspective {
    kind: Name,
    params: Vec<(Name, ParamValue)>,
}

#[derive(Debug, Clone, Default)]
struct RProblem {
    name: String,
    span: Option<Span>,
    agents: Vec<Name>,
    perspectives: Vec<RPerspective>,
    vars: Vec<RVar>,
    inits: Vec<(Name, Value, Span)>,
    operators: Vec<ROperator>,
    goals: Vec<RFormula>,
    maintain: Vec<RFormula>,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, Diagnostic>;

impl Parser {
    fn new(toks: Vec<Token>) -> Self {
        Parser { toks, pos: 0 }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span.clone()
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, what: &str) -> PResult<T> {
        Err(Diagnostic::new(self.span(), format!("expected {what}, found {}", self.peek())))
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok) -> PResult<Span> {
        if *self.peek() == t {
            Ok(self.bump().span)
        } else {
            self.error(&t.to_string())
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<Span> {
        if self.is_kw(kw) {
            Ok(self.bump().span)
        } else {
            self.error(&format!("`{kw}`"))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<Name> {
        match self.peek().clone() {
            Tok::Ident(text) => {
                let span = self.bump().span;
                Ok(Name { text, span })
            }
            _ => self.error(what),
        }
    }

    fn int(&mut self) -> PResult<i64> {
        let neg = self.eat(&Tok::Minus);
        match *self.peek() {
            Tok::Int(i) => {
                self.bump();
                Ok(if neg { -i } else { i })
            }
            _ => self.error("an integer"),
        }
    }

    fn problem(&mut self) -> PResult<RProblem> {
        let span = self.expect_kw("problem")?;
        let name = match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                s
            }
            _ => return self.error("a quoted problem name"),
        };
        let mut p = RProblem {
            name,
            span: Some(span),
            ..RProblem::default()
        };
        loop {
            let kw = match self.peek() {
                Tok::Eof => break,
                Tok::Ident(s) => s.clone(),
                _ => return self.error("a declaration"),
            };
            match kw.as_str() {
                "agents" => {
                    self.bump();
                    let before = p.agents.len();
                    while let Tok::Ident(s) = self.peek() {
                        if KEYWORDS.contains(&s.as_str()) {
                            break;
                        }
                        let n = self.ident("an agent name")?;
                        p.agents.push(n);
                    }
                    if p.agents.len() == before {
                        return self.error("at least one agent name");
                    }
                }
                "perspective" => {
                    self.bump();
                    p.perspectives.push(self.perspective()?);
                }
                "var" | "const" => {
                    self.bump();
                    p.vars.push(self.var_decl(kw == "const")?);
                }
                "init" => {
                    self.bump();
                    let n = self.ident("a variable name")?;
                    self.expect(Tok::Eq)?;
                    let span = self.span();
                    let v = self.value()?;
                    p.inits.push((n, v, span));
                }
                "operator" => {
                    self.bump();
                    p.operators.push(self.operator()?);
                }
                "goal" | "maintain" => {
                    self.bump();
                    self.expect(Tok::Colon)?;
                    let f = self.formula()?;
                    if kw == "goal" {
                        p.goals.push(f);
                    } else {
                        p.maintain.push(f);
                    }
                }
                _ => return self.error("a declaration"),
            }
        }
        Ok(p)
    }

    fn perspective(&mut self) -> PResult<RPerspective> {
        // Kinds may contain hyphens (`latched-rooms`); pieces must be adjacent.
        let mut kind = self.ident("a perspective kind")?;
        while *self.peek() == Tok::Minus && self.span().col == kind.span.end_col && self.span().line == kind.span.line {
            self.bump();
            let next = self.ident("the rest of the perspective kind")?;
            kind.text.push('-');
            kind.text.push_str(&next.text);
            kind.span.end_col = next.span.end_col;
        }
        self.expect(Tok::LBrace)?;
        let mut params = Vec::new();
        while !self.eat(&Tok::RBrace) {
            let key = self.ident("a parameter name or `}`")?;
            self.expect(Tok::Eq)?;
            let v = self.param_value()?;
            params.push((key, v));
            while self.eat(&Tok::Comma) || self.eat(&Tok::Semi) {}
        }
        Ok(RPerspective { kind, params })
    }

    fn param_value(&mut self) -> PResult<ParamValue> {
        match self.peek() {
            Tok::Int(_) | Tok::Minus => Ok(ParamValue::Int(self.int()?)),
            Tok::Ident(_) => Ok(ParamValue::Ident(self.ident("a name")?.text)),
            Tok::LParen => {
                self.bump();
                let mut items = vec![self.param_value()?];
                while self.eat(&Tok::Comma) {
                    items.push(self.param_value()?);
                }
                self.expect(Tok::RParen)?;
                Ok(ParamValue::Tuple(items))
            }
            _ => self.error("a parameter value"),
        }
    }

    fn value(&mut self) -> PResult<Value> {
        match self.peek().clone() {
            Tok::Int(_) | Tok::Minus => Ok(Value::Int(self.int()?)),
            Tok::Ident(s) => {
                self.bump();
                Ok(match s.as_str() {
                    "true" => Value::Bool(true),
                    "false" => Value::Bool(false),
                    _ => Value::sym(&s),
                })
            }
            _ => self.error("a value"),
        }
    }

    fn value_set(&mut self) -> PResult<Vec<Value>> {
        self.expect(Tok::LBrace)?;
        let mut vals = Vec::new();
        while !self.eat(&Tok::RBrace) {
            vals.push(self.value()?);
            self.eat(&Tok::Comma);
        }
        Ok(vals)
    }

    fn domain(&mut self) -> PResult<Domain> {
        if self.is_kw("bool") {
            self.bump();
            return Ok(Domain::Bool);
        }
        if *self.peek() == Tok::LBrace {
            return Ok(Domain::Set(self.value_set()?));
        }
        let lo = self.int()?;
        self.expect(Tok::DotDot)?;
        let hi = self.int()?;
        Ok(Domain::Range(lo, hi))
    }

    fn term(&mut self) -> PResult<RTerm> {
        match self.peek() {
            Tok::Int(_) | Tok::Minus => Ok(RTerm::Int(self.int()?)),
            Tok::Ident(_) => Ok(RTerm::Name(self.ident("a term")?)),
            _ => self.error("a variable or literal"),
        }
    }

    fn var_decl(&mut self, constant: bool) -> PResult<RVar> {
        let name = self.ident("a variable name")?;
        self.expect(Tok::Colon)?;
        let domain = self.domain()?;
        let mut anchor = RAnchor::None;
        if self.eat(&Tok::At) {
            let kind = self.ident("an anchor kind")?;
            anchor = match kind.text.as_str() {
                "pos" => {
                    self.expect(Tok::LParen)?;
                    let x = self.term()?;
                    self.expect(Tok::Comma)?;
                    let y = self.term()?;
                    self.expect(Tok::RParen)?;
                    RAnchor::Pos(x, y)
                }
                "room" => {
                    self.expect(Tok::LParen)?;
                    let r = self.term()?;
                    self.expect(Tok::RParen)?;
                    RAnchor::Room(r)
                }
                "page" => RAnchor::Page,
                _ => {
                    return Err(Diagnostic::new(
                        kind.span,
                        format!("unknown anchor `@{}`; expected @pos, @room or @page", kind.text),
                    ))
                }
            };
        }
        let mut init = None;
        if self.eat(&Tok::Eq) {
            let span = self.span();
            init = Some((self.value()?, span));
        } else if constant {
            return self.error("`=` and the constant's value");
        }
        Ok(RVar {
            name,
            domain,
            anchor,
            init,
            constant,
        })
    }

    fn operator(&mut self) -> PResult<ROperator> {
        let name = self.ident("an operator name")?;
        self.expect(Tok::LParen)?;
        let mut params = Vec::new();
        if !self.eat(&Tok::RParen) {
            loop {
                let pname = self.ident("a parameter name")?;
                self.expect(Tok::Colon)?;
                let dom = if *self.peek() == Tok::LBrace {
                    ParamDomain::Set(self.value_set()?)
                } else {
                    let lo = self.int()?;
                    self.expect(Tok::DotDot)?;
                    ParamDomain::Range(lo, self.int()?)
                };
                params.push((pname, dom));
                if self.eat(&Tok::RParen) {
                    break;
                }
                self.expect(Tok::Comma)?;
            }
        }
        self.expect(Tok::LBrace)?;
        let mut pre = None;
        if self.is_kw("pre") && *self.peek_at(1) == Tok::Colon {
            self.bump();
            self.bump();
            pre = Some(self.formula()?);
        }
        let mut effects = Vec::new();
        if self.is_kw("eff") && *self.peek_at(1) == Tok::Colon {
            self.bump();
            self.bump();
            while *self.peek() != Tok::RBrace {
                let when = if self.is_kw("when") {
                    self.bump();
                    let c = self.formula()?;
                    self.expect_kw("then")?;
                    Some(c)
                } else {
                    None
                };
                let var = self.ident("an assigned variable or `}`")?;
                self.expect(Tok::Assign)?;
                let expr = self.expr()?;
                effects.push(REffect { when, var, expr });
                while self.eat(&Tok::Semi) || self.eat(&Tok::Comma) {}
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(ROperator {
            name,
            params,
            pre,
            effects,
        })
    }

    fn expr(&mut self) -> PResult<RExpr> {
        let mut lhs = self.expr_atom()?;
        loop {
            if self.eat(&Tok::Plus) {
                lhs = RExpr::Add(Box::new(lhs), Box::new(self.expr_atom()?));
            } else if self.eat(&Tok::Minus) {
                lhs = RExpr::Sub(Box::new(lhs), Box::new(self.expr_atom()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn expr_atom(&mut self) -> PResult<RExpr> {
        if self.eat(&Tok::LParen) {
            let e = self.expr()?;
            self.expect(Tok::RParen)?;
            return Ok(e);
        }
        Ok(RExpr::Term(self.term()?))
    }

    fn formula(&mut self) -> PResult<RFormula> {
        let mut lhs = self.unary()?;
        while self.is_kw("and") {
            self.bump();
            let rhs = self.unary()?;
            lhs = RFormula::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn is_epistemic_start(&self) -> bool {
        matches!(self.peek(), Tok::Ident(s) if EPISTEMIC.contains(&s.as_str())) && *self.peek_at(1) == Tok::LBracket
    }

    fn unary(&mut self) -> PResult<RFormula> {
        if self.is_kw("not") {
            self.bump();
            return Ok(RFormula::Not(Box::new(self.unary()?)));
        }
        if self.eat(&Tok::LParen) {
            let f = self.formula()?;
            self.expect(Tok::RParen)?;
            return Ok(f);
        }
        if self.is_epistemic_start() {
            return self.epistemic();
        }
        if self.eat(&Tok::At) {
            let name = self.ident("a relation name")?;
            return self.call(name);
        }
        if matches!(self.peek(), Tok::Ident(_)) && *self.peek_at(1) == Tok::LParen {
            let name = self.ident("a relation name")?;
            return self.call(name);
        }
        let lhs = self.term()?;
        let span = self.span();
        let op = match self.peek() {
            Tok::Eq => "=",
            Tok::Ne => "!=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            _ => return self.error("a comparison operator"),
        };
        self.bump();
        let rhs = self.term()?;
        Ok(RFormula::Rel {
            name: Name {
                text: op.to_string(),
                span,
            },
            args: vec![lhs, rhs],
        })
    }

    fn call(&mut self, name: Name) -> PResult<RFormula> {
        self.expect(Tok::LParen)?;
        let mut args = vec![self.term()?];
        while self.eat(&Tok::Comma) {
            args.push(self.term()?);
        }
        self.expect(Tok::RParen)?;
        Ok(RFormula::Rel { name, args })
    }

    fn agent_list(&mut self) -> PResult<Vec<Name>> {
        self.expect(Tok::LBracket)?;
        let mut agents = vec![self.ident("an agent name")?];
        while self.eat(&Tok::Comma) {
            agents.push(self.ident("an agent name")?);
        }
        self.expect(Tok::RBracket)?;
        Ok(agents)
    }

    /// A bare variable target: an identifier that does not start a longer formula.
    fn target(&mut self) -> PResult<RTarget> {
        if let Tok::Ident(s) = self.peek() {
            let starts_formula = s == "not"
                || self.is_epistemic_start()
                || matches!(
                    self.peek_at(1),
                    Tok::LParen | Tok::Eq | Tok::Ne | Tok::Lt | Tok::Le | Tok::Gt | Tok::Ge
                );
            if !starts_formula {
                return Ok(RTarget::Var(self.ident("a variable")?));
            }
        }
        Ok(RTarget::Formula(Box::new(self.unary()?)))
    }

    fn knowledge_body(&mut self) -> PResult<RFormula> {
        match self.target()? {
            RTarget::Formula(f) => Ok(*f),
            RTarget::Var(n) => Err(Diagnostic::new(
                n.span,
                format!("knowledge operators need a formula, not the bare variable `{}`", n.text),
            )),
        }
    }

    fn epistemic(&mut self) -> PResult<RFormula> {
        let op = self.ident("an epistemic operator")?;
        let agents = self.agent_list()?;
        let single = op.text.len() == 1;
        if single {
            if agents.len() != 1 {
                return Err(Diagnostic::new(
                    op.span,
                    format!("`{}` takes exactly one agent; use the group form for several", op.text),
                ));
            }
            let agent = agents.into_iter().next().expect("one agent");
            return Ok(if op.text == "S" {
                RFormula::Sees(agent, self.target()?)
            } else {
                RFormula::Knows(agent, Box::new(self.knowledge_body()?))
            });
        }
        let mode = match op.text.as_bytes()[0] {
            b'E' => GroupMode::Everyone,
            b'D' => GroupMode::Distributed,
            _ => GroupMode::Common,
        };
        let knows = op.text.ends_with('K');
        let target = if knows {
            RTarget::Formula(Box::new(self.knowledge_body()?))
        } else {
            self.target()?
        };
        Ok(RFormula::Group {
            mode,
            knows,
            agents,
            target,
            span: op.span,
        })
    }
}

/// Names visible while resolving formulas and expressions.
struct Scope<'a> {
    agents: &'a HashMap<String, usize>,
    vars: &'a HashMap<String, usize>,
    symbols: &'a HashSet<String>,
    params: &'a [String],
    relations: &'a RelationRegistry,
}

impl Scope<'_> {
    fn term(&self, t: &RTerm, diags: &mut Vec<Diagnostic>) -> Term {
        match t {
            RTerm::Int(i) => Term::Lit(Value::Int(*i)),
            RTerm::Name(n) => {
                if let Some(&v) = self.vars.get(&n.text) {
                    Term::Var(v)
                } else if let Some(k) = self.params.iter().position(|p| *p == n.text) {
                    Term::Param(k)
                } else if n.text == "true" || n.text == "false" {
                    Term::Lit(Value::Bool(n.text == "true"))
                } else if self.symbols.contains(&n.text) {
                    Term::Lit(Value::sym(&n.text))
                } else {
                    diags.push(Diagnostic::new(n.span.clone(), format!("undeclared identifier `{}`", n.text)));
                    Term::Lit(Value::Int(0))
                }
            }
        }
    }

    fn agent(&self, n: &Name, diags: &mut Vec<Diagnostic>) -> usize {
        match self.agents.get(&n.text) {
            Some(&a) => a,
            None => {
                diags.push(Diagnostic::new(n.span.clone(), format!("undeclared agent `{}`", n.text)));
                0
            }
        }
    }

    fn var(&self, n: &Name, diags: &mut Vec<Diagnostic>) -> usize {
        match self.vars.get(&n.text) {
            Some(&v) => v,
            None => {
                diags.push(Diagnostic::new(n.span.clone(), format!("undeclared variable `{}`", n.text)));
                0
            }
        }
    }

    fn formula(&self, f: &RFormula, diags: &mut Vec<Diagnostic>) -> Formula {
        match f {
            RFormula::Rel { name, args } => {
                match self.relations.get(&name.text) {
                    None => diags.push(Diagnostic::new(
                        name.span.clone(),
                        format!("unknown relation `{}`", name.text),
                    )),
                    Some(r) if r.arity != args.len() => diags.push(Diagnostic::new(
                        name.span.clone(),
                        format!("relation `{}` takes {} arguments, got {}", name.text, r.arity, args.len()),
                    )),
                    Some(_) => {}
                }
                Formula::Rel {
                    name: name.text.clone(),
                    args: args.iter().map(|t| self.term(t, diags)).collect(),
                }
            }
            RFormula::Not(g) => Formula::not(self.formula(g, diags)),
            RFormula::And(a, b) => Formula::and(self.formula(a, diags), self.formula(b, diags)),
            RFormula::Sees(agent, target) => {
                let i = self.agent(agent, diags);
                match target {
                    RTarget::Var(v) => Formula::SeesVar(i, self.var(v, diags)),
                    RTarget::Formula(g) => Formula::sees(i, self.formula(g, diags)),
                }
            }
            RFormula::Knows(agent, g) => Formula::knows(self.agent(agent, diags), self.formula(g, diags)),
            RFormula::Group {
                mode,
                knows,
                agents,
                target,
                span,
            } => {
                let mut group = Vec::new();
                for n in agents {
                    let a = self.agent(n, diags);
                    if group.contains(&a) && self.agents.contains_key(&n.text) {
                        diags.push(Diagnostic::new(n.span.clone(), format!("agent `{}` listed twice", n.text)));
                    }
                    group.push(a);
                }
                match (knows, target) {
                    (true, RTarget::Formula(g)) => Formula::GroupKnows(*mode, group, Box::new(self.formula(g, diags))),
                    (false, RTarget::Formula(g)) => {
                        Formula::GroupSees(*mode, group, Target::Formula(Box::new(self.formula(g, diags))))
                    }
                    (false, RTarget::Var(v)) => Formula::GroupSees(*mode, group, Target::Var(self.var(v, diags))),
                    (true, RTarget::Var(_)) => {
                        diags.push(Diagnostic::new(span.clone(), "knowledge operators need a formula"));
                        Formula::GroupKnows(*mode, group, Box::new(Formula::rel("=", Vec::new())))
                    }
                }
            }
        }
    }

    fn expr(&self, e: &RExpr, diags: &mut Vec<Diagnostic>) -> Expr {
        match e {
            RExpr::Term(t) => match self.term(t, diags) {
                Term::Var(v) => Expr::Var(v),
                Term::Lit(x) => Expr::Lit(x),
                Term::Param(k) => Expr::Param(k),
            },
            RExpr::Add(a, b) => Expr::Add(Box::new(self.expr(a, diags)), Box::new(self.expr(b, diags))),
            RExpr::Sub(a, b) => Expr::Sub(Box::new(self.expr(a, diags)), Box::new(self.expr(b, diags))),
        }
    }
}

fn syntax(file: &str, text: &str) -> Result<RProblem, Vec<Diagnostic>> {
    let toks = lex(file, text).map_err(|d| vec![d])?;
    let mut p = Parser::new(toks);
    p.problem().map_err(|d| vec![d])
}

/// Symbols that may appear as literals: members of enumerated domains and
/// parameter sets.
fn symbols_of<'a>(domains: impl Iterator<Item = &'a [Value]>) -> HashSet<String> {
    domains
        .flatten()
        .filter_map(|v| match v {
            Value::Sym(s) => Some(s.as_str().to_string()),
            _ => None,
        })
        .collect()
}

/// Parses a problem file. `file` is only used in diagnostics.
pub fn parse_problem_named(file: &str, text: &str) -> Result<Problem, Vec<Diagnostic>> {
    let raw = syntax(file, text)?;
    resolve(file, raw)
}

fn resolve(file: &str, raw: RProblem) -> Result<Problem, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let head = raw.span.clone().unwrap_or(Span {
        file: file.to_string(),
        line: 1,
        col: 1,
        end_col: 1,
    });
    let mut names: HashMap<String, Span> = HashMap::new();
    let mut claim = |n: &Name, diags: &mut Vec<Diagnostic>| {
        if let Some(prev) = names.get(&n.text) {
            diags.push(Diagnostic::new(
                n.span.clone(),
                format!("`{}` is already declared at {}:{}", n.text, prev.line, prev.col),
            ));
        } else {
            names.insert(n.text.clone(), n.span.clone());
        }
    };
    for a in &raw.agents {
        if KEYWORDS.contains(&a.text.as_str()) {
            diags.push(Diagnostic::new(a.span.clone(), format!("`{}` is reserved", a.text)));
        }
        claim(a, &mut diags);
    }
    for v in &raw.vars {
        claim(&v.name, &mut diags);
    }
    if raw.agents.is_empty() {
        diags.push(Diagnostic::new(head.clone(), "problem declares no agents"));
    }
    let agents: HashMap<String, usize> = raw.agents.iter().enumerate().map(|(i, a)| (a.text.clone(), i)).collect();
    let var_ids: HashMap<String, usize> = raw.vars.iter().enumerate().map(|(i, v)| (v.name.text.clone(), i)).collect();
    let set_domains = raw.vars.iter().filter_map(|v| match &v.domain {
        Domain::Set(vs) => Some(vs.as_slice()),
        _ => None,
    });
    let param_sets = raw.operators.iter().flat_map(|o| {
        o.params.iter().filter_map(|(_, d)| match d {
            ParamDomain::Set(vs) => Some(vs.as_slice()),
            _ => None,
        })
    });
    let symbols = symbols_of(set_domains.chain(param_sets));
    let relations = RelationRegistry::builtin();
    let scope = Scope {
        agents: &agents,
        vars: &var_ids,
        symbols: &symbols,
        params: &[],
        relations: &relations,
    };

    // Variables and initial values.
    let anchor_term = |t: &RTerm, diags: &mut Vec<Diagnostic>| match t {
        RTerm::Int(i) => AnchorTerm::Lit(Value::Int(*i)),
        RTerm::Name(n) => AnchorTerm::Var(scope.var(n, diags)),
    };
    let mut vars = Vec::new();
    let mut initial: Vec<Option<(Value, Span)>> = Vec::new();
    for v in &raw.vars {
        let anchor = match &v.anchor {
            RAnchor::None => Anchor::None,
            RAnchor::Pos(x, y) => Anchor::Pos(anchor_term(x, &mut diags), anchor_term(y, &mut diags)),
            RAnchor::Room(r) => Anchor::Room(anchor_term(r, &mut diags)),
            RAnchor::Page => Anchor::Page,
        };
        if let Domain::Range(lo, hi) = v.domain {
            if lo > hi {
                diags.push(Diagnostic::new(v.name.span.clone(), format!("empty domain {lo}..{hi}")));
            }
        }
        vars.push(VarDecl {
            name: v.name.text.clone(),
            domain: v.domain.clone(),
            kind: if v.constant { VarKind::Constant } else { VarKind::Fluent },
            anchor,
        });
        initial.push(v.init.clone());
    }
    for (n, value, span) in &raw.inits {
        match var_ids.get(&n.text) {
            None => diags.push(Diagnostic::new(n.span.clone(), format!("undeclared variable `{}`", n.text))),
            Some(&id) if vars[id].kind == VarKind::Constant => diags.push(Diagnostic::new(
                n.span.clone(),
                format!("constant `{}` is fixed at its declaration", n.text),
            )),
            Some(&id) => initial[id] = Some((value.clone(), span.clone())),
        }
    }
    let mut init_values = Vec::new();
    for (decl, (init, rv)) in vars.iter().zip(initial.iter().zip(&raw.vars)) {
        match init {
            None => {
                diags.push(Diagnostic::new(
                    rv.name.span.clone(),
                    format!("variable `{}` has no initial value", decl.name),
                ));
                init_values.push(Value::Int(0));
            }
            Some((value, span)) => {
                if !decl.domain.contains(value) {
                    diags.push(Diagnostic::new(
                        span.clone(),
                        format!("value {value} is outside the domain of `{}`", decl.name),
                    ));
                }
                init_values.push(value.clone());
            }
        }
    }

    // Perspective.
    let mut perspective = PerspectiveSpec::full();
    let mut perspective_span = head.clone();
    if raw.perspectives.len() > 1 {
        diags.push(Diagnostic::new(
            raw.perspectives[1].kind.span.clone(),
            "only one perspective declaration is allowed",
        ));
    }
    if let Some(rp) = raw.perspectives.first() {
        perspective_span = rp.kind.span.clone();
        match PerspectiveKind::from_name(&rp.kind.text) {
            None => diags.push(Diagnostic::new(
                rp.kind.span.clone(),
                format!(
                    "unknown perspective `{}`; expected full, euclidean2d, latched-rooms or social",
                    rp.kind.text
                ),
            )),
            Some(kind) => {
                perspective = PerspectiveSpec {
                    kind,
                    params: rp.params.iter().map(|(k, v)| (k.text.clone(), v.clone())).collect(),
                }
            }
        }
    }

    // Operators.
    let mut operators = Vec::new();
    let mut op_names = HashMap::new();
    for ro in &raw.operators {
        if op_names.insert(ro.name.text.clone(), ()).is_some() {
            diags.push(Diagnostic::new(
                ro.name.span.clone(),
                format!("operator `{}` is already declared", ro.name.text),
            ));
        }
        let pnames: Vec<String> = ro.params.iter().map(|(n, _)| n.text.clone()).collect();
        for (k, (n, d)) in ro.params.iter().enumerate() {
            if pnames[..k].contains(&n.text) {
                diags.push(Diagnostic::new(n.span.clone(), format!("parameter `{}` repeated", n.text)));
            }
            if let ParamDomain::Range(lo, hi) = d {
                if lo > hi {
                    diags.push(Diagnostic::new(n.span.clone(), format!("empty range {lo}..{hi}")));
                }
            }
        }
        let op_scope = Scope {
            params: &pnames,
            ..scope
        };
        let pre = ro.pre.as_ref().map(|f| op_scope.formula(f, &mut diags));
        let mut effects = Vec::new();
        for e in &ro.effects {
            let var = scope.var(&e.var, &mut diags);
            if var_ids.contains_key(&e.var.text) && vars[var].kind == VarKind::Constant {
                diags.push(Diagnostic::new(
                    e.var.span.clone(),
                    format!("cannot assign constant `{}`", e.var.text),
                ));
            }
            effects.push(Effect {
                when: e.when.as_ref().map(|f| op_scope.formula(f, &mut diags)),
                var,
                expr: op_scope.expr(&e.expr, &mut diags),
            });
        }
        operators.push(Operator {
            name: ro.name.text.clone(),
            params: ro
                .params
                .iter()
                .map(|(n, d)| Param {
                    name: n.text.clone(),
                    domain: d.clone(),
                })
                .collect(),
            pre,
            effects,
        });
    }
    let goals = raw.goals.iter().map(|f| scope.formula(f, &mut diags)).collect();
    let maintain = raw.maintain.iter().map(|f| scope.formula(f, &mut diags)).collect();
    if !diags.is_empty() {
        return Err(diags);
    }
    let parts = ProblemParts {
        name: raw.name,
        agents: raw.agents.iter().map(|a| a.text.clone()).collect(),
        vars,
        perspective,
        operators,
        initial: init_values,
        goals,
        maintain,
    };
    Problem::with_relations(parts, relations).map_err(|e| {
        let span = match e {
            ProblemError::Perspective(_) => perspective_span,
            _ => head,
        };
        vec![Diagnostic::new(span, e.to_string())]
    })
}

/// Parses a formula against an already loaded problem.
pub fn parse_formula_named(file: &str, text: &str, problem: &Problem) -> Result<Formula, Vec<Diagnostic>> {
    let toks = lex(file, text).map_err(|d| vec![d])?;
    let mut p = Parser::new(toks);
    let raw = p.formula().map_err(|d| vec![d])?;
    if *p.peek() != Tok::Eof {
        return Err(vec![Diagnostic::new(
            p.span(),
            format!("unexpected {} after formula", p.peek()),
        )]);
    }
    let agents: HashMap<String, usize> = problem.agents().iter().enumerate().map(|(i, a)| (a.clone(), i)).collect();
    let vars: HashMap<String, usize> = problem.vars().iter().enumerate().map(|(i, v)| (v.name.clone(), i)).collect();
    let set_domains = problem.vars().iter().filter_map(|v| match &v.domain {
        Domain::Set(vs) => Some(vs.as_slice()),
        _ => None,
    });
    let param_sets = problem.operators().iter().flat_map(|o| {
        o.params.iter().filter_map(|p| match &p.domain {
            ParamDomain::Set(vs) => Some(vs.as_slice()),
            _ => None,
        })
    });
    let symbols = symbols_of(set_domains.chain(param_sets));
    let scope = Scope {
        agents: &agents,
        vars: &vars,
        symbols: &symbols,
        params: &[],
        relations: problem.relations().as_ref(),
    };
    let mut diags = Vec::new();
    let f = scope.formula(&raw, &mut diags);
    if diags.is_empty() {
        Ok(f)
    } else {
        Err(diags)
    }
}
