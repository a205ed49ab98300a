//! Text format for planning problems.
//!
//! ```text
//! problem "corridor"
//! agents a b
//! perspective latched-rooms { radius = 1  location = (a, loc_a)  location = (b, loc_b) }
//! var loc_a: 1..4 @room(loc_a) = 1
//! const loc_b: 1..4 @room(loc_b) = 3
//! operator move(d: {-1, 1}) { eff: loc_a := loc_a + d }
//! goal: K[a] (loc_b = 3)
//! ```
//!
//! Problems are parsed in two passes: a syntax tree with source positions is
//! built first, then names are resolved, so declarations may refer to
//! variables declared further down.

use std::fmt;

mod lexer;
mod parser;
mod printer;

pub use printer::{print_formula, print_problem};

use crate::epistemic::{Formula, COMPARISONS};
use crate::planning::Problem;

/// Source position of a token: 1-based line and column range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Span {
    pub file: String,
    pub line: usize,
    pub col: usize,
    pub end_col: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub span: Span,
    pub message: String,
}

impl Diagnostic {
    pub fn new(span: Span, message: impl Into<String>) -> Self {
        Diagnostic {
            span,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}: {}", self.span.file, self.span.line, self.span.col, self.message)
    }
}

impl std::error::Error for Diagnostic {}

/// One diagnostic per line.
pub fn render(diags: &[Diagnostic]) -> String {
    diags.iter().map(|d| format!("{d}\n")).collect()
}

/// Parses and validates a problem. `file` labels diagnostics.
pub fn parse_problem(file: &str, text: &str) -> Result<Problem, Vec<Diagnostic>> {
    parser::parse_problem_named(file, text)
}

/// Parses a formula over the vocabulary of `problem`.
pub fn parse_formula(text: &str, problem: &Problem) -> Result<Formula, Vec<Diagnostic>> {
    parser::parse_formula_named("<query>", text, problem)
}

fn is_comparison(name: &str) -> bool {
    COMPARISONS.contains(&name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{Anchor, AnchorTerm, Value, VarKind};

    const BOX: &str = r#"
problem "box"
agents a b
perspective euclidean2d {
  aperture = 90
  pose = (a, ax, ay, adir)
  pose = (b, bx, by, bdir)
}
var ax: -5..5 @pos(ax, ay) = 0
var ay: -5..5 @pos(ax, ay) = 0
var adir: -179..180 @pos(ax, ay) = 45
const bx: -5..5 @pos(bx, by) = 3
const by: -5..5 @pos(bx, by) = 3
const bdir: -179..180 @pos(bx, by) = -135
const o: 0..3 @pos(1, 1) = 2
operator move(dx: -1..1, dy: -1..1) {
  eff:
    ax := ax + dx
    ay := ay + dy
}
operator turn(d: {-45, 45}) { pre: not (adir > 135) eff: adir := adir + d }
goal: K[a] (o = 2)
goal: not K[b] K[a] (o = 2)
"#;

    #[test]
    fn parses_declarations() {
        let p = parse_problem("box.epl", BOX).unwrap();
        assert_eq!(p.name(), "box");
        assert_eq!(p.agents(), ["a", "b"]);
        assert_eq!(p.vars().len(), 7);
        let o = p.var_id("o").unwrap();
        assert_eq!(p.vars()[o].kind, VarKind::Constant);
        assert_eq!(
            p.vars()[o].anchor,
            Anchor::Pos(AnchorTerm::Lit(Value::Int(1)), AnchorTerm::Lit(Value::Int(1)))
        );
        assert_eq!(p.operators().len(), 2);
        assert_eq!(p.goals().len(), 2);
        assert_eq!(p.ground_all().len(), 11);
    }

    #[test]
    fn printing_round_trips() {
        let p = parse_problem("box.epl", BOX).unwrap();
        let text = print_problem(&p);
        let q = parse_problem("printed", &text).unwrap();
        assert_eq!(p, q);
        assert_eq!(print_problem(&q), text);
    }

    #[test]
    fn formulas_round_trip() {
        let p = parse_problem("box.epl", BOX).unwrap();
        for src in [
            "K[a] (o = 2)",
            "S[a] o",
            "S[a] (ax = 1 and ay = 2)",
            "not K[a] S[b] S[a] o",
            "DK[a, b] ((o = 2) and bx = 3)",
            "CS[a, b] o and ES[a] (o = 1)",
            "@far_away(ax, ay, bx, by, 0, 0)",
            "EK[a,b] CK[a,b] (o = 2)",
        ] {
            let f = parse_formula(src, &p).unwrap();
            let printed = print_formula(&f, &p);
            assert_eq!(parse_formula(&printed, &p).unwrap(), f, "{src} -> {printed}");
        }
    }

    #[test]
    fn knowledge_of_a_bare_variable_is_rejected() {
        let p = parse_problem("box.epl", BOX).unwrap();
        let e = parse_formula("EK[a, b] o", &p).unwrap_err();
        assert!(e[0].message.contains("knowledge operators need a formula"), "{e:?}");
        assert!(parse_formula("K[a] o", &p).is_err());
    }

    fn first_error(text: &str) -> String {
        parse_problem("t.epl", text).unwrap_err()[0].to_string()
    }

    #[test]
    fn undeclared_names_are_located() {
        let text = "problem \"p\"\nagents a\nvar x: 0..1 = 0\ngoal: K[a] (y = 1)\n";
        assert_eq!(first_error(text), "t.epl:4:13: undeclared identifier `y`");
        let text = "problem \"p\"\nagents a\nvar x: 0..1 = 0\ngoal: K[c] (x = 1)\n";
        assert_eq!(first_error(text), "t.epl:4:9: undeclared agent `c`");
    }

    #[test]
    fn syntax_errors_are_located() {
        let text = "problem \"p\"\nagents a\nvar x 0..1 = 0\n";
        assert_eq!(first_error(text), "t.epl:3:7: expected `:`, found `0`");
        let text = "problem \"p\"\nagents a\nvar x: 0..1 = 0\ngoal: x =\n";
        assert!(first_error(text).starts_with("t.epl:5:1: expected a variable or literal"));
    }

    #[test]
    fn semantic_errors_are_reported() {
        let base = "problem \"p\"\nagents a\n";
        assert!(first_error(&format!("{base}var x: 0..1 = 3\n")).contains("outside the domain"));
        assert!(first_error(&format!("{base}var x: 0..1\n")).contains("no initial value"));
        assert!(first_error(&format!("{base}var x: 0..1 = 0\nvar x: 0..1 = 0\n")).contains("already declared"));
        assert!(first_error(&format!("{base}const x: 0..1 = 0\noperator o() {{ eff: x := 1 }}\n"))
            .contains("cannot assign constant"));
        assert!(first_error(&format!("{base}perspective nosuch {{}}\n")).contains("unknown perspective"));
        assert!(first_error(&format!("{base}var x: 0..1 = 0\ngoal: @nope(x)\n")).contains("unknown relation"));
        assert!(first_error(&format!("{base}var x: 0..1 = 0\ngoal: @far_away(x)\n")).contains("takes 6 arguments"));
        assert!(first_error("problem \"p\"\nvar x: 0..1 = 0\n").contains("no agents"));
    }

    #[test]
    fn init_overrides_and_params_in_formulas() {
        let text = r#"
problem "posts"
agents a b
perspective social { friend = (a, b, f_ab) }
const f_ab: 0..1 = 1
var post: {none, a, b} @page = none
init post = b
operator post(page: {a, b}, msg: {m1, m2}) {
  eff: when msg = m1 then post := page
}
goal: K[a] (post != none)
"#;
        let p = parse_problem("posts.epl", text).unwrap();
        assert_eq!(p.initial().get(p.var_id("post").unwrap()), &Value::sym("b"));
        let acts = p.ground_all();
        assert_eq!(acts.len(), 4);
        assert_eq!(acts[0].to_string(), "post(a,m1)");
        let q = parse_problem("again", &print_problem(&p)).unwrap();
        assert_eq!(p, q);
    }
}
