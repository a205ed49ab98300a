//! Shared fixtures for the integration tests: one small world per built-in
//! perspective and random generators for states and formulas.

#![allow(dead_code)]

use epiplan_core::dsl;
use epiplan_core::planning::Problem;
use epiplan_core::{Formula, GroupMode, LocalState, State, Target, Term, Value, VarSet};
use rand::seq::SliceRandom;
use rand::Rng;

pub const FULL: &str = r#"
problem "full"
agents a b c
var x: 0..2 = 0
var y: 0..2 = 1
var z: {p, q} = p
"#;

pub const EUCLIDEAN: &str = r#"
problem "cones"
agents a b c
perspective euclidean2d {
  aperture = 90
  pose = (a, ax, ay, ad)
  pose = (b, bx, by, bd)
  pose = (c, cx, cy, cd)
}
var ax: -4..4 @pos(ax, ay) = 0
var ay: -4..4 @pos(ax, ay) = 0
var ad: -179..180 @pos(ax, ay) = 45
var bx: -4..4 @pos(bx, by) = 3
var by: -4..4 @pos(bx, by) = 3
var bd: -179..180 @pos(bx, by) = -135
var cx: -4..4 @pos(cx, cy) = -3
var cy: -4..4 @pos(cx, cy) = 2
var cd: -179..180 @pos(cx, cy) = 0
var o1: 0..2 @pos(1, 1) = 1
var ox: -4..4 @pos(ox, oy) = 2
var oy: -4..4 @pos(ox, oy) = -2
var o2: 0..2 @pos(ox, oy) = 2
"#;

pub const ROOMS: &str = r#"
problem "rooms"
agents a b c
perspective latched-rooms {
  radius = 1
  location = (a, loc_a)
  location = (b, loc_b)
  location = (c, loc_c)
}
var loc_a: 1..4 @room(loc_a) = 1
var loc_b: 1..4 @room(loc_b) = 2
var loc_c: 1..4 @room(loc_c) = 4
var qroom: 1..4 @room(qroom) = 3
var q: 0..1 @room(qroom) = 1
var sees__a__q: 0..1 = 0
var sees__b__q: 0..1 = 1
var sees__c__q: 0..1 = 0
var r: 0..2 @room(2) = 1
var g: 0..1 = 0
"#;

pub const SOCIAL: &str = r#"
problem "pages"
agents a b c
perspective social {
  friend = (a, b, f_ab)
  friend = (b, c, f_bc)
  friend = (a, c, f_ac)
}
var f_ab: 0..1 = 1
var f_bc: 0..1 = 0
var f_ac: 0..1 = 1
var post1: {none, a, b, c} @page = none
var post2: {none, a, b, c} @page = b
var w: 0..1 = 0
"#;

pub struct World {
    pub name: &'static str,
    pub problem: Problem,
}

pub fn worlds() -> Vec<World> {
    [("full", FULL), ("euclidean2d", EUCLIDEAN), ("latched-rooms", ROOMS), ("social", SOCIAL)]
        .into_iter()
        .map(|(name, text)| World {
            name,
            problem: dsl::parse_problem(name, text).unwrap_or_else(|e| panic!("{}", dsl::render(&e))),
        })
        .collect()
}

impl World {
    pub fn num_agents(&self) -> usize {
        self.problem.agents().len()
    }

    pub fn num_vars(&self) -> usize {
        self.problem.vars().len()
    }

    pub fn random_state(&self, rng: &mut impl Rng) -> State {
        State::new(
            self.problem
                .vars()
                .iter()
                .map(|v| v.domain.values().choose(rng).expect("non-empty domain").clone())
                .collect(),
        )
    }

    /// A random sub-state of `s`, each entry kept with probability `keep`.
    pub fn random_local(&self, rng: &mut impl Rng, s: &State, keep: f64) -> LocalState {
        let l = s.to_local();
        let mask = VarSet::from_iter(l.num_vars(), (0..l.num_vars()).filter(|_| rng.gen_bool(keep)));
        l.with_mask(mask)
    }

    pub fn random_group(&self, rng: &mut impl Rng) -> Vec<usize> {
        let n = self.num_agents();
        let size = rng.gen_range(1..=n);
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(rng);
        all.truncate(size);
        all.sort_unstable();
        all
    }

    fn atom(&self, rng: &mut impl Rng, s: &State) -> Formula {
        let v = rng.gen_range(0..self.num_vars());
        // Half of the atoms hold in `s`, so knowledge is not vacuously false.
        let value = if rng.gen_bool(0.5) {
            s.get(v).clone()
        } else {
            self.problem.vars()[v].domain.values().choose(rng).unwrap().clone()
        };
        let op = if rng.gen_bool(0.8) { "=" } else { "!=" };
        Formula::rel(op, vec![Term::Var(v), Term::Lit(value)])
    }

    /// Random formula with at most `depth` nested operators.
    pub fn random_formula(&self, rng: &mut impl Rng, depth: usize, s: &State) -> Formula {
        if depth == 0 || rng.gen_bool(0.25) {
            return self.atom(rng, s);
        }
        let i = rng.gen_range(0..self.num_agents());
        let mode = *[GroupMode::Everyone, GroupMode::Distributed, GroupMode::Common]
            .choose(rng)
            .unwrap();
        let sub = |rng: &mut _| self.random_formula(rng, depth - 1, s);
        match rng.gen_range(0..8) {
            0 => Formula::not(sub(rng)),
            1 => Formula::and(sub(rng), sub(rng)),
            2 => Formula::knows(i, sub(rng)),
            3 => Formula::SeesVar(i, rng.gen_range(0..self.num_vars())),
            4 => Formula::sees(i, sub(rng)),
            5 => Formula::GroupKnows(mode, self.random_group(rng), Box::new(sub(rng))),
            6 => Formula::GroupSees(mode, self.random_group(rng), Target::Var(rng.gen_range(0..self.num_vars()))),
            _ => Formula::GroupSees(mode, self.random_group(rng), Target::Formula(Box::new(sub(rng)))),
        }
    }
}

pub fn implies(a: Formula, b: Formula) -> Formula {
    Formula::not(Formula::and(a, Formula::not(b)))
}

/// Common perspective by the textbook iteration: intersect every member's
/// view, `|l|` times over, without stopping early.
pub fn fc_by_iteration(problem: &Problem, group: &[usize], l: &LocalState) -> (LocalState, usize) {
    let p = problem.perspective();
    let mut cur = l.clone();
    let mut settled_after = None;
    for k in 0..=l.len() {
        let mut next = p.apply(group[0], &cur);
        for &i in &group[1..] {
            next = next.intersect(&p.apply(i, &cur)).expect("views of one state agree");
        }
        if next == cur && settled_after.is_none() {
            settled_after = Some(k);
        }
        cur = next;
    }
    (cur, settled_after.expect("iteration settles"))
}

/// Independent field-of-view check in floating point: the target is in view
/// when it coincides with the observer or lies within half the aperture of
/// the facing direction.
pub fn cone_sees(observer: (i64, i64, i64), target: (i64, i64), aperture: f64) -> bool {
    let (dx, dy) = ((target.0 - observer.0) as f64, (target.1 - observer.1) as f64);
    if dx == 0.0 && dy == 0.0 {
        return true;
    }
    let bearing = dy.atan2(dx).to_degrees();
    let mut rel = bearing - observer.2 as f64;
    while rel > 180.0 {
        rel -= 360.0;
    }
    while rel <= -180.0 {
        rel += 360.0;
    }
    rel.abs() <= aperture / 2.0 + 1e-9
}

pub fn int(v: &Value) -> i64 {
    v.as_int().expect("integer value")
}
