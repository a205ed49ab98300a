//! Breadth-first search with duplicate detection, optionally pruned by
//! novelty, evaluating goals and constraints lazily at node generation.

use std::fmt;
use std::hash::BuildHasherDefault;
use std::time::Instant;

use indexmap::IndexSet;
use rustc_hash::{FxHashMap, FxHashSet, FxHasher};
use serde::Serialize;
use smallvec::SmallVec;
use thiserror::Error;

use crate::epistemic::{EvalContext, EvalError};
use crate::planning::{Action, PlanError, Problem};
use crate::state::{State, Value};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SearchError {
    #[error("invalid search configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Bfs,
    Novelty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub algorithm: Algorithm,
    /// 1 or 2; only used by [`Algorithm::Novelty`].
    pub novelty_width: usize,
    pub max_nodes: Option<u64>,
    pub max_seconds: Option<f64>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            algorithm: Algorithm::Bfs,
            novelty_width: 1,
            max_nodes: None,
            max_seconds: None,
        }
    }
}

impl SearchConfig {
    pub fn bfs() -> Self {
        Self::default()
    }

    pub fn novelty(width: usize) -> Self {
        SearchConfig {
            algorithm: Algorithm::Novelty,
            novelty_width: width,
            ..Self::default()
        }
    }

    fn check(&self) -> Result<(), SearchError> {
        if self.algorithm == Algorithm::Novelty && !(1..=2).contains(&self.novelty_width) {
            return Err(SearchError::Config("novelty width must be 1 or 2".into()));
        }
        if self.max_nodes == Some(0) {
            return Err(SearchError::Config("node cap must be positive".into()));
        }
        if let Some(t) = self.max_seconds {
            if t.is_nan() || t <= 0.0 {
                return Err(SearchError::Config("time cap must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Plan(Vec<Action>),
    /// Every reachable state was explored without meeting the goal.
    Unsolvable,
    /// Novelty pruning left nothing to expand; says nothing about solvability.
    PrunedExhausted,
    ResourceLimit,
}

impl Outcome {
    pub fn plan(&self) -> Option<&[Action]> {
        match self {
            Outcome::Plan(p) => Some(p),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Plan(_) => "SOLVED",
            Outcome::Unsolvable => "UNSOLVABLE",
            Outcome::PrunedExhausted => "PRUNED_EXHAUSTED",
            Outcome::ResourceLimit => "RESOURCE_LIMIT",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchStats {
    /// `None` when no plan was found.
    pub plan_length: Option<usize>,
    pub generated: u64,
    pub expanded: u64,
    pub distinct_states: u64,
    pub external_calls: u64,
    pub elapsed: f64,
}

type Key = SmallVec<[Value; 8]>;
type FxIndexSet<T> = IndexSet<T, BuildHasherDefault<FxHasher>>;

/// Searches for a plan. Successors are generated in grounded-operator order,
/// expanded first-in first-out; the first goal state generated wins.
pub fn solve(ctx: &EvalContext, problem: &Problem, cfg: &SearchConfig) -> Result<(Outcome, SearchStats), SearchError> {
    cfg.check()?;
    let start = Instant::now();
    let calls0 = ctx.calls();
    let mut search = Search::new(ctx, problem, cfg);
    let outcome = search.run(start)?;
    let stats = SearchStats {
        plan_length: outcome.plan().map(<[Action]>::len),
        generated: search.generated,
        expanded: search.expanded,
        distinct_states: search.seen.len() as u64,
        external_calls: ctx.calls() - calls0,
        elapsed: start.elapsed().as_secs_f64(),
    };
    Ok((outcome, stats))
}

struct Search<'a> {
    ctx: &'a EvalContext,
    problem: &'a Problem,
    cfg: &'a SearchConfig,
    actions: Vec<Action>,
    /// Position of each variable in the fluent key, if it is a fluent.
    slot: Vec<Option<usize>>,
    seen: FxIndexSet<Key>,
    parent: Vec<u32>,
    via: Vec<u32>,
    dead: Vec<bool>,
    generated: u64,
    expanded: u64,
    novelty: Option<Novelty>,
}

impl<'a> Search<'a> {
    fn new(ctx: &'a EvalContext, problem: &'a Problem, cfg: &'a SearchConfig) -> Self {
        let mut slot = vec![None; problem.vars().len()];
        for (k, &v) in problem.fluents().iter().enumerate() {
            slot[v] = Some(k);
        }
        Search {
            ctx,
            problem,
            cfg,
            actions: problem.ground_all(),
            slot,
            seen: FxIndexSet::default(),
            parent: Vec::new(),
            via: Vec::new(),
            dead: Vec::new(),
            generated: 0,
            expanded: 0,
            novelty: (cfg.algorithm == Algorithm::Novelty).then(|| Novelty::new(cfg.novelty_width)),
        }
    }

    fn key(&self, s: &State) -> Key {
        self.problem.fluents().iter().map(|&v| s.get(v).clone()).collect()
    }

    fn state_of(&self, key: &Key) -> State {
        let mut vals = self.problem.initial().values().to_vec();
        for (k, &v) in self.problem.fluents().iter().enumerate() {
            vals[v] = key[k].clone();
        }
        State::new(vals)
    }

    fn out_of_budget(&self, start: &Instant) -> bool {
        if let Some(cap) = self.cfg.max_nodes {
            if self.generated >= cap {
                return true;
            }
        }
        if let Some(t) = self.cfg.max_seconds {
            if self.generated.is_multiple_of(256) && start.elapsed().as_secs_f64() > t {
                return true;
            }
        }
        false
    }

    fn plan_to(&self, mut node: usize) -> Vec<Action> {
        let mut out = Vec::new();
        while node != 0 {
            out.push(self.actions[self.via[node] as usize].clone());
            node = self.parent[node] as usize;
        }
        out.reverse();
        out
    }

    fn run(&mut self, start: Instant) -> Result<Outcome, SearchError> {
        let init = self.problem.initial().clone();
        let init_key = self.key(&init);
        self.seen.insert(init_key);
        self.parent.push(0);
        self.via.push(0);
        self.generated = 1;
        let ok = self.problem.maintain_holds(self.ctx, &init)?;
        self.dead.push(!ok);
        if !ok {
            return Ok(self.exhausted());
        }
        if self.problem.goal_holds(self.ctx, &init)? {
            return Ok(Outcome::Plan(Vec::new()));
        }
        if let Some(n) = &mut self.novelty {
            n.admit(&self.seen[0]);
        }

        let mut cursor = 0;
        while cursor < self.seen.len() {
            let node = cursor;
            cursor += 1;
            if self.dead[node] {
                continue;
            }
            let key = self.seen[node].clone();
            let state = self.state_of(&key);
            self.expanded += 1;
            for ai in 0..self.actions.len() {
                if self.out_of_budget(&start) {
                    return Ok(Outcome::ResourceLimit);
                }
                let Some(updates) = self.problem.updates(self.ctx, &self.actions[ai], &state)? else {
                    continue;
                };
                self.generated += 1;
                let mut child = key.clone();
                for (v, x) in updates {
                    let slot = self.slot[v].expect("effects only assign fluents");
                    child[slot] = x;
                }
                if self.seen.contains(&child) {
                    continue;
                }
                let child_state = self.state_of(&child);
                let alive = self.problem.maintain_holds(self.ctx, &child_state)?;
                let pruned = alive
                    && match &mut self.novelty {
                        Some(n) => !n.is_novel(&child),
                        None => false,
                    };
                let (id, _) = self.seen.insert_full(child);
                self.parent.push(node as u32);
                self.via.push(ai as u32);
                self.dead.push(!alive || pruned);
                if !alive {
                    continue;
                }
                if self.problem.goal_holds(self.ctx, &child_state)? {
                    return Ok(Outcome::Plan(self.plan_to(id)));
                }
                if !pruned {
                    if let Some(n) = &mut self.novelty {
                        n.admit(&self.seen[id]);
                    }
                }
            }
        }
        Ok(self.exhausted())
    }

    fn exhausted(&self) -> Outcome {
        if self.novelty.is_some() {
            Outcome::PrunedExhausted
        } else {
            Outcome::Unsolvable
        }
    }
}

/// Tables of fluent atoms and atom pairs seen so far.
struct Novelty {
    width: usize,
    atoms: FxHashMap<(usize, Value), u32>,
    pairs: FxHashSet<(u32, u32)>,
}

impl Novelty {
    fn new(width: usize) -> Self {
        Novelty {
            width,
            atoms: FxHashMap::default(),
            pairs: FxHashSet::default(),
        }
    }

    fn atom_ids(&self, key: &Key) -> Option<Vec<u32>> {
        key.iter()
            .enumerate()
            .map(|(k, v)| self.atoms.get(&(k, v.clone())).copied())
            .collect()
    }

    /// Whether the state contains a tuple of at most `width` atoms never seen before.
    fn is_novel(&self, key: &Key) -> bool {
        let Some(ids) = self.atom_ids(key) else {
            return true;
        };
        if self.width < 2 {
            return false;
        }
        ids.iter()
            .enumerate()
            .any(|(i, &a)| ids[i + 1..].iter().any(|&b| !self.pairs.contains(&(a, b))))
    }

    fn admit(&mut self, key: &Key) {
        let mut ids = Vec::with_capacity(key.len());
        for (k, v) in key.iter().enumerate() {
            let next = self.atoms.len() as u32;
            ids.push(*self.atoms.entry((k, v.clone())).or_insert(next));
        }
        if self.width >= 2 {
            for i in 0..ids.len() {
                for j in i + 1..ids.len() {
                    self.pairs.insert((ids[i], ids[j]));
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epistemic::Formula;
    use crate::perspective::PerspectiveSpec;
    use crate::planning::{Effect, Expr, Operator, Param, ParamDomain, ProblemParts};
    use crate::state::{Anchor, Domain, VarDecl, VarKind};

    /// Counter 0..=n with +1 and +2 steps; goal x = target.
    fn line(n: i64, target: i64, forbid: Option<i64>) -> Problem {
        let vars = vec![VarDecl {
            name: "x".into(),
            domain: Domain::Range(0, n),
            kind: VarKind::Fluent,
            anchor: Anchor::None,
        }];
        let op = Operator {
            name: "inc".into(),
            params: vec![Param {
                name: "d".into(),
                domain: ParamDomain::Range(1, 2),
            }],
            pre: None,
            effects: vec![Effect {
                when: None,
                var: 0,
                expr: Expr::Add(Box::new(Expr::Var(0)), Box::new(Expr::Param(0))),
            }],
        };
        Problem::new(ProblemParts {
            name: "line".into(),
            agents: vec!["a".into()],
            vars,
            perspective: PerspectiveSpec::full(),
            operators: vec![op],
            initial: vec![Value::Int(0)],
            goals: vec![Formula::eq(0, target)],
            maintain: forbid.map(|f| Formula::not(Formula::eq(0, f))).into_iter().collect(),
        })
        .unwrap()
    }

    #[test]
    fn bfs_finds_shortest() {
        let p = line(10, 7, None);
        let ctx = p.context();
        let (out, stats) = solve(&ctx, &p, &SearchConfig::bfs()).unwrap();
        let plan = out.plan().unwrap();
        assert_eq!(plan.len(), 4);
        assert_eq!(plan[0].to_string(), "inc(1)");
        assert!(p.validate_plan(&ctx, plan).unwrap().is_valid());
        assert!(stats.expanded <= stats.generated);
        assert!(stats.distinct_states <= stats.generated);
    }

    #[test]
    fn unreachable_goal_is_unsolvable() {
        let p = line(5, 9, None);
        let (out, stats) = solve(&p.context(), &p, &SearchConfig::bfs()).unwrap();
        assert_eq!(out, Outcome::Unsolvable);
        assert_eq!(stats.distinct_states, 6);
        assert_eq!(stats.plan_length, None);
    }

    #[test]
    fn maintain_states_are_dead_ends() {
        // 0 -> 2 -> 4 is blocked at 2 only if odd steps are used; with 1..2
        // steps every path to 4 avoiding 3 still exists.
        let p = line(6, 4, Some(3));
        let ctx = p.context();
        let (out, _) = solve(&ctx, &p, &SearchConfig::bfs()).unwrap();
        assert!(p.validate_plan(&ctx, out.plan().unwrap()).unwrap().is_valid());
        // Blocking both 1 and 2 cuts everything off.
        let mut q = line(6, 4, Some(1));
        let parts = ProblemParts {
            name: "blocked".into(),
            agents: q.agents().to_vec(),
            vars: q.vars().to_vec(),
            perspective: PerspectiveSpec::full(),
            operators: q.operators().to_vec(),
            initial: q.initial().values().to_vec(),
            goals: q.goals().to_vec(),
            maintain: vec![Formula::not(Formula::eq(0, 1)), Formula::not(Formula::eq(0, 2))],
        };
        q = Problem::new(parts).unwrap();
        let (out, stats) = solve(&q.context(), &q, &SearchConfig::bfs()).unwrap();
        assert_eq!(out, Outcome::Unsolvable);
        assert_eq!(stats.expanded, 1);
    }

    #[test]
    fn caps_and_config() {
        let p = line(1000, 999, None);
        let cfg = SearchConfig {
            max_nodes: Some(10),
            ..SearchConfig::bfs()
        };
        let (out, _) = solve(&p.context(), &p, &cfg).unwrap();
        assert_eq!(out, Outcome::ResourceLimit);
        assert!(solve(&p.context(), &p, &SearchConfig::novelty(3)).is_err());
    }

    #[test]
    fn novelty_plans_are_valid() {
        let p = line(20, 13, None);
        let ctx = p.context();
        for w in [1, 2] {
            let (out, _) = solve(&ctx, &p, &SearchConfig::novelty(w)).unwrap();
            let plan = out.plan().expect("single-variable line is width 1");
            assert!(p.validate_plan(&ctx, plan).unwrap().is_valid());
        }
        let q = line(5, 9, None);
        let (out, _) = solve(&q.context(), &q, &SearchConfig::novelty(1)).unwrap();
        assert_eq!(out, Outcome::PrunedExhausted);
    }
}
