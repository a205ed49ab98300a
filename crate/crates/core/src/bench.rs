//! Benchmark instances and the runner that turns them into stats tables.
//!
//! Every instance is produced as problem-file text and then parsed, so the
//! files written by [`write_sources`] are exactly what was solved.

use std::fmt::Write as _;
use std::io;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::dsl::{self, Diagnostic};
use crate::perspective::latch_name;
use crate::planning::Problem;
use crate::search::{solve, Outcome, SearchConfig, SearchError};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{family} has no instance {index}")]
    BadIndex { family: &'static str, index: usize },
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("generated problem does not parse:\n{}", dsl::render(.0))]
    Syntax(Vec<Diagnostic>),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Corridor,
    Grapevine,
    Bbl,
    Sn,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Corridor, Family::Grapevine, Family::Bbl, Family::Sn];

    pub fn name(self) -> &'static str {
        match self {
            Family::Corridor => "corridor",
            Family::Grapevine => "grapevine",
            Family::Bbl => "bbl",
            Family::Sn => "sn",
        }
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown family `{s}` (expected corridor, grapevine, bbl or sn)"))
    }
}

/// A named benchmark problem together with the text it was parsed from.
#[derive(Debug, Clone)]
pub struct Instance {
    pub id: String,
    pub source: String,
    pub problem: Problem,
}

impl Instance {
    fn from_source(id: String, source: String) -> Result<Self, BenchError> {
        let problem = dsl::parse_problem(&format!("{id}.epl"), &source).map_err(BenchError::Syntax)?;
        Ok(Instance { id, source, problem })
    }
}

// Big Brother Logic: a mobile camera a1, a fixed camera a2, three objects.

const BBL_GOALS: [&[&str]; 12] = [
    &["K[a1] (vo2 = 2)"],
    &["K[a1] (vo1 = 1)"],
    &["K[a2] (vo3 = 3)"],
    &["K[a1] K[a2] (vo1 = 1)"],
    &["DK[a1, a2] (vo1 = 1 and vo2 = 2 and vo3 = 3)"],
    &["EK[a1, a2] (vo2 = 2)"],
    &["EK[a1, a2] (vo1 = 1 and vo2 = 2)"],
    &["CK[a1, a2] (vo2 = 2)"],
    &["CK[a1, a2] (vo1 = 1 and vo2 = 2)"],
    &["K[a1] DK[a1, a2] (vo1 = 1 and vo2 = 2 and vo3 = 3)"],
    &["K[a1] (vo1 = 1)", "not K[a2] K[a1] (vo1 = 1)"],
    &["S[a1] vo1", "not K[a1] S[a2] S[a1] vo1"],
];

pub fn bbl_source(index: usize) -> Result<String, BenchError> {
    let goals = index
        .checked_sub(1)
        .and_then(|i| BBL_GOALS.get(i))
        .ok_or(BenchError::BadIndex { family: "bbl", index })?;
    let mut s = format!(
        r#"problem "bbl{index:02}"
agents a1 a2
perspective euclidean2d {{
  aperture = 90
  pose = (a1, a1x, a1y, a1dir)
  pose = (a2, a2x, a2y, a2dir)
}}
var a1x: -20..20 @pos(a1x, a1y) = 5
var a1y: -20..20 @pos(a1x, a1y) = 5
var a1dir: -179..180 @pos(a1x, a1y) = 45
const a2x: -20..20 @pos(a2x, a2y) = 15
const a2y: -20..20 @pos(a2x, a2y) = 15
const a2dir: -179..180 @pos(a2x, a2y) = -135
const vo1: 0..3 @pos(1, 1) = 1
const vo2: 0..3 @pos(10, 10) = 2
const vo3: 0..3 @pos(19, 19) = 3
operator move(dx: -2..2, dy: -2..2) {{
  eff:
    a1x := a1x + dx
    a1y := a1y + dy
}}
operator turn(d: -45..45) {{
  eff: a1dir := a1dir + d
}}
"#
    );
    for g in goals.iter() {
        let _ = writeln!(s, "goal: {g}");
    }
    Ok(s)
}

pub fn build_bbl(index: usize) -> Result<Problem, BenchError> {
    Ok(Instance::from_source(format!("bbl{index:02}"), bbl_source(index)?)?.problem)
}

// Social-media network: five agents, three message parts posted on pages.

const SN_AGENTS: [&str; 5] = ["a", "b", "c", "d", "e"];
const SN_EDGES: [(&str, &str); 6] = [("a", "b"), ("a", "c"), ("a", "d"), ("b", "e"), ("c", "d"), ("d", "e")];

fn sn_knows_all(agent: &str) -> String {
    format!("K[{agent}] (post_p1 != none and post_p2 != none and post_p3 != none)")
}

fn sn_goals(index: usize) -> Option<Vec<String>> {
    let p1 = "(post_p1 != none)";
    let all = "(post_p1 != none and post_p2 != none and post_p3 != none)";
    let only_a = |others: &[&str]| {
        let mut g = vec![sn_knows_all("a")];
        g.extend(others.iter().map(|o| format!("not {}", sn_knows_all(o))));
        g
    };
    let surprise = || {
        vec![
            format!("not {}", sn_knows_all("a")),
            ["b", "c", "d", "e"].map(sn_knows_all).join(" and "),
        ]
    };
    Some(match index {
        1 => vec![format!("K[a] {p1}")],
        2 => vec![format!("K[a] K[b] {p1}")],
        3 => vec![format!("EK[a, b] {p1}")],
        4 => vec![format!("EK[a, b] {all}")],
        5 => vec![format!("DK[a, b] {all}")],
        6 => vec![format!("CK[a, b] {p1}")],
        7 => vec![format!("CK[a, e] {p1}")],
        8 => vec![sn_knows_all("a")],
        9 => only_a(&["b"]),
        10 => only_a(&["b", "c"]),
        11 | 12 => only_a(&["b", "c", "d", "e"]),
        13 | 14 => surprise(),
        _ => return None,
    })
}

pub fn sn_source(index: usize) -> Result<String, BenchError> {
    let goals = sn_goals(index).ok_or(BenchError::BadIndex { family: "sn", index })?;
    let mut edges = SN_EDGES.to_vec();
    match index {
        12 => edges.push(("b", "c")),
        14 => edges.push(("c", "e")),
        _ => {}
    }
    let mut s = format!("problem \"sn{index:02}\"\nagents {}\nperspective social {{\n", SN_AGENTS.join(" "));
    for (x, y) in &edges {
        let _ = writeln!(s, "  friend = ({x}, {y}, friended_{x}_{y})");
    }
    s.push_str("}\n");
    for (x, y) in &edges {
        let _ = writeln!(s, "const friended_{x}_{y}: 0..1 = 1");
    }
    let pages = SN_AGENTS.join(", ");
    for k in 1..=3 {
        let _ = writeln!(s, "var post_p{k}: {{none, {pages}}} @page = none");
    }
    let _ = writeln!(s, "operator post(page: {{{pages}}}, msg: {{p1, p2, p3}}) {{\n  eff:");
    for k in 1..=3 {
        let _ = writeln!(s, "    when msg = p{k} then post_p{k} := page");
    }
    s.push_str("}\n");
    for g in goals {
        let _ = writeln!(s, "goal: {g}");
    }
    Ok(s)
}

pub fn build_sn(index: usize) -> Result<Problem, BenchError> {
    Ok(Instance::from_source(format!("sn{index:02}"), sn_source(index)?)?.problem)
}

/// Nested knowledge `K[x] K[y] K[x] ... (fact)` with `depth` operators.
fn chain(first: &str, second: &str, depth: usize, fact: &str) -> String {
    let mut s = String::new();
    for level in 0..depth {
        let _ = write!(s, "K[{}] ", if level % 2 == 0 { first } else { second });
    }
    let _ = write!(s, "({fact})");
    s
}

/// Corridor of `n_rooms` rooms. Agent `a0` is the only mobile agent: it can
/// sense the secret `q` in room 1 and shout it to everyone in the same or an
/// adjacent room.
///
/// Goal schedule: `ceil(g/2)` positive goals for agents `a1..` waiting in the
/// last room, each a chain alternating the agent with `a0`; `floor(g/2)`
/// negated chains for the following agents, who wait in room 2. Remaining
/// agents stay in room 1.
pub fn corridor_source(n_agents: usize, n_rooms: usize, depth: usize, n_goals: usize) -> Result<String, BenchError> {
    let bad = |m: &str| Err(BenchError::InvalidParameters(m.to_string()));
    if n_agents < 2 {
        return bad("corridor needs at least two agents");
    }
    if depth < 1 {
        return bad("goal depth must be at least 1");
    }
    if n_goals < 1 || n_goals > n_agents - 1 {
        return bad("corridor needs between 1 and n_agents - 1 goals");
    }
    let positive = n_goals.div_ceil(2);
    let negative = n_goals / 2;
    if n_rooms < 2 || (negative > 0 && n_rooms < 4) {
        return bad("corridor needs two rooms, or four when some goals are negative");
    }
    let agents: Vec<String> = (0..n_agents).map(|i| format!("a{i}")).collect();
    let room_of = |i: usize| {
        if i == 0 {
            1
        } else if i <= positive {
            n_rooms
        } else if i <= positive + negative {
            2
        } else {
            1
        }
    };
    let mut s = format!(
        "problem \"corridor_{n_agents}_{n_rooms}_{depth}_{n_goals}\"\nagents {}\nperspective latched-rooms {{\n  radius = 1\n",
        agents.join(" ")
    );
    for a in &agents {
        let _ = writeln!(s, "  location = ({a}, loc_{a})");
    }
    s.push_str("}\n");
    let _ = writeln!(s, "var loc_a0: 1..{n_rooms} @room(loc_a0) = 1");
    for (i, a) in agents.iter().enumerate().skip(1) {
        let _ = writeln!(s, "const loc_{a}: 1..{n_rooms} @room(loc_{a}) = {}", room_of(i));
    }
    let _ = writeln!(s, "const qroom: 1..{n_rooms} @room(qroom) = 1");
    let _ = writeln!(s, "const q: 0..1 @room(qroom) = 1");
    for a in &agents {
        let _ = writeln!(s, "var {}: 0..1 = 0", latch_name(a, "q"));
    }
    s.push_str("operator move(d: {-1, 1}) {\n  eff: loc_a0 := loc_a0 + d\n}\n");
    let own = latch_name("a0", "q");
    let _ = writeln!(s, "operator sense() {{\n  pre: loc_a0 = qroom\n  eff: {own} := 1\n}}");
    let _ = writeln!(s, "operator shout() {{\n  pre: {own} = 1\n  eff:");
    for a in agents.iter().skip(1) {
        let _ = writeln!(s, "    when S[{a}] loc_a0 then {} := 1", latch_name(a, "q"));
    }
    s.push_str("}\n");
    for a in &agents[1..=positive] {
        let _ = writeln!(s, "goal: {}", chain(a, "a0", depth, "q = 1"));
    }
    for a in &agents[positive + 1..=positive + negative] {
        let _ = writeln!(s, "goal: not {}", chain(a, "a0", depth, "q = 1"));
    }
    Ok(s)
}

pub fn gen_corridor(n_agents: usize, n_rooms: usize, depth: usize, n_goals: usize) -> Result<Problem, BenchError> {
    let src = corridor_source(n_agents, n_rooms, depth, n_goals)?;
    Ok(Instance::from_source(format!("corridor_{n_agents}_{n_rooms}_{depth}_{n_goals}"), src)?.problem)
}

/// Grapevine: two rooms, every agent starts in room 1 holding its own secret.
/// Agents move freely and share any secret they have heard with everyone in
/// their room.
///
/// Goals come in pairs about one owner's secret: the even goal requires a
/// listener to know it through a chain alternating with the owner, the odd
/// goal forbids the same chain for another agent. With `h = (n - 1) / 2`,
/// owner `a0` covers the first `h` pairs (listeners `a1..ah`, outsiders
/// `a(h+1)..a(2h)`), then `a1` takes over with the agents shifted by one, and
/// so on. For four agents this is the cycle "`a(m+1)` knows `m`'s secret,
/// `a(m+2)` does not".
pub fn grapevine_source(n_agents: usize, depth: usize, n_goals: usize) -> Result<String, BenchError> {
    let bad = |m: &str| Err(BenchError::InvalidParameters(m.to_string()));
    if n_agents < 3 {
        return bad("grapevine needs at least three agents");
    }
    if depth < 1 {
        return bad("goal depth must be at least 1");
    }
    if n_goals < 1 || n_goals > 2 * n_agents {
        return bad("grapevine needs between 1 and 2 * n_agents goals");
    }
    let agents: Vec<String> = (0..n_agents).map(|i| format!("a{i}")).collect();
    let mut s = format!(
        "problem \"grapevine_{n_agents}_{depth}_{n_goals}\"\nagents {}\nperspective latched-rooms {{\n  radius = 0\n",
        agents.join(" ")
    );
    for a in &agents {
        let _ = writeln!(s, "  location = ({a}, loc_{a})");
    }
    s.push_str("}\n");
    for a in &agents {
        let _ = writeln!(s, "var loc_{a}: 1..2 @room(loc_{a}) = 1");
    }
    for (i, a) in agents.iter().enumerate() {
        let _ = writeln!(s, "const s{i}: 0..1 @room(loc_{a}) = 1");
    }
    for (j, a) in agents.iter().enumerate() {
        for i in 0..n_agents {
            let _ = writeln!(s, "var {}: 0..1 = {}", latch_name(a, &format!("s{i}")), u8::from(i == j));
        }
    }
    for a in &agents {
        let _ = writeln!(s, "operator move_{a}(to: 1..2) {{\n  eff: loc_{a} := to\n}}");
    }
    for a in &agents {
        for k in 0..n_agents {
            let secret = format!("s{k}");
            let _ = writeln!(s, "operator share_{a}_{secret}() {{\n  pre: {} = 1\n  eff:", latch_name(a, &secret));
            for b in agents.iter().filter(|b| *b != a) {
                let _ = writeln!(s, "    when S[{b}] loc_{a} then {} := 1", latch_name(b, &secret));
            }
            s.push_str("}\n");
        }
    }
    let per_owner = (n_agents - 1) / 2;
    for k in 0..n_goals {
        let (pair, slot) = (k / 2 / per_owner, k / 2 % per_owner);
        let m = pair % n_agents;
        let owner = &agents[m];
        let fact = format!("s{m} = 1");
        if k % 2 == 0 {
            let who = &agents[(m + 1 + slot) % n_agents];
            let _ = writeln!(s, "goal: {}", chain(who, owner, depth, &fact));
        } else {
            let who = &agents[(m + 1 + per_owner + slot) % n_agents];
            let _ = writeln!(s, "goal: not {}", chain(who, owner, depth, &fact));
        }
    }
    Ok(s)
}

pub fn gen_grapevine(n_agents: usize, depth: usize, n_goals: usize) -> Result<Problem, BenchError> {
    let src = grapevine_source(n_agents, depth, n_goals)?;
    Ok(Instance::from_source(format!("grapevine_{n_agents}_{depth}_{n_goals}"), src)?.problem)
}

/// Corridor grid as `(agents, depth, goals)`; all use four rooms.
pub const CORRIDOR_GRID: [(usize, usize, usize); 8] =
    [(3, 1, 2), (7, 1, 2), (3, 3, 2), (6, 3, 2), (7, 3, 2), (8, 3, 2), (3, 4, 2), (3, 5, 2)];
pub const CORRIDOR_ROOMS: usize = 4;

/// Grapevine grid as `(agents, depth, goals)`.
pub const GRAPEVINE_GRID: [(usize, usize, usize); 14] = [
    (4, 1, 2),
    (4, 2, 2),
    (4, 1, 4),
    (4, 2, 4),
    (4, 1, 8),
    (4, 2, 8),
    (4, 3, 8),
    (8, 1, 2),
    (8, 2, 2),
    (8, 1, 4),
    (8, 2, 4),
    (8, 1, 8),
    (8, 2, 8),
    (8, 3, 8),
];

/// All instances of a family, in table order.
pub fn instances(family: Family) -> Result<Vec<Instance>, BenchError> {
    let sources: Vec<(String, String)> = match family {
        Family::Bbl => (1..=12)
            .map(|i| Ok((format!("bbl{i:02}"), bbl_source(i)?)))
            .collect::<Result<_, BenchError>>()?,
        Family::Sn => (1..=14)
            .map(|i| Ok((format!("sn{i:02}"), sn_source(i)?)))
            .collect::<Result<_, BenchError>>()?,
        Family::Corridor => CORRIDOR_GRID
            .iter()
            .map(|&(a, d, g)| {
                Ok((
                    format!("corridor_{a}_{CORRIDOR_ROOMS}_{d}_{g}"),
                    corridor_source(a, CORRIDOR_ROOMS, d, g)?,
                ))
            })
            .collect::<Result<_, BenchError>>()?,
        Family::Grapevine => GRAPEVINE_GRID
            .iter()
            .map(|&(a, d, g)| Ok((format!("grapevine_{a}_{d}_{g}"), grapevine_source(a, d, g)?)))
            .collect::<Result<_, BenchError>>()?,
    };
    sources.into_iter().map(|(id, src)| Instance::from_source(id, src)).collect()
}

/// One line of a results table.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Row {
    pub instance: String,
    pub agents: usize,
    pub depth: usize,
    pub goals: usize,
    pub outcome: &'static str,
    pub plan_length: Option<usize>,
    pub generated: u64,
    pub expanded: u64,
    pub distinct: u64,
    pub calls: u64,
    pub seconds: f64,
}

impl Row {
    /// The `|p|` cell: the plan length, or the outcome when there is no plan.
    pub fn plan_cell(&self) -> String {
        match self.plan_length {
            Some(n) => n.to_string(),
            None => self.outcome.to_string(),
        }
    }
}

pub const CSV_HEADER: [&str; 10] = ["instance", "|a|", "d", "|g|", "|p|", "gen", "exp", "distinct", "calls", "seconds"];

/// Solves one instance. Returned plans are re-checked by the validator.
pub fn run_instance(inst: &Instance, cfg: &SearchConfig) -> Result<(Row, Outcome), BenchError> {
    let p = &inst.problem;
    let ctx = p.context();
    let (outcome, stats) = solve(&ctx, p, cfg)?;
    if let Some(plan) = outcome.plan() {
        let verdict = p.validate_plan(&p.context(), plan).map_err(SearchError::from)?;
        debug_assert!(verdict.is_valid(), "{}: search returned an invalid plan", inst.id);
    }
    let row = Row {
        instance: inst.id.clone(),
        agents: p.agents().len(),
        depth: p.depth(),
        goals: p.goals().len(),
        outcome: outcome.label(),
        plan_length: stats.plan_length,
        generated: stats.generated,
        expanded: stats.expanded,
        distinct: stats.distinct_states,
        calls: stats.external_calls,
        seconds: stats.elapsed,
    };
    Ok((row, outcome))
}

pub fn run_instances(insts: &[Instance], cfg: &SearchConfig) -> Result<Vec<Row>, BenchError> {
    insts.iter().map(|i| run_instance(i, cfg).map(|(r, _)| r)).collect()
}

pub fn run_suite(family: Family, cfg: &SearchConfig) -> Result<Vec<Row>, BenchError> {
    run_instances(&instances(family)?, cfg)
}

pub fn write_csv<W: io::Write>(rows: &[Row], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.instance.clone(),
            r.agents.to_string(),
            r.depth.to_string(),
            r.goals.to_string(),
            r.plan_cell(),
            r.generated.to_string(),
            r.expanded.to_string(),
            r.distinct.to_string(),
            r.calls.to_string(),
            format!("{:.3}", r.seconds),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `<id>.epl` for every instance into `dir`, creating it if needed.
pub fn write_sources(insts: &[Instance], dir: &Path) -> Result<(), BenchError> {
    std::fs::create_dir_all(dir)?;
    for i in insts {
        std::fs::write(dir.join(format!("{}.epl", i.id)), &i.source)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::SearchConfig;

    fn plan_len(p: &Problem) -> Option<usize> {
        let (out, _) = solve(&p.context(), p, &SearchConfig::bfs()).unwrap();
        out.plan().map(<[_]>::len)
    }

    #[test]
    fn families_parse_and_round_trip() {
        for f in Family::ALL {
            for inst in instances(f).unwrap() {
                let printed = dsl::print_problem(&inst.problem);
                let back = dsl::parse_problem("printed", &printed).unwrap_or_else(|e| panic!("{}: {e:?}", inst.id));
                assert_eq!(back, inst.problem, "{}", inst.id);
            }
        }
    }

    #[test]
    fn bad_indices_and_parameters_are_rejected() {
        assert!(matches!(build_bbl(0), Err(BenchError::BadIndex { .. })));
        assert!(matches!(build_bbl(13), Err(BenchError::BadIndex { .. })));
        assert!(matches!(build_sn(15), Err(BenchError::BadIndex { .. })));
        assert!(matches!(gen_corridor(1, 4, 1, 1), Err(BenchError::InvalidParameters(_))));
        assert!(matches!(gen_corridor(3, 3, 1, 2), Err(BenchError::InvalidParameters(_))));
        assert!(matches!(gen_grapevine(4, 0, 2), Err(BenchError::InvalidParameters(_))));
    }

    #[test]
    fn small_instances_solve() {
        assert_eq!(plan_len(&build_bbl(1).unwrap()), Some(0));
        assert_eq!(plan_len(&build_sn(1).unwrap()), Some(1));
        assert!(plan_len(&gen_corridor(3, 4, 1, 2).unwrap()).is_some());
        assert!(plan_len(&gen_grapevine(4, 2, 2).unwrap()).is_some());
    }

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(corridor_source(5, 4, 3, 2).unwrap(), corridor_source(5, 4, 3, 2).unwrap());
        assert_eq!(grapevine_source(4, 2, 8).unwrap(), grapevine_source(4, 2, 8).unwrap());
    }

    #[test]
    fn csv_has_table_columns() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "instance,|a|,d,|g|,|p|,gen,exp,distinct,calls,seconds\n");
        let rows = run_instances(&instances(Family::Sn).unwrap()[..1], &SearchConfig::bfs()).unwrap();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap().starts_with("sn01,5,1,1,1,"), "{text}");
    }
}
