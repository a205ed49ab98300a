use super::{bad, check_anchor_closure, term_value, tuple, ParamValue, Perspective, PerspectiveError, Vocab};
use crate::state::{AgentId, Anchor, AnchorTerm, LocalState, VarDecl, VarId};

const KIND: &str = "latched-rooms";

/// Prefix of latch fluents: `sees__<agent>__<var>` records that the agent
/// has observed the variable at some point.
pub const LATCH_PREFIX: &str = "sees__";

/// Name of the latch fluent recording that `agent` observed `var`.
pub fn latch_name(agent: &str, var: &str) -> String {
    format!("{LATCH_PREFIX}{agent}__{var}")
}

#[derive(Debug, Clone)]
enum Rule {
    /// Latch fluents are observed by everyone.
    Latch,
    /// Observed by agent i iff latch[i] is set; `None` entries mean the
    /// agent has no latch and can never observe the variable.
    Latched(Vec<Option<VarId>>),
    /// Observed when the room lies within the radius of the observer's room.
    Room(AnchorTerm),
    Everyone,
}

/// Room-based visibility with latched knowledge.
#[derive(Debug, Clone)]
pub struct LatchedRooms {
    radius: i64,
    locations: Vec<VarId>,
    rules: Vec<Rule>,
}

impl LatchedRooms {
    pub(crate) fn build(params: &[(String, ParamValue)], cx: &Vocab) -> Result<Self, PerspectiveError> {
        let mut radius = None;
        let mut locations: Vec<Option<VarId>> = vec![None; cx.agents.len()];
        for (name, value) in params {
            match name.as_str() {
                "radius" => match value {
                    ParamValue::Int(r) if *r >= 0 => radius = Some(*r),
                    _ => return Err(bad(KIND, name, "radius must be a non-negative integer")),
                },
                "location" => {
                    let t = tuple(KIND, name, value, 2)?;
                    let agent = cx.agent(KIND, &t[0])?;
                    locations[agent] = Some(cx.var(KIND, &t[1])?);
                }
                _ => return Err(bad(KIND, name, "unknown parameter")),
            }
        }
        let radius = radius.ok_or(PerspectiveError::MissingParam {
            kind: KIND,
            param: "radius",
        })?;
        let locations = locations
            .into_iter()
            .enumerate()
            .map(|(i, l)| {
                l.ok_or_else(|| bad(KIND, "location", &format!("no location for agent `{}`", cx.agents[i])))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let rules = rules_for(cx)?;
        Ok(LatchedRooms {
            radius,
            locations,
            rules,
        })
    }

    pub fn radius(&self) -> i64 {
        self.radius
    }
}

fn rules_for(cx: &Vocab) -> Result<Vec<Rule>, PerspectiveError> {
    let vars: &[VarDecl] = cx.vars;
    for v in vars {
        if matches!(v.anchor, Anchor::Pos(..) | Anchor::Page) {
            return Err(PerspectiveError::BadAnchor {
                var: v.name.clone(),
                reason: "only @room anchors are meaningful for latched-rooms".into(),
            });
        }
    }
    check_anchor_closure(vars)?;
    let mut rules: Vec<Rule> = vars
        .iter()
        .map(|v| match &v.anchor {
            Anchor::Room(t) => Rule::Room(t.clone()),
            _ => Rule::Everyone,
        })
        .collect();
    for (id, v) in vars.iter().enumerate() {
        let Some(rest) = v.name.strip_prefix(LATCH_PREFIX) else {
            continue;
        };
        let Some((agent, target)) = rest.split_once("__") else {
            continue;
        };
        let (Some(agent), Some(target)) = (cx.agent_named(agent), cx.var_named(target)) else {
            continue;
        };
        rules[id] = Rule::Latch;
        match &mut rules[target] {
            Rule::Latched(slots) => slots[agent] = Some(id),
            other => {
                let mut slots = vec![None; cx.agents.len()];
                slots[agent] = Some(id);
                *other = Rule::Latched(slots);
            }
        }
    }
    Ok(rules)
}

impl Perspective for LatchedRooms {
    fn num_agents(&self) -> usize {
        self.locations.len()
    }

    fn sees(&self, agent: AgentId, var: VarId, l: &LocalState) -> Option<bool> {
        let loc_var = self.locations[agent];
        let here = l.get(loc_var)?.as_int()?;
        if var == loc_var {
            return Some(true);
        }
        match &self.rules[var] {
            Rule::Latch | Rule::Everyone => Some(true),
            Rule::Latched(slots) => match slots[agent] {
                None => Some(false),
                Some(latch) => Some(l.get(latch)?.is_truthy()),
            },
            Rule::Room(t) => {
                let room = term_value(t, l)?.as_int()?;
                Some((room - here).abs() <= self.radius)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perspective::PerspectiveSpec;
    use crate::perspective::PerspectiveKind;
    use crate::state::{Domain, State, Value, VarKind, VarSet};

    fn decl(name: &str, anchor: Anchor) -> VarDecl {
        VarDecl {
            name: name.into(),
            domain: Domain::Range(0, 9),
            kind: VarKind::Fluent,
            anchor,
        }
    }

    fn setup() -> (Vec<String>, Vec<VarDecl>) {
        let agents = vec!["a".to_string(), "b".to_string()];
        let vars = vec![
            decl("loc_a", Anchor::Room(AnchorTerm::Var(0))),
            decl("loc_b", Anchor::Room(AnchorTerm::Var(1))),
            decl("q", Anchor::None),
            decl("sees__a__q", Anchor::None),
            decl("box", Anchor::Room(AnchorTerm::Lit(Value::Int(5)))),
        ];
        (agents, vars)
    }

    fn spec(radius: i64) -> PerspectiveSpec {
        PerspectiveSpec {
            kind: PerspectiveKind::LatchedRooms,
            params: vec![
                ("radius".into(), ParamValue::Int(radius)),
                (
                    "location".into(),
                    ParamValue::Tuple(vec![ParamValue::Ident("a".into()), ParamValue::Ident("loc_a".into())]),
                ),
                (
                    "location".into(),
                    ParamValue::Tuple(vec![ParamValue::Ident("b".into()), ParamValue::Ident("loc_b".into())]),
                ),
            ],
        }
    }

    #[test]
    fn rooms_latches_and_radius() {
        let (agents, vars) = setup();
        let p = spec(1).build(&agents, &vars).unwrap();
        let s = State::new(vec![1, 3, 7, 1, 2].into_iter().map(Value::Int).collect()).to_local();
        let fa = p.apply(0, &s);
        assert_eq!(fa.domain().iter().collect::<Vec<_>>(), vec![0, 2, 3]);
        // b has no latch for q and is two rooms from a.
        let fb = p.apply(1, &s);
        assert_eq!(fb.domain().iter().collect::<Vec<_>>(), vec![1, 3]);
        // Without its own location the agent sees nothing.
        let blind = s.restrict(&VarSet::from_iter(5, [1, 2, 3]));
        assert!(p.apply(0, &blind).is_empty());
    }

    #[test]
    fn unset_latch_hides_value() {
        let (agents, vars) = setup();
        let p = spec(0).build(&agents, &vars).unwrap();
        let s = State::new(vec![5, 5, 7, 0, 2].into_iter().map(Value::Int).collect()).to_local();
        let fa = p.apply(0, &s);
        assert_eq!(fa.domain().iter().collect::<Vec<_>>(), vec![0, 1, 3, 4]);
    }

    #[test]
    fn latch_names() {
        assert_eq!(latch_name("a1", "q"), "sees__a1__q");
    }
}
