use super::{bad, tuple, ParamValue, Perspective, PerspectiveError, Vocab};
use crate::state::{AgentId, Anchor, LocalState, Value, VarId};

const KIND: &str = "social";

#[derive(Debug, Clone)]
enum Rule {
    /// Friendship link between two agents; only its endpoints observe it.
    Link(AgentId, AgentId),
    /// Value names the page the entry is posted on.
    Page,
    Everyone,
}

/// Page-and-friendship visibility. An agent reads its own page and the
/// pages of its friends; a friendship link is known to its two endpoints.
#[derive(Debug, Clone)]
pub struct Social {
    agents: Vec<String>,
    /// `links[i][j]` is the variable holding the friendship flag of i and j.
    links: Vec<Vec<Option<VarId>>>,
    rules: Vec<Rule>,
}

impl Social {
    pub(crate) fn build(params: &[(String, ParamValue)], cx: &Vocab) -> Result<Self, PerspectiveError> {
        let n = cx.agents.len();
        let mut links = vec![vec![None; n]; n];
        let mut rules: Vec<Rule> = cx
            .vars
            .iter()
            .map(|v| match v.anchor {
                Anchor::Page => Ok(Rule::Page),
                Anchor::None => Ok(Rule::Everyone),
                _ => Err(PerspectiveError::BadAnchor {
                    var: v.name.clone(),
                    reason: "only @page anchors are meaningful for social".into(),
                }),
            })
            .collect::<Result<_, _>>()?;
        for (name, value) in params {
            if name != "friend" {
                return Err(bad(KIND, name, "unknown parameter"));
            }
            let t = tuple(KIND, name, value, 3)?;
            let a = cx.agent(KIND, &t[0])?;
            let b = cx.agent(KIND, &t[1])?;
            let v = cx.var(KIND, &t[2])?;
            if a == b {
                return Err(bad(KIND, name, "an agent cannot befriend itself"));
            }
            if !matches!(rules[v], Rule::Everyone) {
                return Err(bad(KIND, name, "link variable already used"));
            }
            links[a][b] = Some(v);
            links[b][a] = Some(v);
            rules[v] = Rule::Link(a, b);
        }
        Ok(Social {
            agents: cx.agents.to_vec(),
            links,
            rules,
        })
    }

    fn page_owner(&self, v: &Value) -> Option<AgentId> {
        match v {
            Value::Sym(s) => self.agents.iter().position(|a| a == s.as_str()),
            _ => None,
        }
    }
}

impl Perspective for Social {
    fn num_agents(&self) -> usize {
        self.agents.len()
    }

    fn sees(&self, agent: AgentId, var: VarId, l: &LocalState) -> Option<bool> {
        match self.rules[var] {
            Rule::Everyone => Some(true),
            Rule::Link(a, b) => Some(agent == a || agent == b),
            Rule::Page => {
                let Some(page) = self.page_owner(l.get(var)?) else {
                    return Some(false);
                };
                if page == agent {
                    return Some(true);
                }
                match self.links[agent][page] {
                    None => Some(false),
                    Some(link) => Some(l.get(link)?.is_truthy()),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perspective::{PerspectiveKind, PerspectiveSpec};
    use crate::state::{Domain, State, VarDecl, VarKind, VarSet};

    fn setup() -> (Vec<String>, Vec<VarDecl>, PerspectiveSpec) {
        let agents: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let page_dom = Domain::Set(["none", "a", "b", "c"].iter().map(|s| Value::sym(s)).collect());
        let vars = vec![
            VarDecl {
                name: "friended_a_b".into(),
                domain: Domain::Range(0, 1),
                kind: VarKind::Constant,
                anchor: Anchor::None,
            },
            VarDecl {
                name: "post_p1".into(),
                domain: page_dom,
                kind: VarKind::Fluent,
                anchor: Anchor::Page,
            },
        ];
        let id = |s: &str| ParamValue::Ident(s.into());
        let spec = PerspectiveSpec {
            kind: PerspectiveKind::Social,
            params: vec![("friend".into(), ParamValue::Tuple(vec![id("a"), id("b"), id("friended_a_b")]))],
        };
        (agents, vars, spec)
    }

    #[test]
    fn pages_and_links() {
        let (agents, vars, spec) = setup();
        let p = spec.build(&agents, &vars).unwrap();
        let s = State::new(vec![Value::Int(1), Value::sym("b")]).to_local();
        assert_eq!(p.apply(0, &s).len(), 2);
        assert_eq!(p.apply(1, &s).len(), 2);
        assert!(p.apply(2, &s).is_empty());
        let unposted = State::new(vec![Value::Int(1), Value::sym("none")]).to_local();
        assert_eq!(p.apply(0, &unposted).domain().iter().collect::<Vec<_>>(), vec![0]);
        // Without the link value, a cannot tell whether it reads b's page.
        let no_link = s.restrict(&VarSet::from_iter(2, [1]));
        assert_eq!(p.sees(0, 1, &no_link), None);
        assert_eq!(p.sees(1, 1, &no_link), Some(true));
    }
}
