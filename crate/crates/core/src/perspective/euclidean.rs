use super::{bad, check_anchor_closure, term_value, tuple, ParamValue, Perspective, PerspectiveError, Vocab};
use crate::state::{AgentId, Anchor, LocalState, VarDecl, VarId};

const KIND: &str = "euclidean2d";
const EPS_DEG: f64 = 1e-9;

/// Position and facing of one agent, as variable ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pose {
    pub x: VarId,
    pub y: VarId,
    pub dir: VarId,
}

/// Planar cone of vision with unlimited range.
#[derive(Debug, Clone)]
pub struct Euclidean2d {
    aperture: f64,
    poses: Vec<Pose>,
    anchors: Vec<Anchor>,
}

impl Euclidean2d {
    pub(crate) fn build(params: &[(String, ParamValue)], cx: &Vocab) -> Result<Self, PerspectiveError> {
        let mut aperture = None;
        let mut poses: Vec<Option<Pose>> = vec![None; cx.agents.len()];
        for (name, value) in params {
            match name.as_str() {
                "aperture" => match value {
                    ParamValue::Int(a) if *a > 0 && *a <= 360 => aperture = Some(*a as f64),
                    _ => return Err(bad(KIND, name, "aperture must be an integer in (0, 360]")),
                },
                "pose" => {
                    let t = tuple(KIND, name, value, 4)?;
                    let agent = cx.agent(KIND, &t[0])?;
                    poses[agent] = Some(Pose {
                        x: cx.var(KIND, &t[1])?,
                        y: cx.var(KIND, &t[2])?,
                        dir: cx.var(KIND, &t[3])?,
                    });
                }
                _ => return Err(bad(KIND, name, "unknown parameter")),
            }
        }
        let aperture = aperture.ok_or(PerspectiveError::MissingParam {
            kind: KIND,
            param: "aperture",
        })?;
        let poses = poses
            .into_iter()
            .enumerate()
            .map(|(i, p)| p.ok_or_else(|| bad(KIND, "pose", &format!("no pose for agent `{}`", cx.agents[i]))))
            .collect::<Result<Vec<_>, _>>()?;
        check_anchors(cx.vars)?;
        Ok(Euclidean2d {
            aperture,
            poses,
            anchors: cx.vars.iter().map(|v| v.anchor.clone()).collect(),
        })
    }

    pub fn new(aperture: f64, poses: Vec<Pose>, vars: &[VarDecl]) -> Result<Self, PerspectiveError> {
        if !(aperture > 0.0 && aperture <= 360.0) {
            return Err(bad(KIND, "aperture", "aperture must lie in (0, 360]"));
        }
        check_anchors(vars)?;
        Ok(Euclidean2d {
            aperture,
            poses,
            anchors: vars.iter().map(|v| v.anchor.clone()).collect(),
        })
    }

    pub fn aperture(&self) -> f64 {
        self.aperture
    }

    pub fn pose(&self, agent: AgentId) -> Pose {
        self.poses[agent]
    }
}

fn check_anchors(vars: &[VarDecl]) -> Result<(), PerspectiveError> {
    for v in vars {
        if matches!(v.anchor, Anchor::Room(_) | Anchor::Page) {
            return Err(PerspectiveError::BadAnchor {
                var: v.name.clone(),
                reason: "only @pos anchors are meaningful for euclidean2d".into(),
            });
        }
    }
    check_anchor_closure(vars)
}

/// Signed angle in (-180, 180] between a bearing and a facing direction.
pub fn relative_bearing(bearing: f64, facing: f64) -> f64 {
    let mut d = (bearing - facing) % 360.0;
    if d <= -180.0 {
        d += 360.0;
    } else if d > 180.0 {
        d -= 360.0;
    }
    d
}

/// Whether a point lies inside the cone with apex `(ox, oy)`, facing
/// `facing` degrees, opening `aperture` degrees. The apex itself counts as
/// inside.
pub fn in_cone(ox: i64, oy: i64, facing: i64, aperture: f64, tx: i64, ty: i64) -> bool {
    let (dx, dy) = ((tx - ox) as f64, (ty - oy) as f64);
    if dx == 0.0 && dy == 0.0 {
        return true;
    }
    let bearing = dy.atan2(dx).to_degrees();
    relative_bearing(bearing, facing as f64).abs() <= aperture / 2.0 + EPS_DEG
}

impl Perspective for Euclidean2d {
    fn num_agents(&self) -> usize {
        self.poses.len()
    }

    fn sees(&self, agent: AgentId, var: VarId, l: &LocalState) -> Option<bool> {
        let pose = self.poses[agent];
        let ox = l.get(pose.x)?.as_int()?;
        let oy = l.get(pose.y)?.as_int()?;
        let dir = l.get(pose.dir)?.as_int()?;
        if var == pose.x || var == pose.y || var == pose.dir {
            return Some(true);
        }
        match &self.anchors[var] {
            Anchor::Pos(tx, ty) => {
                let tx = term_value(tx, l)?.as_int()?;
                let ty = term_value(ty, l)?.as_int()?;
                Some(in_cone(ox, oy, dir, self.aperture, tx, ty))
            }
            _ => Some(true),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bearing_normalisation() {
        assert_eq!(relative_bearing(45.0, 45.0), 0.0);
        assert_eq!(relative_bearing(-135.0, 45.0), 180.0);
        assert_eq!(relative_bearing(180.0, -180.0), 0.0);
        assert_eq!(relative_bearing(-170.0, 170.0), 20.0);
        assert_eq!(relative_bearing(10.0, -170.0), 180.0);
    }

    #[test]
    fn cone_membership() {
        // Facing north-east from (5,5).
        assert!(in_cone(5, 5, 45, 90.0, 19, 19));
        assert!(in_cone(5, 5, 45, 90.0, 10, 10));
        assert!(!in_cone(5, 5, 45, 90.0, 1, 1));
        // Boundary rays are inside.
        assert!(in_cone(0, 0, 45, 90.0, 5, 0));
        assert!(in_cone(0, 0, 45, 90.0, 0, 5));
        assert!(!in_cone(0, 0, 45, 90.0, 5, -1));
        // The apex is always visible.
        assert!(in_cone(3, 3, -90, 1.0, 3, 3));
        // Full circle sees everything.
        assert!(in_cone(0, 0, 0, 360.0, -4, 0));
    }
}
