use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::state::Value;

pub type Predicate = Arc<dyn Fn(&[Value]) -> bool + Send + Sync>;

#[derive(Clone)]
pub struct Relation {
    pub arity: usize,
    pred: Predicate,
}

impl Relation {
    pub fn holds(&self, args: &[Value]) -> bool {
        (self.pred)(args)
    }
}

impl fmt::Debug for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Relation/{}", self.arity)
    }
}

/// Domain relations usable in formulas, keyed by name.
#[derive(Debug, Clone)]
pub struct RelationRegistry {
    map: HashMap<String, Relation>,
}

/// Comparison operators available as infix syntax.
pub const COMPARISONS: [&str; 6] = ["=", "!=", "<", "<=", ">", ">="];

fn compare(args: &[Value], accept: fn(std::cmp::Ordering) -> bool) -> bool {
    match (&args[0], &args[1]) {
        (Value::Int(a), Value::Int(b)) => accept(a.cmp(b)),
        _ => false,
    }
}

fn far_away(args: &[Value]) -> bool {
    let Some(c): Option<Vec<i128>> = args.iter().map(|v| v.as_int().map(i128::from)).collect() else {
        return false;
    };
    let d2 = |x: i128, y: i128| (x - c[0]).pow(2) + (y - c[1]).pow(2);
    d2(c[2], c[3]) > d2(c[4], c[5])
}

impl Default for RelationRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl RelationRegistry {
    /// Comparisons plus `far_away(x0,y0, x1,y1, x2,y2)`: the first point is
    /// strictly farther from the reference point than the second.
    pub fn builtin() -> Self {
        let mut r = RelationRegistry { map: HashMap::new() };
        r.register("=", 2, |a| a[0] == a[1]);
        r.register("!=", 2, |a| a[0] != a[1]);
        r.register("<", 2, |a| compare(a, |o| o.is_lt()));
        r.register("<=", 2, |a| compare(a, |o| o.is_le()));
        r.register(">", 2, |a| compare(a, |o| o.is_gt()));
        r.register(">=", 2, |a| compare(a, |o| o.is_ge()));
        r.register("far_away", 6, far_away);
        r
    }

    pub fn register(&mut self, name: &str, arity: usize, pred: impl Fn(&[Value]) -> bool + Send + Sync + 'static) {
        self.map.insert(
            name.to_string(),
            Relation {
                arity,
                pred: Arc::new(pred),
            },
        );
    }

    pub fn get(&self, name: &str) -> Option<&Relation> {
        self.map.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.map.keys().map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(xs: &[i64]) -> Vec<Value> {
        xs.iter().map(|&x| Value::Int(x)).collect()
    }

    #[test]
    fn comparisons() {
        let r = RelationRegistry::builtin();
        assert!(r.get("=").unwrap().holds(&ints(&[3, 3])));
        assert!(r.get("!=").unwrap().holds(&[Value::sym("none"), Value::sym("a")]));
        assert!(r.get("<").unwrap().holds(&ints(&[2, 3])));
        assert!(!r.get(">=").unwrap().holds(&ints(&[2, 3])));
        assert!(!r.get("<").unwrap().holds(&[Value::sym("a"), Value::sym("b")]));
    }

    #[test]
    fn far_away_compares_distances() {
        let r = RelationRegistry::builtin();
        let f = r.get("far_away").unwrap();
        assert_eq!(f.arity, 6);
        assert!(f.holds(&ints(&[0, 0, 10, 0, 3, 4])));
        assert!(!f.holds(&ints(&[0, 0, 3, 4, 0, 5])));
        assert!(!f.holds(&ints(&[0, 0, 1, 1, 9, 9])));
    }
}
