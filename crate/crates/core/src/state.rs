//! Variables, values and the two kinds of state the planner works with.
//!
//! A [`State`] is a total assignment over every declared variable (fluents and
//! constants). A [`LocalState`] is a partial view of one global state, stored as
//! a shared value vector plus a presence mask, so restricting, intersecting and
//! joining local states are bit operations.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use smallvec::SmallVec;
use thiserror::Error;

/// Index of a declared variable inside its problem.
pub type VarId = usize;

/// Index of a declared agent inside its problem.
pub type AgentId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StateError {
    #[error("local states disagree on variable #{0}; a perspective function returned values not taken from its input")]
    Conflict(VarId),
    #[error("local states have different sizes ({0} vs {1})")]
    SizeMismatch(usize, usize),
}

/// Interned-by-value symbol. Cheap to clone.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(s: &str) -> Self {
        Symbol(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A state value. There are no floating-point values in states.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Sym(Symbol),
}

impl Value {
    pub fn sym(s: &str) -> Self {
        Value::Sym(Symbol::new(s))
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    /// Truthiness used by latch and link variables: `true` or a non-zero integer.
    pub fn is_truthy(&self) -> bool {
        match self {
            Value::Int(i) => *i != 0,
            Value::Bool(b) => *b,
            Value::Sym(_) => false,
        }
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Sym(s) => write!(f, "{s}"),
        }
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

/// Finite value domain of a variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Domain {
    /// Inclusive integer interval.
    Range(i64, i64),
    Bool,
    Set(Vec<Value>),
}

impl Domain {
    pub fn contains(&self, v: &Value) -> bool {
        match (self, v) {
            (Domain::Range(lo, hi), Value::Int(i)) => lo <= i && i <= hi,
            (Domain::Bool, Value::Bool(_)) => true,
            (Domain::Set(vs), v) => vs.contains(v),
            _ => false,
        }
    }

    pub fn size(&self) -> u128 {
        match self {
            Domain::Range(lo, hi) => (hi - lo + 1).max(0) as u128,
            Domain::Bool => 2,
            Domain::Set(vs) => vs.len() as u128,
        }
    }

    pub fn values(&self) -> Vec<Value> {
        match self {
            Domain::Range(lo, hi) => (*lo..=*hi).map(Value::Int).collect(),
            Domain::Bool => vec![Value::Bool(false), Value::Bool(true)],
            Domain::Set(vs) => vs.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Fluent,
    Constant,
}

/// A term used inside anchors: a variable reference or a literal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnchorTerm {
    Var(VarId),
    Lit(Value),
}

/// Where a variable "is", for perspective functions that care.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Anchor {
    #[default]
    None,
    /// Planar position for `euclidean2d`.
    Pos(AnchorTerm, AnchorTerm),
    /// Room index for `latched-rooms`.
    Room(AnchorTerm),
    /// The variable's own value names the page it is posted on (`social`).
    Page,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub domain: Domain,
    pub kind: VarKind,
    pub anchor: Anchor,
}

/// Compact set of variable ids.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarSet {
    words: SmallVec<[u64; 2]>,
}

impl VarSet {
    pub fn empty(n: usize) -> Self {
        VarSet {
            words: SmallVec::from_elem(0, n.div_ceil(64)),
        }
    }

    pub fn full(n: usize) -> Self {
        let mut s = Self::empty(n);
        for i in 0..n {
            s.insert(i);
        }
        s
    }

    pub fn from_iter<I: IntoIterator<Item = VarId>>(n: usize, it: I) -> Self {
        let mut s = Self::empty(n);
        for v in it {
            s.insert(v);
        }
        s
    }

    #[inline]
    pub fn contains(&self, v: VarId) -> bool {
        self.words
            .get(v / 64)
            .is_some_and(|w| w & (1u64 << (v % 64)) != 0)
    }

    #[inline]
    pub fn insert(&mut self, v: VarId) {
        self.words[v / 64] |= 1u64 << (v % 64);
    }

    #[inline]
    pub fn remove(&mut self, v: VarId) {
        self.words[v / 64] &= !(1u64 << (v % 64));
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    pub fn is_subset(&self, other: &VarSet) -> bool {
        self.words
            .iter()
            .zip(other.words.iter())
            .all(|(a, b)| a & !b == 0)
    }

    pub fn intersect(&self, other: &VarSet) -> VarSet {
        VarSet {
            words: self
                .words
                .iter()
                .zip(other.words.iter())
                .map(|(a, b)| a & b)
                .collect(),
        }
    }

    pub fn union(&self, other: &VarSet) -> VarSet {
        VarSet {
            words: self
                .words
                .iter()
                .zip(other.words.iter())
                .map(|(a, b)| a | b)
                .collect(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = VarId> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let tz = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(wi * 64 + tz)
            })
        })
    }
}

impl fmt::Debug for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// A complete assignment over all declared variables.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct State {
    values: Arc<[Value]>,
}

impl State {
    pub fn new(values: Vec<Value>) -> Self {
        State {
            values: values.into(),
        }
    }

    #[inline]
    pub fn get(&self, v: VarId) -> &Value {
        &self.values[v]
    }

    pub fn values(&self) -> &[Value] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Returns a copy with the given assignments applied.
    pub fn with(&self, updates: &[(VarId, Value)]) -> State {
        let mut vals = self.values.to_vec();
        for (v, x) in updates {
            vals[*v] = x.clone();
        }
        State::new(vals)
    }

    /// The state viewed as a local state containing every variable.
    pub fn to_local(&self) -> LocalState {
        LocalState {
            values: self.values.clone(),
            mask: VarSet::full(self.values.len()),
        }
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.values.iter()).finish()
    }
}

/// A partial assignment derived from a global state.
///
/// Entries outside `mask` are not part of the local state; the shared value
/// vector only exists so that derived local states do not copy values.
#[derive(Clone)]
pub struct LocalState {
    values: Arc<[Value]>,
    mask: VarSet,
}

impl LocalState {
    /// Builds a local state from explicit pairs over `n` variables.
    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (VarId, Value)>) -> Self {
        let mut vals = vec![Value::Int(0); n];
        let mut mask = VarSet::empty(n);
        for (v, x) in pairs {
            vals[v] = x;
            mask.insert(v);
        }
        LocalState {
            values: vals.into(),
            mask,
        }
    }

    pub fn empty_like(&self) -> Self {
        LocalState {
            values: self.values.clone(),
            mask: VarSet::empty(self.values.len()),
        }
    }

    /// Same underlying values, different domain.
    pub fn with_mask(&self, mask: VarSet) -> Self {
        debug_assert!(mask.is_subset(&VarSet::full(self.values.len())));
        LocalState {
            values: self.values.clone(),
            mask,
        }
    }

    #[inline]
    pub fn get(&self, v: VarId) -> Option<&Value> {
        if self.mask.contains(v) {
            Some(&self.values[v])
        } else {
            None
        }
    }

    #[inline]
    pub fn contains(&self, v: VarId) -> bool {
        self.mask.contains(v)
    }

    pub fn domain(&self) -> &VarSet {
        &self.mask
    }

    pub fn num_vars(&self) -> usize {
        self.values.len()
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    /// True when every declared variable is present.
    pub fn is_total(&self) -> bool {
        self.len() == self.values.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, &Value)> + '_ {
        self.mask.iter().map(move |v| (v, &self.values[v]))
    }

    /// `self` ⊆ `other` as sets of (variable, value) pairs.
    pub fn is_subset(&self, other: &LocalState) -> bool {
        self.iter().all(|(v, x)| other.get(v) == Some(x))
    }

    pub fn restrict(&self, keep: &VarSet) -> LocalState {
        self.with_mask(self.mask.intersect(keep))
    }

    pub fn intersect(&self, other: &LocalState) -> Result<LocalState, StateError> {
        let mask = self.mask.intersect(&other.mask);
        self.check_agree(other, &mask)?;
        Ok(self.with_mask(mask))
    }

    pub fn union(&self, other: &LocalState) -> Result<LocalState, StateError> {
        let overlap = self.mask.intersect(&other.mask);
        self.check_agree(other, &overlap)?;
        if Arc::ptr_eq(&self.values, &other.values) {
            return Ok(self.with_mask(self.mask.union(&other.mask)));
        }
        let mut vals = self.values.to_vec();
        for (v, x) in other.iter() {
            vals[v] = x.clone();
        }
        Ok(LocalState {
            values: vals.into(),
            mask: self.mask.union(&other.mask),
        })
    }

    fn check_agree(&self, other: &LocalState, on: &VarSet) -> Result<(), StateError> {
        if self.values.len() != other.values.len() {
            return Err(StateError::SizeMismatch(
                self.values.len(),
                other.values.len(),
            ));
        }
        if Arc::ptr_eq(&self.values, &other.values) {
            return Ok(());
        }
        for v in on.iter() {
            if self.values[v] != other.values[v] {
                return Err(StateError::Conflict(v));
            }
        }
        Ok(())
    }
}

impl PartialEq for LocalState {
    fn eq(&self, other: &Self) -> bool {
        self.mask == other.mask && self.iter().all(|(v, x)| other.values[v] == *x)
    }
}

impl Eq for LocalState {}

impl Hash for LocalState {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.mask.hash(state);
        for (_, x) in self.iter() {
            x.hash(state);
        }
    }
}

impl fmt::Debug for LocalState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.iter()).finish()
    }
}

/// Restricts a state (or local state) to `keep`.
pub fn restrict(s: &LocalState, keep: &VarSet) -> LocalState {
    s.restrict(keep)
}
