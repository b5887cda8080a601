//! States, state sequences and the override operator.
//!
//! A state is a partial assignment of variables to values. A variable can be
//! assigned the distinguished value `none` (⊥), which is different from the
//! variable being absent altogether: `contains` tests for an assignment,
//! `has_value` additionally requires the value to be non-`none`.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Tolerance used for numeric value identity throughout the crate.
pub const VALUE_EPSILON: f64 = 1e-9;

/// An interned variable name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub u32);

/// Interner mapping ground variable names (e.g. `(shared sa)`) to [`VarId`]s.
#[derive(Clone, Debug, Default)]
pub struct Vocab {
    names: Vec<String>,
    index: BTreeMap<String, u32>,
}

impl Vocab {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, name: &str) -> VarId {
        if let Some(&id) = self.index.get(name) {
            return VarId(id);
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_owned());
        self.index.insert(name.to_owned(), id);
        VarId(id)
    }

    pub fn lookup(&self, name: &str) -> Option<VarId> {
        self.index.get(name).map(|&id| VarId(id))
    }

    pub fn name(&self, id: VarId) -> &str {
        &self.names[id.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// A domain value: a real number, a symbolic constant, or `none` (⊥).
#[derive(Clone, Debug)]
pub enum Value {
    Num(f64),
    Sym(String),
    None,
}

impl Value {
    pub fn sym(s: &str) -> Self {
        Value::Sym(s.to_owned())
    }

    pub fn is_none(&self) -> bool {
        matches!(self, Value::None)
    }

    pub fn as_num(&self) -> Option<f64> {
        match self {
            Value::Num(x) => Some(*x),
            _ => None,
        }
    }

    /// Value identity. Numbers compare within [`VALUE_EPSILON`]; `none` is
    /// distinct from every number and symbol.
    pub fn approx_eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Num(a), Value::Num(b)) => (a - b).abs() <= VALUE_EPSILON,
            (Value::Sym(a), Value::Sym(b)) => a == b,
            (Value::None, Value::None) => true,
            _ => false,
        }
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.approx_eq(other)
    }
}

impl fmt::Display for Value {
    /// Numbers render rounded to two decimals with trailing zeros trimmed,
    /// matching the usual presentation of rationals such as 19/3 -> 6.33.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(x) => {
                let mut s = alloc::format!("{:.2}", x);
                if s.contains('.') {
                    while s.ends_with('0') {
                        s.pop();
                    }
                    if s.ends_with('.') {
                        s.pop();
                    }
                }
                if s == "-0" {
                    s = "0".to_owned();
                }
                write!(f, "{}", s)
            }
            Value::Sym(s) => write!(f, "{}", s),
            Value::None => write!(f, "none"),
        }
    }
}

/// A partial assignment of variables to values.
#[derive(Clone, Debug, Default)]
pub struct State {
    assignments: BTreeMap<VarId, Value>,
}

impl State {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn assign(&mut self, v: VarId, value: Value) {
        self.assignments.insert(v, value);
    }

    pub fn with(mut self, v: VarId, value: Value) -> Self {
        self.assign(v, value);
        self
    }

    pub fn get(&self, v: VarId) -> Option<&Value> {
        self.assignments.get(&v)
    }

    /// The variable has an assignment (its value may still be `none`).
    pub fn contains(&self, v: VarId) -> bool {
        self.assignments.contains_key(&v)
    }

    /// The variable has an assignment and it is not `none`.
    pub fn has_value(&self, v: VarId) -> bool {
        matches!(self.assignments.get(&v), Some(val) if !val.is_none())
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, &Value)> {
        self.assignments.iter().map(|(k, v)| (*k, v))
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    /// Assignment-set inclusion: every assignment of `self` appears in
    /// `other` with an identical value.
    pub fn subset_of(&self, other: &State) -> bool {
        self.iter()
            .all(|(v, val)| matches!(other.get(v), Some(o) if o.approx_eq(val)))
    }
}

impl PartialEq for State {
    fn eq(&self, other: &Self) -> bool {
        self.len() == other.len() && self.subset_of(other)
    }
}

impl FromIterator<(VarId, Value)> for State {
    fn from_iter<T: IntoIterator<Item = (VarId, Value)>>(iter: T) -> Self {
        State {
            assignments: iter.into_iter().collect(),
        }
    }
}

/// State override: every assignment of `winner` survives, and assignments of
/// `target` survive for variables `winner` does not mention.
pub fn override_state(target: &State, winner: &State) -> State {
    let mut out = winner.clone();
    for (v, val) in target.iter() {
        if !out.contains(v) {
            out.assign(v, val.clone());
        }
    }
    out
}

/// Elementwise override of a sequence by a single target state.
pub fn override_seq(target: &State, seq: &[State]) -> Vec<State> {
    seq.iter().map(|s| override_state(target, s)).collect()
}

/// The all-`none` state over a set of variables.
pub fn bottom_state(vars: &[VarId]) -> State {
    vars.iter().map(|&v| (v, Value::None)).collect()
}

/// Completes `state` over `vars`, filling missing variables with `none`.
pub fn completed(state: &State, vars: &[VarId]) -> State {
    let mut out = state.clone();
    for &v in vars {
        if !out.contains(v) {
            out.assign(v, Value::None);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab3() -> (Vocab, VarId, VarId, VarId) {
        let mut vb = Vocab::new();
        let x = vb.intern("x");
        let y = vb.intern("y");
        let q = vb.intern("q");
        (vb, x, y, q)
    }

    #[test]
    fn override_winner_survives() {
        let (_vb, x, y, _q) = vocab3();
        let target = State::new().with(x, Value::Num(1.0)).with(y, Value::Num(2.0));
        let winner = State::new().with(x, Value::Num(3.0));
        let out = override_state(&target, &winner);
        assert_eq!(out.get(x), Some(&Value::Num(3.0)));
        assert_eq!(out.get(y), Some(&Value::Num(2.0)));
    }

    #[test]
    fn override_empty_winner_is_identity() {
        let (_vb, x, y, _q) = vocab3();
        let s = State::new().with(x, Value::Num(1.0)).with(y, Value::sym("rm_1"));
        assert_eq!(override_state(&s, &State::new()), s);
    }

    #[test]
    fn override_completion_case() {
        let (_vb, p, q, _r) = vocab3();
        let bottom = bottom_state(&[p, q]);
        let winner = State::new().with(p, Value::Num(5.0));
        let out = override_state(&bottom, &winner);
        assert_eq!(out.get(p), Some(&Value::Num(5.0)));
        assert_eq!(out.get(q), Some(&Value::None));
    }

    #[test]
    fn override_is_idempotent_for_same_winner() {
        let (_vb, x, y, q) = vocab3();
        let a = State::new().with(x, Value::Num(1.0)).with(y, Value::Num(2.0));
        let b = State::new().with(x, Value::Num(9.0)).with(q, Value::None);
        let once = override_state(&a, &b);
        let twice = override_state(&once, &b);
        assert_eq!(once, twice);
    }

    #[test]
    fn override_seq_preserves_length_and_completes() {
        let (_vb, p, q, _r) = vocab3();
        let bottom = bottom_state(&[p, q]);
        let seq = [State::new().with(p, Value::Num(1.0)), State::new()];
        let out = override_seq(&bottom, &seq);
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].get(p), Some(&Value::Num(1.0)));
        assert_eq!(out[0].get(q), Some(&Value::None));
        assert_eq!(out[1].get(p), Some(&Value::None));
        // completion is idempotent on an already complete sequence
        assert_eq!(override_seq(&bottom, &out), out);
    }

    #[test]
    fn none_distinct_from_values() {
        assert_ne!(Value::None, Value::Num(0.0));
        assert_ne!(Value::None, Value::sym("none_sym"));
        assert_eq!(Value::Num(1.0), Value::Num(1.0 + 1e-12));
        assert_ne!(Value::Num(1.0), Value::Num(1.0 + 1e-6));
    }

    #[test]
    fn display_rounds_to_two_decimals() {
        assert_eq!(alloc::format!("{}", Value::Num(19.0 / 3.0)), "6.33");
        assert_eq!(alloc::format!("{}", Value::Num(22.0 / 3.0)), "7.33");
        assert_eq!(alloc::format!("{}", Value::Num(4.0)), "4");
        assert_eq!(alloc::format!("{}", Value::Num(-0.001)), "0");
        assert_eq!(alloc::format!("{}", Value::sym("rm_1")), "rm_1");
        assert_eq!(alloc::format!("{}", Value::None), "none");
    }
}
