//! Per-agent observation functions.
//!
//! An observation function projects a state to the part an agent can see. It
//! is configured by visibility rules: a rule makes a target variable visible
//! when its guard (a conjunction of equality atoms over state variables)
//! holds. Guards referencing an absent or `none` variable evaluate to "not
//! visible", and `none`-valued targets are never included, so the three
//! required properties (contraction, idempotence, monotonicity) hold by
//! construction for positive-equality guards.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::state::{State, Value, VarId};

/// Index of an agent in an [`ObservationModel`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentId(pub usize);

#[derive(Clone, Debug)]
pub enum GuardRhs {
    Var(VarId),
    Lit(Value),
}

/// One equality atom of a visibility guard. `negated` exists so tests can
/// build rule sets that violate monotonicity; well-formed models keep it
/// `false`.
#[derive(Clone, Debug)]
pub struct GuardAtom {
    pub lhs: VarId,
    pub rhs: GuardRhs,
    pub negated: bool,
}

impl GuardAtom {
    pub fn eq_var(lhs: VarId, rhs: VarId) -> Self {
        GuardAtom { lhs, rhs: GuardRhs::Var(rhs), negated: false }
    }

    pub fn eq_lit(lhs: VarId, value: Value) -> Self {
        GuardAtom { lhs, rhs: GuardRhs::Lit(value), negated: false }
    }

    fn holds(&self, state: &State) -> bool {
        // Equality over an absent or `none` operand does not hold, so a
        // positive guard makes the target "not visible" in that case. A
        // negated atom flips the outcome afterwards, which is exactly what
        // breaks monotonicity and why well-formed models avoid negation.
        let eq = (|| {
            let lhs = match state.get(self.lhs) {
                Some(v) if !v.is_none() => v,
                _ => return false,
            };
            let rhs = match &self.rhs {
                GuardRhs::Var(rv) => match state.get(*rv) {
                    Some(v) if !v.is_none() => v,
                    _ => return false,
                },
                GuardRhs::Lit(v) => v,
            };
            lhs.approx_eq(rhs)
        })();
        if self.negated {
            !eq
        } else {
            eq
        }
    }
}

/// Makes `target` visible whenever every guard atom holds.
#[derive(Clone, Debug)]
pub struct VisRule {
    pub target: VarId,
    pub guard: Vec<GuardAtom>,
}

#[derive(Clone, Debug)]
struct AgentSpec {
    name: String,
    /// Variable whose non-`none` assignment marks the agent as present in a
    /// state (its location in the usual encodings).
    presence: VarId,
    rules: Vec<VisRule>,
}

/// Observation functions for a set of agents.
#[derive(Clone, Debug, Default)]
pub struct ObservationModel {
    agents: Vec<AgentSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ObserveError {
    UnknownAgent(String),
    EmptySample,
}

impl fmt::Display for ObserveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObserveError::UnknownAgent(name) => write!(f, "unknown agent `{}`", name),
            ObserveError::EmptySample => write!(f, "property check needs at least one sample state"),
        }
    }
}

impl core::error::Error for ObserveError {}

impl ObservationModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_agent(&mut self, name: &str, presence: VarId) -> AgentId {
        self.agents.push(AgentSpec {
            name: String::from(name),
            presence,
            rules: Vec::new(),
        });
        AgentId(self.agents.len() - 1)
    }

    pub fn add_rule(&mut self, agent: AgentId, rule: VisRule) {
        self.agents[agent.0].rules.push(rule);
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    pub fn agent_ids(&self) -> impl Iterator<Item = AgentId> {
        (0..self.agents.len()).map(AgentId)
    }

    pub fn agent_name(&self, agent: AgentId) -> &str {
        &self.agents[agent.0].name
    }

    pub fn agent_by_name(&self, name: &str) -> Result<AgentId, ObserveError> {
        self.agents
            .iter()
            .position(|a| a.name == name)
            .map(AgentId)
            .ok_or_else(|| ObserveError::UnknownAgent(String::from(name)))
    }

    /// Variable marking the agent's presence (see [`ObservationModel::add_agent`]).
    pub fn presence_var(&self, agent: AgentId) -> VarId {
        self.agents[agent.0].presence
    }

    /// `true` when the agent's presence variable has a non-`none` value.
    pub fn agent_present(&self, agent: AgentId, state: &State) -> bool {
        state.has_value(self.presence_var(agent))
    }

    /// The subset of `state` visible to `agent`.
    pub fn observe(&self, agent: AgentId, state: &State) -> State {
        let mut out = State::new();
        for rule in &self.agents[agent.0].rules {
            if out.contains(rule.target) {
                continue;
            }
            match state.get(rule.target) {
                Some(v) if !v.is_none() => {}
                _ => continue,
            }
            if rule.guard.iter().all(|atom| atom.holds(state)) {
                out.assign(rule.target, state.get(rule.target).unwrap().clone());
            }
        }
        out
    }

    /// Elementwise observation of a sequence.
    pub fn observe_seq(&self, agent: AgentId, seq: &[State]) -> Vec<State> {
        seq.iter().map(|s| self.observe(agent, s)).collect()
    }
}

/// Which observation-function property a witness violates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObsProperty {
    Contraction,
    Idempotence,
    Monotonicity,
}

impl fmt::Display for ObsProperty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ObsProperty::Contraction => "contraction",
            ObsProperty::Idempotence => "idempotence",
            ObsProperty::Monotonicity => "monotonicity",
        };
        write!(f, "{}", s)
    }
}

#[derive(Clone, Debug)]
pub struct ObsViolation {
    pub agent: String,
    pub property: ObsProperty,
    pub witness: State,
    /// Second state of a monotonicity witness (`witness ⊆ larger` but the
    /// observations are not ordered the same way).
    pub larger: Option<State>,
}

#[derive(Clone, Debug, Default)]
pub struct ObsReport {
    pub states_checked: usize,
    pub violations: Vec<ObsViolation>,
}

impl ObsReport {
    pub fn all_hold(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks contraction, idempotence and monotonicity on the given sample
/// states. Monotonicity is exercised against every drop-one-assignment
/// subset of each sample and against subset pairs found within the samples.
pub fn check_observation_properties(
    model: &ObservationModel,
    samples: &[State],
) -> Result<ObsReport, ObserveError> {
    if samples.is_empty() {
        return Err(ObserveError::EmptySample);
    }
    let mut report = ObsReport {
        states_checked: samples.len(),
        violations: Vec::new(),
    };
    for agent in model.agent_ids() {
        let name = String::from(model.agent_name(agent));
        for s in samples {
            let obs = model.observe(agent, s);
            if !obs.subset_of(s) {
                report.violations.push(ObsViolation {
                    agent: name.clone(),
                    property: ObsProperty::Contraction,
                    witness: s.clone(),
                    larger: None,
                });
            }
            if model.observe(agent, &obs) != obs {
                report.violations.push(ObsViolation {
                    agent: name.clone(),
                    property: ObsProperty::Idempotence,
                    witness: s.clone(),
                    larger: None,
                });
            }
            // drop-one subsets
            for (v, _) in s.iter() {
                let sub: State = s.iter().filter(|(w, _)| *w != v).map(|(w, val)| (w, val.clone())).collect();
                if !check_monotone_pair(model, agent, &sub, s) {
                    report.violations.push(ObsViolation {
                        agent: name.clone(),
                        property: ObsProperty::Monotonicity,
                        witness: sub,
                        larger: Some(s.clone()),
                    });
                }
            }
        }
        for a in samples {
            for b in samples {
                if a.len() < b.len() && a.subset_of(b) && !check_monotone_pair(model, agent, a, b) {
                    report.violations.push(ObsViolation {
                        agent: name.clone(),
                        property: ObsProperty::Monotonicity,
                        witness: a.clone(),
                        larger: Some(b.clone()),
                    });
                }
            }
        }
    }
    Ok(report)
}

fn check_monotone_pair(model: &ObservationModel, agent: AgentId, small: &State, large: &State) -> bool {
    model.observe(agent, small).subset_of(&model.observe(agent, large))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::Vocab;

    /// Two agents in two rooms; `item` is visible where `item_loc` matches
    /// the observer's location.
    fn small_model() -> (Vocab, ObservationModel, VarId, VarId, VarId, VarId) {
        let mut vb = Vocab::new();
        let loc_a = vb.intern("(agent_loc a)");
        let loc_b = vb.intern("(agent_loc b)");
        let item = vb.intern("(item)");
        let item_loc = vb.intern("(item_loc)");
        let mut model = ObservationModel::new();
        let a = model.add_agent("a", loc_a);
        let b = model.add_agent("b", loc_b);
        for (agent, own) in [(a, loc_a), (b, loc_b)] {
            model.add_rule(agent, VisRule { target: loc_a, guard: alloc::vec![GuardAtom::eq_var(loc_a, own)] });
            model.add_rule(agent, VisRule { target: loc_b, guard: alloc::vec![GuardAtom::eq_var(loc_b, own)] });
            model.add_rule(agent, VisRule { target: item, guard: alloc::vec![GuardAtom::eq_var(item_loc, own)] });
            model.add_rule(agent, VisRule { target: item_loc, guard: alloc::vec![GuardAtom::eq_var(item_loc, own)] });
        }
        (vb, model, loc_a, loc_b, item, item_loc)
    }

    #[test]
    fn observe_filters_by_location() {
        let (_vb, model, loc_a, loc_b, item, item_loc) = small_model();
        let s = State::new()
            .with(loc_a, Value::sym("rm_1"))
            .with(loc_b, Value::sym("rm_2"))
            .with(item, Value::Num(7.0))
            .with(item_loc, Value::sym("rm_1"));
        let a = model.agent_by_name("a").unwrap();
        let b = model.agent_by_name("b").unwrap();
        let oa = model.observe(a, &s);
        assert!(oa.has_value(item));
        assert!(oa.has_value(loc_a));
        assert!(!oa.contains(loc_b));
        let ob = model.observe(b, &s);
        assert!(!ob.contains(item));
        assert!(ob.has_value(loc_b));
    }

    #[test]
    fn observe_empty_state_is_empty() {
        let (_vb, model, ..) = small_model();
        let a = model.agent_by_name("a").unwrap();
        assert!(model.observe(a, &State::new()).is_empty());
    }

    #[test]
    fn unknown_agent_is_an_error() {
        let (_vb, model, ..) = small_model();
        assert_eq!(
            model.agent_by_name("zed"),
            Err(ObserveError::UnknownAgent(String::from("zed")))
        );
    }

    #[test]
    fn none_values_are_invisible() {
        let (_vb, model, loc_a, _loc_b, item, item_loc) = small_model();
        let a = model.agent_by_name("a").unwrap();
        let s = State::new()
            .with(loc_a, Value::sym("rm_1"))
            .with(item, Value::None)
            .with(item_loc, Value::sym("rm_1"));
        let obs = model.observe(a, &s);
        assert!(!obs.contains(item));
    }

    #[test]
    fn clean_model_passes_property_check() {
        let (_vb, model, loc_a, loc_b, item, item_loc) = small_model();
        let rooms = ["rm_1", "rm_2"];
        let mut samples = Vec::new();
        for (i, ra) in rooms.iter().enumerate() {
            for (j, rb) in rooms.iter().enumerate() {
                for (k, rl) in rooms.iter().enumerate() {
                    let val = (i * 4 + j * 2 + k) as f64;
                    samples.push(
                        State::new()
                            .with(loc_a, Value::sym(ra))
                            .with(loc_b, Value::sym(rb))
                            .with(item, Value::Num(val))
                            .with(item_loc, Value::sym(rl)),
                    );
                }
            }
        }
        let report = check_observation_properties(&model, &samples).unwrap();
        assert!(report.all_hold(), "violations: {:?}", report.violations);
    }

    #[test]
    fn negated_guard_breaks_monotonicity() {
        let (mut vb, mut model, loc_a, _loc_b, _item, item_loc) = small_model();
        let shadow = vb.intern("(shadow)");
        let a = model.agent_by_name("a").unwrap();
        // sees the shadow whenever the item is NOT co-located with it
        model.add_rule(
            a,
            VisRule {
                target: shadow,
                guard: alloc::vec![GuardAtom {
                    lhs: item_loc,
                    rhs: GuardRhs::Var(loc_a),
                    negated: true,
                }],
            },
        );
        // In the full state the guard equality holds, hiding the shadow; in
        // the drop-one subset without `item_loc` the negated atom holds and
        // the shadow becomes visible, flipping the inclusion.
        let s = State::new()
            .with(loc_a, Value::sym("rm_1"))
            .with(shadow, Value::Num(1.0))
            .with(item_loc, Value::sym("rm_1"));
        let report = check_observation_properties(&model, &[s]).unwrap();
        assert!(report
            .violations
            .iter()
            .any(|v| v.property == ObsProperty::Monotonicity && v.agent == "a"));
    }

    #[test]
    fn empty_sample_list_is_an_error() {
        let (_vb, model, ..) = small_model();
        assert_eq!(
            check_observation_properties(&model, &[]).unwrap_err(),
            ObserveError::EmptySample
        );
    }
}
