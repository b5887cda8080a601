//! Justified perspectives: the state sequences agents justifiably believe.
//!
//! [`pjp_perspective`] builds an agent's predictive justified perspective:
//! for every timestamp and variable the agent's observation history is fed
//! to the variable's predictive retrieval function, and the estimate is kept
//! when it does not contradict what the agent currently sees. The output is
//! a complete-state sequence of the input's length. [`jp_perspective`] is
//! the non-predictive ancestor: unobserved values are retrieved from the raw
//! sequence prefix under the static assumption.
//!
//! Nested beliefs compose perspectives: `a`'s belief of `b`'s belief lives
//! in `f_b(f_a(seq))`, built here by [`apply_chain`] / [`nested_perspective`].

use alloc::vec::Vec;

use crate::observe::{AgentId, ObservationModel};
use crate::predict::{
    observed_timestamps, retrieve, rule_value, Omega, PrRegistry, PrStats, PredictError,
};
use crate::state::{completed, override_state, State, Value, VarId};

/// Estimate of `v` at `t` from an observation sequence: the type's
/// predictive retrieval function, except that fully-specified initially
/// believed coefficients take over while observations are insufficient for
/// a genuine fit.
fn perspective_estimate(
    omega: &Omega,
    registry: &PrRegistry,
    obs_seq: &[State],
    t: i64,
    v: VarId,
    stats: &mut PrStats,
) -> Result<Value, PredictError> {
    let entry = omega
        .get(v)
        .ok_or_else(|| PredictError::UntypedVariable(alloc::format!("var#{}", v.0)))?;
    let f = registry
        .get(&entry.type_name)
        .ok_or_else(|| PredictError::UnregisteredType(entry.type_name.clone()))?;
    let observed_here = t >= 0 && (t as usize) < obs_seq.len() && obs_seq[t as usize].has_value(v);
    if !observed_here
        && !entry.believed_eta.is_empty()
        && entry.believed_eta.iter().all(|c| c.is_some())
        && observed_timestamps(obs_seq, v).len() < f.min_points()
    {
        let coeffs: Vec<f64> = entry.believed_eta.iter().map(|c| c.unwrap()).collect();
        if let Some(x) = rule_value(&entry.type_name, &coeffs, t) {
            return Ok(Value::Num(x));
        }
    }
    registry.predict(&entry.type_name, obs_seq, t, v, stats)
}

/// Predictive justified perspective of `agent` over `seq`.
///
/// For each timestamp `t` and variable `v`, the estimate `e` is kept when
/// the agent sees `v` at `t`, or when assigning `v = e` into the real state
/// would still leave `v` invisible to the agent (the estimate does not
/// contradict current observations). Output states are complete over the
/// variables registered in `omega`.
pub fn pjp_perspective(
    model: &ObservationModel,
    omega: &Omega,
    registry: &PrRegistry,
    agent: AgentId,
    seq: &[State],
    stats: &mut PrStats,
) -> Result<Vec<State>, PredictError> {
    stats.perspective_calls += 1;
    let vars = omega.vars();
    let obs_seq = model.observe_seq(agent, seq);
    let mut out = Vec::with_capacity(seq.len());
    for (t, s_t) in seq.iter().enumerate() {
        let obs_t = &obs_seq[t];
        let mut kept = State::new();
        for &v in &vars {
            let e = perspective_estimate(omega, registry, &obs_seq, t as i64, v, stats)?;
            let keep = if obs_t.contains(v) {
                true
            } else {
                let overridden = override_state(s_t, &State::new().with(v, e.clone()));
                !model.observe(agent, &overridden).contains(v)
            };
            if keep {
                kept.assign(v, e);
            }
        }
        out.push(completed(&kept, &vars));
    }
    Ok(out)
}

/// Justified perspective under the static assumption: values are recalled
/// with the plain retrieval function over the raw prefix `[s_0..s_t]`,
/// anchored at the last timestamp the agent observed the variable.
pub fn jp_perspective(
    model: &ObservationModel,
    agent: AgentId,
    vars: &[VarId],
    seq: &[State],
) -> Vec<State> {
    let obs_seq = model.observe_seq(agent, seq);
    let mut out = Vec::with_capacity(seq.len());
    for (t, s_t) in seq.iter().enumerate() {
        let mut kept = State::new();
        for &v in vars {
            let lt_v = (0..=t)
                .filter(|&j| obs_seq[j].contains(v))
                .map(|j| j as i64)
                .max()
                .unwrap_or(-1);
            let e = retrieve(&seq[..=t], lt_v, v);
            let same_in_state = matches!(s_t.get(v), Some(val) if val.approx_eq(&e))
                || (e.is_none() && !s_t.contains(v));
            let keep = same_in_state || {
                let overridden = override_state(s_t, &State::new().with(v, e.clone()));
                !model.observe(agent, &overridden).contains(v)
            };
            if keep {
                kept.assign(v, e);
            }
        }
        out.push(completed(&kept, vars));
    }
    out
}

/// Applies perspective functions left to right: `apply_chain([a, c], seq)`
/// builds `f_c(f_a(seq))`, the sequence on which `B_a B_c φ` is evaluated.
pub fn apply_chain(
    model: &ObservationModel,
    omega: &Omega,
    registry: &PrRegistry,
    chain: &[AgentId],
    seq: &[State],
    stats: &mut PrStats,
) -> Result<Vec<State>, PredictError> {
    let mut cur = seq.to_vec();
    for &agent in chain {
        cur = pjp_perspective(model, omega, registry, agent, &cur, stats)?;
    }
    Ok(cur)
}

/// Composition with the outermost function first: `[b, a]` builds
/// `f_b(f_a(seq))`.
pub fn nested_perspective(
    model: &ObservationModel,
    omega: &Omega,
    registry: &PrRegistry,
    agents_outermost_first: &[AgentId],
    seq: &[State],
    stats: &mut PrStats,
) -> Result<Vec<State>, PredictError> {
    let chain: Vec<AgentId> = agents_outermost_first.iter().rev().copied().collect();
    apply_chain(model, omega, registry, &chain, seq, stats)
}

#[cfg(test)]
pub(crate) mod fixtures {
    //! A hand-built world shared by the perspective and semantics tests:
    //! three agents in two rooms, a numeric secret whose true value follows
    //! t+3 and whose lie value follows t+1, shared twice and then lied
    //! about, with agent c leaving before the lie.

    use super::*;
    use crate::observe::{GuardAtom, VisRule};
    use crate::predict::OmegaEntry;
    use crate::state::Vocab;
    use alloc::borrow::ToOwned;
    use alloc::string::String;

    pub struct Grapevine {
        pub vocab: Vocab,
        pub model: ObservationModel,
        pub omega: Omega,
        pub registry: PrRegistry,
        pub tsa: VarId,
        pub lsa: VarId,
        pub ssa: VarId,
        pub sloc: VarId,
        pub sharing: VarId,
        pub locs: [VarId; 3],
        pub agents: [AgentId; 3],
    }

    pub fn grapevine() -> Grapevine {
        let mut vocab = Vocab::new();
        let loc_a = vocab.intern("(agent_loc a)");
        let loc_b = vocab.intern("(agent_loc b)");
        let loc_c = vocab.intern("(agent_loc c)");
        let tsa = vocab.intern("(secret sa)");
        let lsa = vocab.intern("(lie sa)");
        let ssa = vocab.intern("(shared sa)");
        let sloc = vocab.intern("(shared_loc sa)");
        let sharing = vocab.intern("(sharing)");
        let mut model = ObservationModel::new();
        let a = model.add_agent("a", loc_a);
        let b = model.add_agent("b", loc_b);
        let c = model.add_agent("c", loc_c);
        for (agent, own) in [(a, loc_a), (b, loc_b), (c, loc_c)] {
            for loc in [loc_a, loc_b, loc_c] {
                model.add_rule(agent, VisRule { target: loc, guard: alloc::vec![GuardAtom::eq_var(loc, own)] });
            }
            for shared in [ssa, sloc] {
                model.add_rule(agent, VisRule { target: shared, guard: alloc::vec![GuardAtom::eq_var(sloc, own)] });
            }
            model.add_rule(agent, VisRule { target: sharing, guard: alloc::vec![] });
        }
        // only the owner sees the secret's true and lie values
        model.add_rule(a, VisRule { target: tsa, guard: alloc::vec![] });
        model.add_rule(a, VisRule { target: lsa, guard: alloc::vec![] });

        let mut omega = Omega::new();
        let poly = |eta: &[f64]| OmegaEntry {
            type_name: "1st_poly".to_owned(),
            eta: eta.to_vec(),
            believed_eta: alloc::vec![None, None],
        };
        omega.insert(tsa, poly(&[1.0, 3.0])).unwrap();
        omega.insert(lsa, poly(&[1.0, 1.0])).unwrap();
        omega.insert(ssa, poly(&[])).unwrap();
        for v in [loc_a, loc_b, loc_c, sloc, sharing] {
            omega.insert_static(v);
        }
        Grapevine {
            vocab,
            model,
            omega,
            registry: PrRegistry::standard(0),
            tsa,
            lsa,
            ssa,
            sloc,
            sharing,
            locs: [loc_a, loc_b, loc_c],
            agents: [a, b, c],
        }
    }

    /// The worked eight-step trace: [share(a), stop, share(a), stop,
    /// move(c, rm_2), lie(a), stop] applied from t=0.
    pub fn example_trace(g: &Grapevine) -> Vec<State> {
        let rm = |s: &str| Value::Sym(String::from(s));
        let ssa_vals = [None, Some(4.0), None, Some(6.0), None, None, Some(7.0), None];
        let sloc_vals = [false, true, false, true, false, false, true, false];
        let sharing_vals = [0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0];
        (0..8)
            .map(|t| {
                let mut s = State::new()
                    .with(g.locs[0], rm("rm_1"))
                    .with(g.locs[1], rm("rm_1"))
                    .with(g.locs[2], rm(if t >= 5 { "rm_2" } else { "rm_1" }))
                    .with(g.tsa, Value::Num(t as f64 + 3.0))
                    .with(g.lsa, Value::Num(t as f64 + 1.0))
                    .with(g.sharing, Value::Num(sharing_vals[t]));
                s.assign(g.ssa, ssa_vals[t].map(Value::Num).unwrap_or(Value::None));
                s.assign(g.sloc, if sloc_vals[t] { rm("rm_1") } else { Value::None });
                s
            })
            .collect()
    }

    pub fn ssa_row(g: &Grapevine, seq: &[State]) -> Vec<Value> {
        seq.iter().map(|s| s.get(g.ssa).cloned().unwrap_or(Value::None)).collect()
    }

    pub fn nums(values: &[f64]) -> Vec<Value> {
        values.iter().map(|&x| Value::Num(x)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::predict::PrStats;
    use crate::state::{bottom_state, Value};

    #[test]
    fn observation_rows_match_trace() {
        let g = grapevine();
        let seq = example_trace(&g);
        let [_, b, c] = g.agents;
        let ob = g.model.observe_seq(b, &seq);
        let oc = g.model.observe_seq(c, &seq);
        let row = |obs: &[crate::state::State]| -> Vec<Option<f64>> {
            obs.iter().map(|s| s.get(g.ssa).and_then(|v| v.as_num())).collect()
        };
        assert_eq!(
            row(&ob),
            alloc::vec![None, Some(4.0), None, Some(6.0), None, None, Some(7.0), None]
        );
        assert_eq!(
            row(&oc),
            alloc::vec![None, Some(4.0), None, Some(6.0), None, None, None, None]
        );
    }

    #[test]
    fn perspective_of_b_interpolates_after_losing_sight() {
        let g = grapevine();
        let seq = example_trace(&g);
        let mut stats = PrStats::default();
        let fb = pjp_perspective(&g.model, &g.omega, &g.registry, g.agents[1], &seq, &mut stats).unwrap();
        let expected = nums(&[3.0, 4.0, 5.0, 6.0, 19.0 / 3.0, 20.0 / 3.0, 7.0, 22.0 / 3.0]);
        assert_eq!(ssa_row(&g, &fb), expected);
        assert_eq!(stats.perspective_calls, 1);
    }

    #[test]
    fn perspective_of_c_continues_the_true_line() {
        let g = grapevine();
        let seq = example_trace(&g);
        let mut stats = PrStats::default();
        let fc = pjp_perspective(&g.model, &g.omega, &g.registry, g.agents[2], &seq, &mut stats).unwrap();
        assert_eq!(ssa_row(&g, &fc), nums(&[3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0]));
    }

    #[test]
    fn nested_perspectives_match_trace_rows() {
        let g = grapevine();
        let seq = example_trace(&g);
        let [a, b, c] = g.agents;
        let mut stats = PrStats::default();
        let mut row = |outer: AgentId, inner: AgentId| {
            let p = nested_perspective(&g.model, &g.omega, &g.registry, &[outer, inner], &seq, &mut stats)
                .unwrap();
            ssa_row(&g, &p)
        };
        assert_eq!(row(b, a), nums(&[3.0, 4.0, 5.0, 6.0, 19.0 / 3.0, 20.0 / 3.0, 7.0, 22.0 / 3.0]));
        assert_eq!(row(b, c), nums(&[3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0]));
        assert_eq!(row(c, a), nums(&[3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0]));
        assert_eq!(row(c, b), nums(&[3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0]));
    }

    #[test]
    fn singleton_chain_equals_plain_perspective() {
        let g = grapevine();
        let seq = example_trace(&g);
        let mut stats = PrStats::default();
        let single =
            nested_perspective(&g.model, &g.omega, &g.registry, &[g.agents[1]], &seq, &mut stats).unwrap();
        let plain = pjp_perspective(&g.model, &g.omega, &g.registry, g.agents[1], &seq, &mut stats).unwrap();
        assert_eq!(single, plain);
    }

    #[test]
    fn shared_prefix_beliefs_agree_while_colocated() {
        let g = grapevine();
        let seq = example_trace(&g);
        let prefix = &seq[..5];
        let mut stats = PrStats::default();
        let fb = pjp_perspective(&g.model, &g.omega, &g.registry, g.agents[1], prefix, &mut stats).unwrap();
        let fc = pjp_perspective(&g.model, &g.omega, &g.registry, g.agents[2], prefix, &mut stats).unwrap();
        for t in [1usize, 3] {
            assert_eq!(fb[t].get(g.ssa), fc[t].get(g.ssa));
            assert_eq!(fb[t].get(g.ssa), Some(&Value::Num(t as f64 + 3.0)));
        }
    }

    #[test]
    fn containment_holds_on_the_trace() {
        let g = grapevine();
        let seq = example_trace(&g);
        let mut stats = PrStats::default();
        for agent in g.model.agent_ids() {
            let p = pjp_perspective(&g.model, &g.omega, &g.registry, agent, &seq, &mut stats).unwrap();
            for t in 0..seq.len() {
                let obs = g.model.observe(agent, &seq[t]);
                assert!(obs.subset_of(&p[t]), "agent {:?} t={}", agent, t);
            }
        }
    }

    #[test]
    fn perspectives_are_idempotent_on_the_trace() {
        let g = grapevine();
        let seq = example_trace(&g);
        let mut stats = PrStats::default();
        for agent in g.model.agent_ids() {
            let once = pjp_perspective(&g.model, &g.omega, &g.registry, agent, &seq, &mut stats).unwrap();
            let twice = pjp_perspective(&g.model, &g.omega, &g.registry, agent, &once, &mut stats).unwrap();
            assert_eq!(once, twice, "agent {:?}", agent);
        }
    }

    #[test]
    fn outputs_are_complete_and_length_preserving() {
        let g = grapevine();
        let seq = example_trace(&g);
        let vars = g.omega.vars();
        let mut stats = PrStats::default();
        let p = pjp_perspective(&g.model, &g.omega, &g.registry, g.agents[0], &seq, &mut stats).unwrap();
        assert_eq!(p.len(), seq.len());
        for s in &p {
            for &v in &vars {
                assert!(s.contains(v));
            }
        }
    }

    #[test]
    fn all_seeing_agent_gets_bottom_completed_input() {
        let g = grapevine();
        let seq = example_trace(&g);
        let mut model = g.model.clone();
        let omni = model.add_agent("omni", g.locs[0]);
        for (v, _) in g.omega.iter() {
            model.add_rule(omni, crate::observe::VisRule { target: v, guard: alloc::vec![] });
        }
        let mut stats = PrStats::default();
        let p = pjp_perspective(&model, &g.omega, &g.registry, omni, &seq, &mut stats).unwrap();
        let vars = g.omega.vars();
        let bottom = bottom_state(&vars);
        let expected: Vec<_> = seq.iter().map(|s| override_state(&bottom, s)).collect();
        assert_eq!(p, expected);
    }

    #[test]
    fn static_omega_jp_equals_pjp_when_observed_from_start() {
        // The two constructions retrieve from different sources (raw prefix
        // vs. observation history), so they agree once every world-valued
        // variable is observable by the agent from t=0; this fixture
        // arranges exactly that.
        let g = grapevine();
        let mut model = g.model.clone();
        for agent in [g.agents[1], g.agents[2]] {
            model.add_rule(agent, crate::observe::VisRule { target: g.tsa, guard: alloc::vec![] });
            model.add_rule(agent, crate::observe::VisRule { target: g.lsa, guard: alloc::vec![] });
        }
        let mut seq = example_trace(&g);
        for s in &mut seq {
            s.assign(g.ssa, Value::Num(9.0));
            s.assign(g.sloc, Value::sym("rm_1"));
        }
        let mut omega = Omega::new();
        for (v, _) in g.omega.iter() {
            omega.insert_static(v);
        }
        let vars = omega.vars();
        let mut stats = PrStats::default();
        for agent in model.agent_ids() {
            let pjp = pjp_perspective(&model, &omega, &g.registry, agent, &seq, &mut stats).unwrap();
            let jp = jp_perspective(&model, agent, &vars, &seq);
            assert_eq!(pjp, jp, "agent {:?}", agent);
        }
    }
}
