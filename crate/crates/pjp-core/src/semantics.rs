//! Three-valued evaluation of the modal language over state sequences.
//!
//! Predicates are interpreted on the last state of the sequence and return
//! the undeterminable value whenever an operand is absent or `none` (except
//! for equality against the `none` literal, which is always determinate).
//! Seeing consults the agent's observation of the sequence; believing
//! evaluates the formula on the agent's predictive justified perspective of
//! the `none`-completed sequence. Perspectives built during one evaluation
//! are cached by their operator path, so repeated belief subformulas do not
//! recompute them.

use alloc::collections::BTreeMap;
use alloc::rc::Rc;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::formula::{Formula, Predicate, PrefixOp, QueryPrefix, Rel, Term, Ternary};
use crate::observe::{AgentId, ObservationModel, ObserveError};
use crate::perspective::pjp_perspective;
use crate::predict::{Omega, PrRegistry, PrStats, PredictError};
use crate::state::{bottom_state, override_seq, State, Value, VarId, VALUE_EPSILON};

/// Everything evaluation needs besides the sequence itself.
pub struct EvalEnv<'a> {
    pub model: &'a ObservationModel,
    pub omega: &'a Omega,
    pub registry: &'a PrRegistry,
    /// Tolerance for numeric predicate comparisons. Value identity inside
    /// perspectives always uses [`VALUE_EPSILON`].
    pub tolerance: f64,
}

impl<'a> EvalEnv<'a> {
    pub fn new(model: &'a ObservationModel, omega: &'a Omega, registry: &'a PrRegistry) -> Self {
        EvalEnv { model, omega, registry, tolerance: VALUE_EPSILON }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum EvalError {
    UnknownAgent(String),
    EmptySequence,
    Predict(PredictError),
    /// A `@jp` prefix may only contain positive belief items.
    InvalidJpPrefix(String),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::UnknownAgent(name) => write!(f, "unknown agent `{}`", name),
            EvalError::EmptySequence => write!(f, "evaluation needs a non-empty sequence"),
            EvalError::Predict(e) => write!(f, "{}", e),
            EvalError::InvalidJpPrefix(msg) => write!(f, "invalid jp prefix: {}", msg),
        }
    }
}

impl core::error::Error for EvalError {}

impl From<PredictError> for EvalError {
    fn from(e: PredictError) -> Self {
        EvalError::Predict(e)
    }
}

impl From<ObserveError> for EvalError {
    fn from(e: ObserveError) -> Self {
        match e {
            ObserveError::UnknownAgent(name) => EvalError::UnknownAgent(name),
            ObserveError::EmptySample => EvalError::EmptySequence,
        }
    }
}

/// Per-evaluation scratch: the perspective cache and prediction counters.
/// Reusing one context across several formulas evaluated on the same base
/// sequence shares the cache; it has no semantic effect.
#[derive(Default)]
pub struct EvalCtx {
    cache: BTreeMap<Vec<u64>, Rc<Vec<State>>>,
    path: Vec<u64>,
    pub stats: PrStats,
}

impl EvalCtx {
    pub fn new() -> Self {
        Self::default()
    }
}

fn path_elem_belief(agent: AgentId) -> u64 {
    agent.0 as u64 * 2
}

fn path_elem_obs(agent: AgentId) -> u64 {
    agent.0 as u64 * 2 + 1
}

/// Evaluates `formula` on `seq` with a fresh context.
pub fn evaluate(env: &EvalEnv, seq: &[State], formula: &Formula) -> Result<Ternary, EvalError> {
    let mut ctx = EvalCtx::new();
    evaluate_in(env, &mut ctx, seq, formula)
}

/// Evaluates `formula` on `seq` reusing `ctx`'s cache and counters. The
/// context must only be reused with the same base sequence.
pub fn evaluate_in(
    env: &EvalEnv,
    ctx: &mut EvalCtx,
    seq: &[State],
    formula: &Formula,
) -> Result<Ternary, EvalError> {
    if seq.is_empty() {
        return Err(EvalError::EmptySequence);
    }
    eval_rec(env, ctx, seq, formula)
}

fn eval_rec(
    env: &EvalEnv,
    ctx: &mut EvalCtx,
    seq: &[State],
    formula: &Formula,
) -> Result<Ternary, EvalError> {
    match formula {
        Formula::Pred(p) => Ok(eval_pred(p, seq.last().unwrap(), env.tolerance)),
        Formula::Not(f) => Ok(eval_rec(env, ctx, seq, f)?.negate()),
        Formula::And(a, b) => {
            let left = eval_rec(env, ctx, seq, a)?;
            if left == Ternary::False {
                return Ok(Ternary::False);
            }
            Ok(left.min(eval_rec(env, ctx, seq, b)?))
        }
        Formula::SeesVar(agent, v) => {
            let agent = env.model.agent_by_name(agent)?;
            let last = seq.last().unwrap();
            if !last.has_value(*v) || !env.model.agent_present(agent, last) {
                return Ok(Ternary::Unknown);
            }
            Ok(env.model.observe(agent, last).contains(*v).into())
        }
        Formula::Sees(agent, f) => {
            let agent_id = env.model.agent_by_name(agent)?;
            let objective = eval_rec(env, ctx, seq, f)?;
            if objective == Ternary::Unknown
                || !env.model.agent_present(agent_id, seq.last().unwrap())
            {
                return Ok(Ternary::Unknown);
            }
            let obs = env.model.observe_seq(agent_id, seq);
            ctx.path.push(path_elem_obs(agent_id));
            let seen = eval_rec(env, ctx, &obs, f);
            ctx.path.pop();
            Ok((seen? != Ternary::Unknown).into())
        }
        Formula::Knows(agent, f) => {
            // K_i φ = φ ∧ S_i φ
            let objective = eval_rec(env, ctx, seq, f)?;
            if objective == Ternary::False {
                return Ok(Ternary::False);
            }
            let sees = eval_rec(env, ctx, seq, &Formula::Sees(agent.clone(), f.clone()))?;
            Ok(objective.min(sees))
        }
        Formula::Believes(agent, f) => {
            let agent_id = env.model.agent_by_name(agent)?;
            ctx.path.push(path_elem_belief(agent_id));
            let perspective = match ctx.cache.get(&ctx.path) {
                Some(p) => Rc::clone(p),
                None => {
                    let vars = env.omega.vars();
                    let complete = override_seq(&bottom_state(&vars), seq);
                    let p = pjp_perspective(
                        env.model,
                        env.omega,
                        env.registry,
                        agent_id,
                        &complete,
                        &mut ctx.stats,
                    );
                    match p {
                        Ok(p) => {
                            let rc = Rc::new(p);
                            ctx.cache.insert(ctx.path.clone(), Rc::clone(&rc));
                            rc
                        }
                        Err(e) => {
                            ctx.path.pop();
                            return Err(e.into());
                        }
                    }
                }
            };
            let result = eval_rec(env, ctx, &perspective, f);
            ctx.path.pop();
            result
        }
    }
}

fn resolve(term: &Term, state: &State) -> Option<Value> {
    match term {
        Term::Lit(v) => Some(v.clone()),
        Term::Var(id) => state.get(*id).cloned(),
    }
}

fn eval_pred(pred: &Predicate, state: &State, tol: f64) -> Ternary {
    let lhs = resolve(&pred.lhs, state);
    let rhs = resolve(&pred.rhs, state);
    // equality against the `none` literal is always determinate: it tests
    // exactly "has no usable value here"
    if matches!(pred.rel, Rel::Eq | Rel::Ne) {
        let lhs_none_lit = matches!(pred.lhs, Term::Lit(Value::None));
        let rhs_none_lit = matches!(pred.rhs, Term::Lit(Value::None));
        if lhs_none_lit || rhs_none_lit {
            let other = if rhs_none_lit { &lhs } else { &rhs };
            let is_none = other.as_ref().map(|v| v.is_none()).unwrap_or(true);
            return match pred.rel {
                Rel::Eq => is_none.into(),
                _ => (!is_none).into(),
            };
        }
    }
    let lhs = match lhs {
        Some(v) if !v.is_none() => v,
        _ => return Ternary::Unknown,
    };
    let rhs = match rhs {
        Some(v) if !v.is_none() => v,
        _ => return Ternary::Unknown,
    };
    match (&lhs, &rhs) {
        (Value::Num(a), Value::Num(b)) => {
            let eq = (a - b).abs() <= tol;
            match pred.rel {
                Rel::Eq => eq.into(),
                Rel::Ne => (!eq).into(),
                Rel::Lt => (a < b && !eq).into(),
                Rel::Le => (a < b || eq).into(),
                Rel::Gt => (a > b && !eq).into(),
                Rel::Ge => (a > b || eq).into(),
            }
        }
        _ => {
            let eq = lhs.approx_eq(&rhs);
            match pred.rel {
                Rel::Eq => eq.into(),
                Rel::Ne => (!eq).into(),
                // no order on symbols
                _ => Ternary::Unknown,
            }
        }
    }
}

/// Evaluates `inner` under an epistemic prefix and maps the ternary result
/// onto the `epi.*` symbols (via [`Ternary`]'s display form).
pub fn epi_eval(
    env: &EvalEnv,
    ctx: &mut EvalCtx,
    seq: &[State],
    prefix: &QueryPrefix,
    inner: &Formula,
) -> Result<Ternary, EvalError> {
    let formula = crate::formula::prefix_formula(prefix, inner.clone());
    evaluate_in(env, ctx, seq, &formula)
}

/// Value of `v` in the last state of the nested perspective denoted by a
/// positive belief prefix: `"b[a] b[c]"` reads the value in `f_c(f_a(seq))`,
/// the sequence on which `B_a B_c` formulas are evaluated.
pub fn jp_value(
    env: &EvalEnv,
    ctx: &mut EvalCtx,
    seq: &[State],
    prefix: &QueryPrefix,
    v: VarId,
) -> Result<Value, EvalError> {
    if seq.is_empty() {
        return Err(EvalError::EmptySequence);
    }
    if prefix.is_empty() {
        return Err(EvalError::InvalidJpPrefix(String::from("empty prefix")));
    }
    for item in prefix {
        if item.negated || item.op != PrefixOp::Believes {
            return Err(EvalError::InvalidJpPrefix(alloc::format!(
                "only positive belief items are allowed, got `{}`",
                crate::formula::prefix_to_string(&alloc::vec![item.clone()])
            )));
        }
    }
    // walk the belief chain through the path cache, reusing perspectives
    let base_len = ctx.path.len();
    let mut current: Option<Rc<Vec<State>>> = None;
    for item in prefix {
        let agent_id = match env.model.agent_by_name(&item.agent) {
            Ok(a) => a,
            Err(e) => {
                ctx.path.truncate(base_len);
                return Err(e.into());
            }
        };
        ctx.path.push(path_elem_belief(agent_id));
        let next = match ctx.cache.get(&ctx.path) {
            Some(p) => Rc::clone(p),
            None => {
                let vars = env.omega.vars();
                let base: &[State] = match &current {
                    Some(p) => p,
                    None => seq,
                };
                let complete = override_seq(&bottom_state(&vars), base);
                match pjp_perspective(env.model, env.omega, env.registry, agent_id, &complete, &mut ctx.stats)
                {
                    Ok(p) => {
                        let rc = Rc::new(p);
                        ctx.cache.insert(ctx.path.clone(), Rc::clone(&rc));
                        rc
                    }
                    Err(e) => {
                        ctx.path.truncate(base_len);
                        return Err(e.into());
                    }
                }
            }
        };
        current = Some(next);
    }
    ctx.path.truncate(base_len);
    let perspective = current.unwrap();
    Ok(perspective.last().and_then(|s| s.get(v)).cloned().unwrap_or(Value::None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_query_prefix;
    use crate::perspective::fixtures::{example_trace, grapevine};

    fn eq_num(v: VarId, x: f64) -> Formula {
        Formula::pred(Rel::Eq, Term::Var(v), Term::Lit(Value::Num(x)))
    }

    #[test]
    fn belief_of_b_matches_perspective_value() {
        let g = grapevine();
        let seq = example_trace(&g);
        let env = EvalEnv::new(&g.model, &g.omega, &g.registry);
        let f = Formula::believes("b", eq_num(g.ssa, 22.0 / 3.0));
        assert_eq!(evaluate(&env, &seq, &f).unwrap(), Ternary::True);
        let f = Formula::believes("b", eq_num(g.ssa, 6.0));
        assert_eq!(evaluate(&env, &seq, &f).unwrap(), Ternary::False);
    }

    #[test]
    fn nested_belief_composes_perspectives() {
        let g = grapevine();
        let seq = example_trace(&g);
        let env = EvalEnv::new(&g.model, &g.omega, &g.registry);
        // b's belief of c's belief lives in f_c(f_b(seq)), whose last shared
        // value continues c's line to 10
        let f = Formula::believes("b", Formula::believes("c", eq_num(g.ssa, 10.0)));
        assert_eq!(evaluate(&env, &seq, &f).unwrap(), Ternary::True);
        let f = Formula::believes("b", Formula::believes("c", eq_num(g.ssa, 7.0)));
        assert_eq!(evaluate(&env, &seq, &f).unwrap(), Ternary::False);
    }

    #[test]
    fn contradiction_is_false_when_determinate() {
        let g = grapevine();
        let seq = example_trace(&g);
        let env = EvalEnv::new(&g.model, &g.omega, &g.registry);
        let phi = eq_num(g.tsa, 10.0);
        let f = Formula::and(phi.clone(), Formula::not(phi));
        assert_eq!(evaluate(&env, &seq, &f).unwrap(), Ternary::False);
    }

    #[test]
    fn double_negation_is_identity() {
        let g = grapevine();
        let seq = example_trace(&g);
        let env = EvalEnv::new(&g.model, &g.omega, &g.registry);
        for f in [
            eq_num(g.tsa, 10.0),
            eq_num(g.ssa, 1.0),
            Formula::believes("c", eq_num(g.ssa, 10.0)),
        ] {
            let direct = evaluate(&env, &seq, &f).unwrap();
            let doubled = evaluate(&env, &seq, &Formula::not(Formula::not(f))).unwrap();
            assert_eq!(direct, doubled);
        }
    }

    #[test]
    fn sees_var_three_cases() {
        let g = grapevine();
        let seq = example_trace(&g);
        let env = EvalEnv::new(&g.model, &g.omega, &g.registry);
        // last state has shared value none -> undeterminable
        let f = Formula::SeesVar("b".into(), g.ssa);
        assert_eq!(evaluate(&env, &seq, &f).unwrap(), Ternary::Unknown);
        // at t=6 the lie is visible to b but not to c (different room)
        let prefix = &seq[..=6];
        assert_eq!(
            evaluate(&env, prefix, &Formula::SeesVar("b".into(), g.ssa)).unwrap(),
            Ternary::True
        );
        assert_eq!(
            evaluate(&env, prefix, &Formula::SeesVar("c".into(), g.ssa)).unwrap(),
            Ternary::False
        );
    }

    #[test]
    fn sees_formula_requires_determinacy_in_observation() {
        let g = grapevine();
        let seq = example_trace(&g);
        let env = EvalEnv::new(&g.model, &g.omega, &g.registry);
        let prefix = &seq[..=6];
        // b sees whether the shared value equals 7 at t=6; c cannot
        let inner = eq_num(g.ssa, 7.0);
        assert_eq!(
            evaluate(&env, prefix, &Formula::sees("b", inner.clone())).unwrap(),
            Ternary::True
        );
        assert_eq!(
            evaluate(&env, prefix, &Formula::sees("c", inner.clone())).unwrap(),
            Ternary::False
        );
        // knowledge combines truth with seeing
        assert_eq!(
            evaluate(&env, prefix, &Formula::knows("b", inner.clone())).unwrap(),
            Ternary::True
        );
        assert_eq!(evaluate(&env, prefix, &Formula::knows("c", inner)).unwrap(), Ternary::False);
    }

    #[test]
    fn bottom_equality_is_always_determinate() {
        let g = grapevine();
        let seq = example_trace(&g);
        let env = EvalEnv::new(&g.model, &g.omega, &g.registry);
        let is_none = Formula::pred(Rel::Eq, Term::Var(g.ssa), Term::Lit(Value::None));
        // objective last state: shared value cleared
        assert_eq!(evaluate(&env, &seq, &is_none).unwrap(), Ternary::True);
        // but b believes a concrete value, so inside b's belief it is false
        let f = Formula::believes("b", is_none);
        assert_eq!(evaluate(&env, &seq, &f).unwrap(), Ternary::False);
    }

    #[test]
    fn unknown_agent_is_an_error_not_unknown() {
        let g = grapevine();
        let seq = example_trace(&g);
        let env = EvalEnv::new(&g.model, &g.omega, &g.registry);
        let f = Formula::believes("zed", eq_num(g.ssa, 1.0));
        assert_eq!(
            evaluate(&env, &seq, &f).unwrap_err(),
            EvalError::UnknownAgent("zed".into())
        );
    }

    #[test]
    fn epi_eval_maps_ternary_to_symbols() {
        let g = grapevine();
        let seq = example_trace(&g);
        let env = EvalEnv::new(&g.model, &g.omega, &g.registry);
        let mut ctx = EvalCtx::new();
        // negated belief: b's final belief is 22/3, not 6
        let prefix = parse_query_prefix("-b[b]").unwrap();
        let inner = eq_num(g.ssa, 6.0);
        assert_eq!(epi_eval(&env, &mut ctx, &seq, &prefix, &inner).unwrap(), Ternary::True);
        // empty prefix evaluates the bare predicate on the last state
        let empty = parse_query_prefix("").unwrap();
        let tsa5 = eq_num(g.tsa, 5.0);
        assert_eq!(epi_eval(&env, &mut ctx, &seq[..=2], &empty, &tsa5).unwrap(), Ternary::True);
    }

    #[test]
    fn jp_value_reads_nested_perspectives() {
        let g = grapevine();
        let seq = example_trace(&g);
        let env = EvalEnv::new(&g.model, &g.omega, &g.registry);
        let mut ctx = EvalCtx::new();
        let p = parse_query_prefix("b[b]").unwrap();
        assert_eq!(
            jp_value(&env, &mut ctx, &seq, &p, g.ssa).unwrap(),
            Value::Num(22.0 / 3.0)
        );
        let p = parse_query_prefix("b[b] b[c]").unwrap();
        assert_eq!(jp_value(&env, &mut ctx, &seq, &p, g.ssa).unwrap(), Value::Num(10.0));
    }

    #[test]
    fn jp_value_none_when_never_shared() {
        let g = grapevine();
        let mut seq = example_trace(&g);
        for s in &mut seq {
            s.assign(g.ssa, Value::None);
            s.assign(g.sloc, Value::None);
        }
        let env = EvalEnv::new(&g.model, &g.omega, &g.registry);
        let mut ctx = EvalCtx::new();
        let p = parse_query_prefix("b[b]").unwrap();
        assert_eq!(jp_value(&env, &mut ctx, &seq, &p, g.ssa).unwrap(), Value::None);
    }

    #[test]
    fn jp_value_rejects_non_belief_prefixes() {
        let g = grapevine();
        let seq = example_trace(&g);
        let env = EvalEnv::new(&g.model, &g.omega, &g.registry);
        let mut ctx = EvalCtx::new();
        for text in ["-b[b]", "k[b]", "s[a]", ""] {
            let p = parse_query_prefix(text).unwrap();
            assert!(jp_value(&env, &mut ctx, &seq, &p, g.ssa).is_err(), "{text}");
        }
    }

    #[test]
    fn kd45_axioms_hold_on_the_trace() {
        let g = grapevine();
        let seq = example_trace(&g);
        let env = EvalEnv::new(&g.model, &g.omega, &g.registry);
        let phi = eq_num(g.ssa, 10.0);
        let psi = eq_num(g.tsa, 10.0);
        let b = |f: Formula| Formula::believes("c", f);
        // K: B φ ∧ B(φ ⇒ ψ) ⇒ B ψ
        let premise = Formula::and(b(phi.clone()), b(Formula::imply(phi.clone(), psi.clone())));
        if evaluate(&env, &seq, &premise).unwrap() == Ternary::True {
            assert_eq!(evaluate(&env, &seq, &b(psi.clone())).unwrap(), Ternary::True);
        }
        // D: B φ ⇒ ¬B¬φ
        assert_eq!(evaluate(&env, &seq, &b(phi.clone())).unwrap(), Ternary::True);
        assert_eq!(
            evaluate(&env, &seq, &Formula::not(b(Formula::not(phi.clone())))).unwrap(),
            Ternary::True
        );
        // 4: B φ ⇒ B B φ
        assert_eq!(evaluate(&env, &seq, &b(b(phi.clone()))).unwrap(), Ternary::True);
        // 5: ¬B χ ⇒ B ¬B χ
        let chi = eq_num(g.ssa, 1.0);
        assert_eq!(evaluate(&env, &seq, &Formula::not(b(chi.clone()))).unwrap(), Ternary::True);
        assert_eq!(
            evaluate(&env, &seq, &b(Formula::not(b(chi)))).unwrap(),
            Ternary::True
        );
    }
}
