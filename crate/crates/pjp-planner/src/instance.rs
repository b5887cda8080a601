//! Grounding and world dynamics.
//!
//! A [`PlanningInstance`] binds a parsed domain and problem to the reasoning
//! kernel: ground fluents become interned variables, `:rules` become the
//! processual-variable model, `:visibility` becomes per-agent observation
//! rules, and action schemas become ground actions sorted by name and
//! arguments. Applying an action advances the timestamp: variables with
//! rule coefficients are recomputed at the new timestamp, everything else
//! is copied, and the action's effects override the result. `@jp`
//! right-hand sides see the sequence extended with the evolved state, so a
//! re-shared belief is the sharing agent's belief at the new timestamp.

use std::collections::{BTreeMap, BTreeSet};

use pjp_core::formula::{parse_query_prefix, Formula, QueryPrefix, Rel, Term, Ternary};
use pjp_core::observe::{GuardAtom, ObservationModel, VisRule};
use pjp_core::predict::{rule_value, Omega, OmegaEntry, PrRegistry, PrStats};
use pjp_core::semantics::{epi_eval, evaluate_in, jp_value, EvalCtx, EvalEnv, EvalError};
use pjp_core::state::{State, Value, VarId, Vocab};
use thiserror::Error;

use crate::domain::{
    CondDecl, DomainDef, ExprDecl, FluentPattern, FluentRef, FormulaDecl, Lit, PatternArg,
    ProblemDef,
};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum BuildError {
    #[error("problem `{problem}` targets domain `{expected}`, not `{got}`")]
    DomainMismatch { problem: String, expected: String, got: String },
    #[error("object `{0}` has undeclared type `{1}`")]
    UndeclaredType(String, String),
    #[error("unknown fluent `{0}`")]
    UnknownFluent(String),
    #[error("rules {0} and {1} both match variable `{2}`")]
    DuplicateRule(String, String, String),
    #[error("rule for `{var}`: type `{type_name}` takes {expected} coefficients, got {got}")]
    BadRuleArity { var: String, type_name: String, expected: usize, got: usize },
    #[error("no predictive retrieval function registered for type `{0}`")]
    UnknownTypeName(String),
    #[error("init does not assign `{0}`")]
    MissingInit(String),
    #[error("init assigns `{0}` twice")]
    DuplicateInit(String),
    #[error("unbound parameter `{0}` in `{1}`")]
    UnboundParam(String, String),
    #[error("bad query prefix `{0}`: {1}")]
    BadPrefix(String, String),
    #[error("unknown epi result `{0}`")]
    BadEpiResult(String),
    #[error("action `{0}` grounds effects onto `{1}` twice")]
    DuplicateEffect(String, String),
}

/// A ground expression appearing in conditions and effects.
#[derive(Clone, Debug)]
pub enum Expr {
    Lit(Value),
    Var(VarId),
    Jp { prefix: QueryPrefix, var: VarId },
}

/// A ground precondition or goal conjunct.
#[derive(Clone, Debug)]
pub enum Cond {
    Cmp { rel: Rel, lhs: Expr, rhs: Expr },
    Epi { negated: bool, prefix: QueryPrefix, inner: Formula, expect: Ternary },
}

#[derive(Clone, Debug)]
pub struct GroundAction {
    pub name: String,
    pub args: Vec<String>,
    pub pre: Vec<Cond>,
    pub effects: Vec<(VarId, Expr)>,
}

impl GroundAction {
    /// Plan-file form, e.g. `(share a sa)`.
    pub fn display(&self) -> String {
        if self.args.is_empty() {
            format!("({})", self.name)
        } else {
            format!("({} {})", self.name, self.args.join(" "))
        }
    }
}

pub struct PlanningInstance {
    pub domain_name: String,
    pub problem_name: String,
    pub vocab: Vocab,
    pub model: ObservationModel,
    pub omega: Omega,
    pub registry: PrRegistry,
    pub agents: Vec<String>,
    pub actions: Vec<GroundAction>,
    pub init: State,
    pub goal: Vec<Cond>,
    pub tolerance: f64,
    /// Variables recomputed from their rule at every new timestamp.
    evolving: Vec<(VarId, String, Vec<f64>)>,
}

fn ground_name(name: &str, args: &[String]) -> String {
    if args.is_empty() {
        format!("({})", name)
    } else {
        format!("({} {})", name, args.join(" "))
    }
}

/// Enumerates bindings of `params` over objects of their types, in
/// declaration order.
fn bindings<'a>(
    params: &'a [crate::domain::TypedParam],
    by_type: &'a BTreeMap<String, Vec<String>>,
) -> Vec<BTreeMap<String, String>> {
    let mut out = vec![BTreeMap::new()];
    for p in params {
        let objects = by_type.get(&p.ty).cloned().unwrap_or_default();
        let mut next = Vec::with_capacity(out.len() * objects.len());
        for partial in &out {
            for obj in &objects {
                let mut b = partial.clone();
                b.insert(p.name.clone(), obj.clone());
                next.push(b);
            }
        }
        out = next;
    }
    out
}

fn subst_args(
    fluent: &FluentRef,
    binding: &BTreeMap<String, String>,
    context: &str,
) -> Result<Vec<String>, BuildError> {
    fluent
        .args
        .iter()
        .map(|a| {
            if a.starts_with('?') {
                binding
                    .get(a)
                    .cloned()
                    .ok_or_else(|| BuildError::UnboundParam(a.clone(), context.to_string()))
            } else {
                Ok(a.clone())
            }
        })
        .collect()
}

fn subst_prefix(template: &str, binding: &BTreeMap<String, String>) -> String {
    // longest parameter names first so `?ab` is not clobbered by `?a`
    let mut params: Vec<(&String, &String)> = binding.iter().collect();
    params.sort_by_key(|(name, _)| std::cmp::Reverse(name.len()));
    let mut out = template.to_string();
    for (name, value) in params {
        out = out.replace(name.as_str(), value);
    }
    out
}

struct Builder<'a> {
    vocab: Vocab,
    by_type: BTreeMap<String, Vec<String>>,
    declared: BTreeSet<String>,
    domain: &'a DomainDef,
}

impl<'a> Builder<'a> {
    fn lookup(&self, name: &str, args: &[String]) -> Result<VarId, BuildError> {
        let key = ground_name(name, args);
        if !self.declared.contains(&key) {
            return Err(BuildError::UnknownFluent(key));
        }
        Ok(self.vocab.lookup(&key).unwrap())
    }

    fn ground_fluent(
        &self,
        fluent: &FluentRef,
        binding: &BTreeMap<String, String>,
        context: &str,
    ) -> Result<VarId, BuildError> {
        let args = subst_args(fluent, binding, context)?;
        self.lookup(&fluent.name, &args)
    }

    fn ground_expr(
        &self,
        expr: &ExprDecl,
        binding: &BTreeMap<String, String>,
        context: &str,
    ) -> Result<Expr, BuildError> {
        match expr {
            ExprDecl::Lit(l) => Ok(Expr::Lit(self.ground_lit(l, binding, context)?)),
            ExprDecl::Fluent(f) => Ok(Expr::Var(self.ground_fluent(f, binding, context)?)),
            ExprDecl::Jp { prefix, fluent } => {
                let text = subst_prefix(prefix, binding);
                let prefix = parse_query_prefix(&text)
                    .map_err(|e| BuildError::BadPrefix(text.clone(), e.message))?;
                let var = self.ground_fluent(fluent, binding, context)?;
                Ok(Expr::Jp { prefix, var })
            }
        }
    }

    fn ground_lit(
        &self,
        lit: &Lit,
        binding: &BTreeMap<String, String>,
        context: &str,
    ) -> Result<Value, BuildError> {
        Ok(match lit {
            Lit::Num(x) => Value::Num(*x),
            Lit::None => Value::None,
            Lit::Sym(s) => {
                if s.starts_with('?') {
                    let obj = binding
                        .get(s)
                        .ok_or_else(|| BuildError::UnboundParam(s.clone(), context.to_string()))?;
                    Value::sym(obj)
                } else {
                    Value::sym(s)
                }
            }
        })
    }

    fn ground_term(
        &self,
        expr: &ExprDecl,
        binding: &BTreeMap<String, String>,
        context: &str,
    ) -> Result<Term, BuildError> {
        Ok(match self.ground_expr(expr, binding, context)? {
            Expr::Lit(v) => Term::Lit(v),
            Expr::Var(v) => Term::Var(v),
            Expr::Jp { .. } => unreachable!("parser rejects @jp in formulas"),
        })
    }

    fn ground_formula(
        &self,
        f: &FormulaDecl,
        binding: &BTreeMap<String, String>,
        context: &str,
    ) -> Result<Formula, BuildError> {
        Ok(match f {
            FormulaDecl::Cmp { rel, lhs, rhs } => Formula::pred(
                *rel,
                self.ground_term(lhs, binding, context)?,
                self.ground_term(rhs, binding, context)?,
            ),
            FormulaDecl::And(parts) => {
                let mut ground = self.ground_formula(&parts[0], binding, context)?;
                for part in &parts[1..] {
                    ground = Formula::and(ground, self.ground_formula(part, binding, context)?);
                }
                ground
            }
            FormulaDecl::Or(parts) => {
                let mut ground = self.ground_formula(&parts[0], binding, context)?;
                for part in &parts[1..] {
                    ground = Formula::or(ground, self.ground_formula(part, binding, context)?);
                }
                ground
            }
            FormulaDecl::Not(inner) => Formula::not(self.ground_formula(inner, binding, context)?),
        })
    }

    fn ground_cond(
        &self,
        cond: &CondDecl,
        binding: &BTreeMap<String, String>,
        context: &str,
    ) -> Result<Cond, BuildError> {
        Ok(match cond {
            CondDecl::Cmp { rel, lhs, rhs } => Cond::Cmp {
                rel: *rel,
                lhs: self.ground_expr(lhs, binding, context)?,
                rhs: self.ground_expr(rhs, binding, context)?,
            },
            CondDecl::Epi { negated, prefix, inner, expect } => {
                let text = subst_prefix(prefix, binding);
                let prefix = parse_query_prefix(&text)
                    .map_err(|e| BuildError::BadPrefix(text.clone(), e.message))?;
                let inner = self.ground_formula(inner, binding, context)?;
                let expect = match expect.as_str() {
                    "epi.true" => Ternary::True,
                    "epi.false" => Ternary::False,
                    "epi.unknown" => Ternary::Unknown,
                    other => return Err(BuildError::BadEpiResult(other.to_string())),
                };
                Cond::Epi { negated: *negated, prefix, inner, expect }
            }
        })
    }

    fn pattern_matches(&self, pattern: &FluentPattern, name: &str, args: &[String]) -> bool {
        if pattern.name != name || pattern.args.len() != args.len() {
            return false;
        }
        pattern.args.iter().zip(args).all(|(pa, obj)| match pa {
            PatternArg::Const(c) => c == obj,
            PatternArg::Var(tp) => self
                .by_type
                .get(&tp.ty)
                .map(|objs| objs.contains(obj))
                .unwrap_or(false),
        })
    }
}

impl PlanningInstance {
    pub fn build(
        domain: &DomainDef,
        problem: &ProblemDef,
        registry: PrRegistry,
    ) -> Result<Self, BuildError> {
        if !problem.domain.is_empty() && problem.domain != domain.name {
            return Err(BuildError::DomainMismatch {
                problem: problem.name.clone(),
                expected: domain.name.clone(),
                got: problem.domain.clone(),
            });
        }
        let mut by_type: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (obj, ty) in &problem.objects {
            if !domain.types.iter().any(|t| t == ty) {
                return Err(BuildError::UndeclaredType(obj.clone(), ty.clone()));
            }
            by_type.entry(ty.clone()).or_default().push(obj.clone());
        }

        // ground every declared function over the objects
        let mut vocab = Vocab::new();
        let mut declared = BTreeSet::new();
        let mut ground_vars: Vec<(VarId, String, Vec<String>)> = Vec::new();
        for f in &domain.functions {
            for binding in bindings(&f.params, &by_type) {
                let args: Vec<String> = f.params.iter().map(|p| binding[&p.name].clone()).collect();
                let key = ground_name(&f.name, &args);
                let id = vocab.intern(&key);
                declared.insert(key);
                ground_vars.push((id, f.name.clone(), args));
            }
        }
        let builder = Builder { vocab, by_type, declared, domain };

        // processual model: match each ground variable against the rules
        let mut omega = Omega::new();
        let mut evolving = Vec::new();
        for (id, name, args) in &ground_vars {
            let mut matched: Option<&crate::domain::RuleDecl> = None;
            for rule in &domain.rules {
                if builder.pattern_matches(&rule.pattern, name, args) {
                    if let Some(first) = matched {
                        return Err(BuildError::DuplicateRule(
                            format!("{} at {}", first.type_name, first.pos),
                            format!("{} at {}", rule.type_name, rule.pos),
                            ground_name(name, args),
                        ));
                    }
                    matched = Some(rule);
                }
            }
            match matched {
                Some(rule) => {
                    if registry.get(&rule.type_name).is_none() {
                        return Err(BuildError::UnknownTypeName(rule.type_name.clone()));
                    }
                    let entry = OmegaEntry {
                        type_name: rule.type_name.clone(),
                        eta: rule.eta.clone(),
                        believed_eta: rule.believed_eta.clone(),
                    };
                    omega.insert(*id, entry).map_err(|e| match e {
                        pjp_core::predict::PredictError::BadCoefficients { type_name, expected, got } => {
                            BuildError::BadRuleArity {
                                var: ground_name(name, args),
                                type_name,
                                expected,
                                got,
                            }
                        }
                        _ => BuildError::UnknownTypeName(rule.type_name.clone()),
                    })?;
                    if !rule.eta.is_empty() && rule.type_name != "static" {
                        evolving.push((*id, rule.type_name.clone(), rule.eta.clone()));
                    }
                }
                // variables without a rule are static
                None => omega.insert_static(*id),
            }
        }

        // observation model: agents are the objects of type `agent`
        let agents: Vec<String> = builder.by_type.get("agent").cloned().unwrap_or_default();
        let mut model = ObservationModel::new();
        for agent in &agents {
            let mut binding = BTreeMap::new();
            binding.insert("?i".to_string(), agent.clone());
            let presence = builder.ground_fluent(&domain.presence, &binding, "presence")?;
            let agent_id = model.add_agent(agent, presence);
            for vis in &domain.visibility {
                let pattern_params: Vec<crate::domain::TypedParam> = vis
                    .pattern
                    .args
                    .iter()
                    .filter_map(|a| match a {
                        PatternArg::Var(tp) => Some(tp.clone()),
                        PatternArg::Const(_) => None,
                    })
                    .collect();
                for mut b in bindings(&pattern_params, &builder.by_type) {
                    b.insert("?i".to_string(), agent.clone());
                    let args: Vec<String> = vis
                        .pattern
                        .args
                        .iter()
                        .map(|a| match a {
                            PatternArg::Var(tp) => b[&tp.name].clone(),
                            PatternArg::Const(c) => c.clone(),
                        })
                        .collect();
                    let target = builder.lookup(&vis.pattern.name, &args)?;
                    let mut guard = Vec::new();
                    for (lhs, rhs) in &vis.guard {
                        let lhs = builder.ground_fluent(lhs, &b, "visibility guard")?;
                        let atom = match builder.ground_expr(rhs, &b, "visibility guard")? {
                            Expr::Var(v) => GuardAtom::eq_var(lhs, v),
                            Expr::Lit(v) => GuardAtom::eq_lit(lhs, v),
                            Expr::Jp { .. } => unreachable!("parser rejects @jp in guards"),
                        };
                        guard.push(atom);
                    }
                    model.add_rule(agent_id, VisRule { target, guard });
                }
            }
        }

        // ground actions, ordered by name then arguments
        let mut actions = Vec::new();
        for schema in &domain.actions {
            for binding in bindings(&schema.params, &builder.by_type) {
                let args: Vec<String> =
                    schema.params.iter().map(|p| binding[&p.name].clone()).collect();
                let context = format!("action {}", schema.name);
                let mut pre = Vec::new();
                for cond in &schema.precondition {
                    pre.push(builder.ground_cond(cond, &binding, &context)?);
                }
                let mut effects: Vec<(VarId, Expr)> = Vec::new();
                for effect in &schema.effects {
                    let var = builder.ground_fluent(&effect.fluent, &binding, &context)?;
                    if effects.iter().any(|(v, _)| *v == var) {
                        return Err(BuildError::DuplicateEffect(
                            schema.name.clone(),
                            builder.vocab.name(var).to_string(),
                        ));
                    }
                    let value = builder.ground_expr(&effect.value, &binding, &context)?;
                    effects.push((var, value));
                }
                actions.push(GroundAction { name: schema.name.clone(), args, pre, effects });
            }
        }
        actions.sort_by(|a, b| a.name.cmp(&b.name).then_with(|| a.args.cmp(&b.args)));

        // complete init
        let mut init = State::new();
        let empty = BTreeMap::new();
        for (fluent, value) in &problem.init {
            let var = builder.ground_fluent(fluent, &empty, "init")?;
            if init.contains(var) {
                return Err(BuildError::DuplicateInit(builder.vocab.name(var).to_string()));
            }
            init.assign(var, builder.ground_lit(value, &empty, "init")?);
        }
        for (id, name, args) in &ground_vars {
            if !init.contains(*id) {
                return Err(BuildError::MissingInit(ground_name(name, args)));
            }
        }

        let mut goal = Vec::new();
        for cond in &problem.goal {
            goal.push(builder.ground_cond(cond, &empty, "goal")?);
        }

        Ok(PlanningInstance {
            domain_name: domain.name.clone(),
            problem_name: problem.name.clone(),
            vocab: builder.vocab,
            model,
            omega,
            registry,
            agents,
            actions,
            init,
            goal,
            tolerance: problem.tolerance.unwrap_or(pjp_core::VALUE_EPSILON),
            evolving,
        })
    }

    pub fn eval_env(&self) -> EvalEnv<'_> {
        EvalEnv::new(&self.model, &self.omega, &self.registry).with_tolerance(self.tolerance)
    }

    /// Resolves an expression against the last state of `seq`.
    fn resolve_term(
        &self,
        env: &EvalEnv,
        ctx: &mut EvalCtx,
        seq: &[State],
        expr: &Expr,
    ) -> Result<Term, EvalError> {
        Ok(match expr {
            Expr::Lit(v) => Term::Lit(v.clone()),
            Expr::Var(v) => Term::Var(*v),
            Expr::Jp { prefix, var } => Term::Lit(jp_value(env, ctx, seq, prefix, *var)?),
        })
    }

    /// Ternary value of one condition on `seq`.
    pub fn cond_value(
        &self,
        env: &EvalEnv,
        ctx: &mut EvalCtx,
        seq: &[State],
        cond: &Cond,
    ) -> Result<Ternary, EvalError> {
        match cond {
            Cond::Cmp { rel, lhs, rhs } => {
                let lhs = self.resolve_term(env, ctx, seq, lhs)?;
                let rhs = self.resolve_term(env, ctx, seq, rhs)?;
                let f = Formula::pred(*rel, lhs, rhs);
                evaluate_in(env, ctx, seq, &f)
            }
            Cond::Epi { negated, prefix, inner, expect } => {
                let got = epi_eval(env, ctx, seq, prefix, inner)?;
                Ok(((got == *expect) != *negated).into())
            }
        }
    }

    /// All conjuncts evaluate to true.
    pub fn conds_hold(
        &self,
        env: &EvalEnv,
        ctx: &mut EvalCtx,
        seq: &[State],
        conds: &[Cond],
    ) -> Result<bool, EvalError> {
        for cond in conds {
            if self.cond_value(env, ctx, seq, cond)? != Ternary::True {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn goal_holds(&self, ctx: &mut EvalCtx, seq: &[State]) -> Result<bool, EvalError> {
        let env = self.eval_env();
        self.conds_hold(&env, ctx, seq, &self.goal)
    }

    /// Indices into [`PlanningInstance::actions`] whose preconditions hold
    /// on `seq`, in the deterministic (name, args) order.
    pub fn applicable_actions(&self, seq: &[State], stats: &mut PrStats) -> Result<Vec<usize>, EvalError> {
        let env = self.eval_env();
        let mut ctx = EvalCtx::new();
        let mut out = Vec::new();
        for (i, action) in self.actions.iter().enumerate() {
            if self.conds_hold(&env, &mut ctx, seq, &action.pre)? {
                out.push(i);
            }
        }
        merge_stats(stats, &ctx.stats);
        Ok(out)
    }

    /// The frame update at timestamp `t_new`: rule-driven variables are
    /// recomputed, everything else is copied from the previous state.
    pub fn evolve(&self, last: &State, t_new: i64) -> State {
        let mut out = last.clone();
        for (v, ty, eta) in &self.evolving {
            if let Some(x) = rule_value(ty, eta, t_new) {
                out.assign(*v, Value::Num(x));
            }
        }
        out
    }

    /// The successor state for `action`, given the evolved state and the
    /// extended sequence (for `@jp` effects). `extended` must be
    /// `seq + [evolved]`.
    pub fn effect_state(
        &self,
        ctx: &mut EvalCtx,
        evolved: &State,
        extended: &[State],
        action: &GroundAction,
    ) -> Result<State, EvalError> {
        let env = self.eval_env();
        let mut out = evolved.clone();
        for (var, expr) in &action.effects {
            let value = match expr {
                Expr::Lit(v) => v.clone(),
                Expr::Var(src) => evolved.get(*src).cloned().unwrap_or(Value::None),
                Expr::Jp { prefix, var } => jp_value(&env, ctx, extended, prefix, *var)?,
            };
            out.assign(*var, value);
        }
        Ok(out)
    }

    /// Applies one action to the sequence, checking applicability.
    pub fn apply(&self, seq: &[State], action_idx: usize, stats: &mut PrStats) -> Result<Vec<State>, ApplyError> {
        let env = self.eval_env();
        let action = &self.actions[action_idx];
        let mut ctx = EvalCtx::new();
        if !self
            .conds_hold(&env, &mut ctx, seq, &action.pre)
            .map_err(ApplyError::Eval)?
        {
            return Err(ApplyError::NotApplicable(action.display()));
        }
        merge_stats(stats, &ctx.stats);
        let evolved = self.evolve(seq.last().expect("non-empty sequence"), seq.len() as i64);
        let mut extended = seq.to_vec();
        extended.push(evolved.clone());
        let mut effect_ctx = EvalCtx::new();
        let new_state = self
            .effect_state(&mut effect_ctx, &evolved, &extended, action)
            .map_err(ApplyError::Eval)?;
        merge_stats(stats, &effect_ctx.stats);
        *extended.last_mut().unwrap() = new_state;
        Ok(extended)
    }

    /// Finds a ground action by its plan-file display form.
    pub fn action_index(&self, name: &str, args: &[String]) -> Option<usize> {
        self.actions.iter().position(|a| a.name == name && a.args == args)
    }

    pub fn var(&self, ground: &str) -> Option<VarId> {
        self.vocab.lookup(ground)
    }
}

#[derive(Debug, Error)]
pub enum ApplyError {
    #[error("action {0} is not applicable")]
    NotApplicable(String),
    #[error("{0}")]
    Eval(EvalError),
}

pub fn merge_stats(into: &mut PrStats, from: &PrStats) {
    into.pr_calls += from.pr_calls;
    into.genuine_fits += from.genuine_fits;
    into.perspective_calls += from.perspective_calls;
}
