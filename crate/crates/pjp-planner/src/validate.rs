//! Plan validation and perspective tracing.

use pjp_core::formula::{prefix_to_string, QueryPrefix, Ternary};
use pjp_core::perspective::apply_chain;
use pjp_core::predict::PrStats;
use pjp_core::semantics::{jp_value, EvalCtx};
use pjp_core::state::{bottom_state, override_seq, Value, VarId};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::PlanningInstance;
use crate::search::Plan;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum PlanReadError {
    #[error("step {index}: `{text}` is not a known ground action")]
    UnknownAction { index: usize, text: String },
    #[error("step {index}: malformed action `{text}`")]
    Malformed { index: usize, text: String },
}

/// Parses a plan file: one `(name arg1 arg2)` per line; blank lines and
/// `;` comments are ignored.
pub fn parse_plan_text(text: &str) -> Result<Vec<(String, Vec<String>)>, PlanReadError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split(';').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let inner = line
            .strip_prefix('(')
            .and_then(|s| s.strip_suffix(')'))
            .ok_or_else(|| PlanReadError::Malformed { index: i, text: line.to_string() })?;
        let mut parts = inner.split_whitespace().map(str::to_string);
        let name = parts
            .next()
            .ok_or_else(|| PlanReadError::Malformed { index: i, text: line.to_string() })?;
        out.push((name, parts.collect()));
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepReport {
    pub index: usize,
    pub action: String,
    pub applicable: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QueryReport {
    pub query: String,
    pub value: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ValidationReport {
    pub steps: Vec<StepReport>,
    /// First inapplicable or unknown step, if any.
    pub failed_step: Option<usize>,
    /// Ternary goal value on the terminal sequence (absent when the plan
    /// broke down earlier).
    pub goal: Option<String>,
    pub goal_holds: bool,
    pub queries: Vec<QueryReport>,
    pub plan_length: usize,
}

/// Checks a plan step by step, evaluates the goal on the terminal sequence
/// and answers belief queries on it.
pub fn validate_plan(
    instance: &PlanningInstance,
    plan: &[(String, Vec<String>)],
    queries: &[(QueryPrefix, VarId)],
    stats: &mut PrStats,
) -> ValidationReport {
    let mut report = ValidationReport {
        steps: Vec::new(),
        failed_step: None,
        goal: None,
        goal_holds: false,
        queries: Vec::new(),
        plan_length: plan.len(),
    };
    let mut seq = vec![instance.init.clone()];
    for (i, (name, args)) in plan.iter().enumerate() {
        let display = if args.is_empty() {
            format!("({})", name)
        } else {
            format!("({} {})", name, args.join(" "))
        };
        let Some(idx) = instance.action_index(name, args) else {
            report.steps.push(StepReport { index: i, action: display, applicable: false });
            report.failed_step = Some(i);
            return report;
        };
        match instance.apply(&seq, idx, stats) {
            Ok(next) => {
                report.steps.push(StepReport { index: i, action: display, applicable: true });
                seq = next;
            }
            Err(_) => {
                report.steps.push(StepReport { index: i, action: display, applicable: false });
                report.failed_step = Some(i);
                return report;
            }
        }
    }
    let env = instance.eval_env();
    let mut ctx = EvalCtx::new();
    let mut goal = Ternary::True;
    for cond in &instance.goal {
        match instance.cond_value(&env, &mut ctx, &seq, cond) {
            Ok(t) => goal = goal.min(t),
            Err(_) => {
                goal = goal.min(Ternary::Unknown);
            }
        }
    }
    report.goal = Some(goal.to_string());
    report.goal_holds = goal.is_true();
    for (prefix, var) in queries {
        let value = match jp_value(&env, &mut ctx, &seq, prefix, *var) {
            Ok(Value::None) => "jp.none".to_string(),
            Ok(v) => v.to_string(),
            Err(e) => format!("error: {e}"),
        };
        report.queries.push(QueryReport { query: prefix_to_string(prefix), value });
    }
    crate::instance::merge_stats(stats, &ctx.stats);
    report
}

/// A row source for the trace table: either an agent's raw observation of a
/// variable, or the variable inside a (nested) belief perspective.
#[derive(Clone, Debug, PartialEq)]
pub enum TraceQuery {
    Observation { agent: String, var: VarId, label: String },
    Perspective { prefix: QueryPrefix, var: VarId, label: String },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceTable {
    /// One action label per timestamp; index 0 is empty (the initial state).
    pub actions: Vec<String>,
    pub rows: Vec<TraceRow>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceRow {
    pub label: String,
    /// Rendered values; absent observations and `none` render as `-`.
    pub cells: Vec<String>,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("{0}")]
    Plan(#[from] PlanReadError),
    #[error("step {0} is not applicable")]
    Inapplicable(usize),
    #[error("{0}")]
    Eval(#[from] pjp_core::semantics::EvalError),
}

fn render(value: Option<&Value>) -> String {
    match value {
        None | Some(Value::None) => "-".to_string(),
        Some(v) => v.to_string(),
    }
}

/// Replays the plan and tabulates each query across all timestamps.
pub fn trace(
    instance: &PlanningInstance,
    plan: &[(String, Vec<String>)],
    queries: &[TraceQuery],
    stats: &mut PrStats,
) -> Result<TraceTable, TraceError> {
    let mut seq = vec![instance.init.clone()];
    let mut actions = vec![String::new()];
    for (i, (name, args)) in plan.iter().enumerate() {
        let idx = instance
            .action_index(name, args)
            .ok_or(TraceError::Inapplicable(i))?;
        seq = instance.apply(&seq, idx, stats).map_err(|_| TraceError::Inapplicable(i))?;
        actions.push(instance.actions[idx].display());
    }
    let mut rows = Vec::new();
    for q in queries {
        match q {
            TraceQuery::Observation { agent, var, label } => {
                let agent = instance.model.agent_by_name(agent).map_err(pjp_core::semantics::EvalError::from)?;
                let obs = instance.model.observe_seq(agent, &seq);
                let cells = obs.iter().map(|s| render(s.get(*var))).collect();
                rows.push(TraceRow { label: label.clone(), cells });
            }
            TraceQuery::Perspective { prefix, var, label } => {
                // B_x B_y ... perspectives: apply f_x first, then f_y
                let mut chain = Vec::new();
                for item in prefix {
                    let id = instance
                        .model
                        .agent_by_name(&item.agent)
                        .map_err(pjp_core::semantics::EvalError::from)?;
                    chain.push(id);
                }
                let vars = instance.omega.vars();
                let complete = override_seq(&bottom_state(&vars), &seq);
                let p = apply_chain(&instance.model, &instance.omega, &instance.registry, &chain, &complete, stats)
                    .map_err(pjp_core::semantics::EvalError::from)?;
                let cells = p.iter().map(|s| render(s.get(*var))).collect();
                rows.push(TraceRow { label: label.clone(), cells });
            }
        }
    }
    Ok(TraceTable { actions, rows })
}

/// Renders the table as CSV: a timestamp header, an action row, then one
/// row per query.
pub fn trace_to_csv(table: &TraceTable) -> String {
    let mut out = String::new();
    out.push('t');
    for t in 0..table.actions.len() {
        out.push(',');
        out.push_str(&t.to_string());
    }
    out.push('\n');
    out.push_str("action");
    for a in &table.actions {
        out.push(',');
        out.push_str(a);
    }
    out.push('\n');
    for row in &table.rows {
        out.push_str(&row.label);
        for cell in &row.cells {
            out.push(',');
            out.push_str(cell);
        }
        out.push('\n');
    }
    out
}

/// Converts a solved plan into the replayable text form.
pub fn plan_to_text(plan: &Plan) -> String {
    let mut out = String::new();
    for step in &plan.steps {
        out.push_str(step);
        out.push('\n');
    }
    out
}
