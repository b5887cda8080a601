//! Machine-readable result documents.

use serde::{Deserialize, Serialize};

use crate::search::{LimitKind, Metrics, Plan};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveDocument {
    pub status: String,
    pub domain: String,
    pub problem: String,
    pub plan: Vec<String>,
    pub metrics: Metrics,
}

pub fn solve_status(plan: &Option<Plan>, metrics: &Metrics) -> &'static str {
    match (plan, metrics.limit) {
        (Some(_), _) => "solved",
        (None, Some(LimitKind::Timeout)) => "timeout",
        (None, Some(LimitKind::Memory)) => "memory",
        (None, Some(LimitKind::Depth)) => "depth-exhausted",
        (None, None) => "unsolvable",
    }
}

/// One Table-style metrics row: generated, segments, average perspective
/// milliseconds, total seconds, plan length.
pub fn metrics_row(problem: &str, metrics: &Metrics) -> String {
    format!(
        "{}  |gen| {}  |seg| {}  tau_p(ms) {:.2}  tau_t(s) {:.2}  |plan| {}",
        problem,
        metrics.generated,
        metrics.segments,
        metrics.pjp_ms_avg,
        metrics.total_s,
        metrics.plan_length.map(|l| l.to_string()).unwrap_or_else(|| "-".into()),
    )
}
