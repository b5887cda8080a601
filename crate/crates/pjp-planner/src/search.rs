//! Vanilla breadth-first forward search.
//!
//! Nodes are expanded in FIFO order with successors generated in the
//! deterministic (name, args) action order; the goal is tested on
//! generation. There is no duplicate detection: sequences over evolving
//! variables essentially never repeat, and the plain search keeps node
//! counts comparable across runs.

use std::rc::Rc;
use std::time::{Duration, Instant};

use pjp_core::predict::PrStats;
use pjp_core::semantics::EvalCtx;
use pjp_core::state::State;
use serde::{Deserialize, Serialize};

use crate::instance::{merge_stats, PlanningInstance};

#[derive(Clone, Copy, Debug)]
pub struct Limits {
    pub timeout: Duration,
    pub memory_bytes: u64,
    pub max_depth: Option<usize>,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            timeout: Duration::from_secs(600),
            memory_bytes: 8 * 1024 * 1024 * 1024,
            max_depth: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitKind {
    Timeout,
    Memory,
    Depth,
}

/// Search statistics in the usual reporting shape: generated and expanded
/// node counts, the number of genuine predictive fits (segments), average
/// perspective-construction time and total wall time.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub generated: u64,
    pub expanded: u64,
    pub segments: u64,
    pub perspectives: u64,
    pub pjp_ms_avg: f64,
    pub total_s: f64,
    pub plan_length: Option<usize>,
    pub limit: Option<LimitKind>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub steps: Vec<String>,
}

impl Plan {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

struct Node {
    state: State,
    parent: Option<Rc<Node>>,
    action_idx: Option<usize>,
    depth: usize,
}

fn materialize(node: &Rc<Node>) -> Vec<State> {
    let mut states = Vec::with_capacity(node.depth + 1);
    let mut cur: Option<&Rc<Node>> = Some(node);
    while let Some(n) = cur {
        states.push(n.state.clone());
        cur = n.parent.as_ref();
    }
    states.reverse();
    states
}

fn extract_plan(instance: &PlanningInstance, node: &Rc<Node>) -> Plan {
    let mut steps = Vec::with_capacity(node.depth);
    let mut cur: Option<&Rc<Node>> = Some(node);
    while let Some(n) = cur {
        if let Some(idx) = n.action_idx {
            steps.push(instance.actions[idx].display());
        }
        cur = n.parent.as_ref();
    }
    steps.reverse();
    Plan { steps }
}

/// Rough per-node footprint for the memory limit: the stored state plus
/// queue and bookkeeping overhead. The limit is enforced on this estimate,
/// not on the process RSS.
fn node_bytes_estimate(var_count: usize) -> u64 {
    (var_count as u64) * 64 + 160
}

/// Breadth-first search for a shortest plan reaching a goal-true sequence.
pub fn bfs_solve(instance: &PlanningInstance, limits: &Limits) -> (Option<Plan>, Metrics) {
    let start = Instant::now();
    let mut metrics = Metrics::default();
    let mut stats = PrStats::default();
    let mut eval_time = Duration::ZERO;
    let node_bytes = node_bytes_estimate(instance.vocab.len());

    let finish = |plan: Option<Plan>,
                  limit: Option<LimitKind>,
                  metrics: &mut Metrics,
                  stats: &PrStats,
                  eval_time: Duration| {
        metrics.segments = stats.genuine_fits;
        metrics.perspectives = stats.perspective_calls;
        metrics.pjp_ms_avg = if stats.perspective_calls > 0 {
            eval_time.as_secs_f64() * 1e3 / stats.perspective_calls as f64
        } else {
            0.0
        };
        metrics.total_s = start.elapsed().as_secs_f64();
        metrics.plan_length = plan.as_ref().map(|p| p.len());
        metrics.limit = limit;
        plan
    };

    let root = Rc::new(Node {
        state: instance.init.clone(),
        parent: None,
        action_idx: None,
        depth: 0,
    });
    metrics.generated = 1;

    // goal test on generation, including the root
    {
        let t0 = Instant::now();
        let mut ctx = EvalCtx::new();
        let holds = instance.goal_holds(&mut ctx, std::slice::from_ref(&root.state));
        merge_stats(&mut stats, &ctx.stats);
        eval_time += t0.elapsed();
        match holds {
            Ok(true) => {
                let plan = Some(Plan { steps: Vec::new() });
                return (finish(plan, None, &mut metrics, &stats, eval_time), metrics);
            }
            Ok(false) => {}
            Err(_) => {}
        }
    }

    let mut queue = std::collections::VecDeque::new();
    queue.push_back(root);
    let mut depth_pruned = false;

    while let Some(node) = queue.pop_front() {
        if start.elapsed() >= limits.timeout {
            return (finish(None, Some(LimitKind::Timeout), &mut metrics, &stats, eval_time), metrics);
        }
        if let Some(max) = limits.max_depth {
            if node.depth >= max {
                depth_pruned = true;
                continue;
            }
        }
        metrics.expanded += 1;
        let seq = materialize(&node);

        let t0 = Instant::now();
        let applicable = match instance.applicable_actions(&seq, &mut stats) {
            Ok(a) => a,
            Err(_) => {
                eval_time += t0.elapsed();
                continue;
            }
        };
        // the evolved state is action-independent; compute it once
        let evolved = instance.evolve(seq.last().unwrap(), seq.len() as i64);
        let mut extended = seq.clone();
        extended.push(evolved.clone());
        eval_time += t0.elapsed();

        for action_idx in applicable {
            if start.elapsed() >= limits.timeout {
                return (finish(None, Some(LimitKind::Timeout), &mut metrics, &stats, eval_time), metrics);
            }
            let t0 = Instant::now();
            let mut ctx = EvalCtx::new();
            let new_state = match instance.effect_state(
                &mut ctx,
                &evolved,
                &extended,
                &instance.actions[action_idx],
            ) {
                Ok(s) => s,
                Err(_) => {
                    eval_time += t0.elapsed();
                    continue;
                }
            };
            merge_stats(&mut stats, &ctx.stats);
            eval_time += t0.elapsed();

            let child = Rc::new(Node {
                state: new_state,
                parent: Some(Rc::clone(&node)),
                action_idx: Some(action_idx),
                depth: node.depth + 1,
            });
            metrics.generated += 1;
            if metrics.generated * node_bytes > limits.memory_bytes {
                return (finish(None, Some(LimitKind::Memory), &mut metrics, &stats, eval_time), metrics);
            }

            let t0 = Instant::now();
            *extended.last_mut().unwrap() = child.state.clone();
            let mut ctx = EvalCtx::new();
            let holds = instance.goal_holds(&mut ctx, &extended);
            merge_stats(&mut stats, &ctx.stats);
            *extended.last_mut().unwrap() = evolved.clone();
            eval_time += t0.elapsed();

            if let Ok(true) = holds {
                let plan = extract_plan(instance, &child);
                return (finish(Some(plan), None, &mut metrics, &stats, eval_time), metrics);
            }
            queue.push_back(child);
        }
    }

    let limit = if depth_pruned { Some(LimitKind::Depth) } else { None };
    (finish(None, limit, &mut metrics, &stats, eval_time), metrics)
}
