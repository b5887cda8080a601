//! Command-line interface.
//!
//! Exit codes: 0 success (plan found / goal holds / properties pass),
//! 1 no plan or failed goal/properties, 2 input or configuration errors,
//! 3 resource limits hit.

use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use pjp_core::formula::{parse_query_prefix, PrefixOp, QueryPrefix};
use pjp_core::observe::check_observation_properties;
use pjp_core::predict::{
    check_pr_consistency, check_pr_reconstructive, PrRegistry, PrStats,
};
use pjp_core::state::VarId;

use crate::domain::{parse_domain, parse_problem, DomainDef, ProblemDef};
use crate::instance::PlanningInstance;
use crate::report::{metrics_row, solve_status, SolveDocument};
use crate::search::{bfs_solve, LimitKind, Limits};
use crate::validate::{parse_plan_text, plan_to_text, trace, trace_to_csv, validate_plan, TraceQuery};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_LIMIT: i32 = 3;

#[derive(Parser)]
#[command(
    name = "pjp",
    about = "Epistemic planning over predictive justified perspectives",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Rebind a processual type to another prediction function,
    /// e.g. --pr-override 1st_poly=linear_reg
    #[arg(long = "pr-override", value_name = "TYPE=FN")]
    pr_override: Vec<String>,
    /// Seed for stochastic prediction initialization (defaults to the
    /// PJP_SEED environment variable, then 0)
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Find a shortest plan with breadth-first search
    Solve {
        domain: PathBuf,
        problem: PathBuf,
        /// Timeout in seconds
        #[arg(long, default_value_t = 600.0)]
        timeout: f64,
        /// Memory budget in bytes (default 8 GiB)
        #[arg(long, default_value_t = 8 * 1024 * 1024 * 1024)]
        memory: u64,
        /// Stop expanding below this depth
        #[arg(long)]
        max_depth: Option<usize>,
        /// Write the JSON result document here
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the plan in replayable text form
        #[arg(long)]
        plan_out: Option<PathBuf>,
        /// Print a metrics row
        #[arg(long)]
        metrics: bool,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Check a plan step by step and evaluate the goal on its terminal
    /// sequence
    Validate {
        domain: PathBuf,
        problem: PathBuf,
        plan: PathBuf,
        /// Belief queries evaluated on the terminal sequence,
        /// e.g. --query "b[b]:(shared sa)"
        #[arg(long = "query")]
        queries: Vec<String>,
        /// Write the JSON report here
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Replay a plan and print per-timestamp observation and belief rows
    /// as CSV
    Trace {
        domain: PathBuf,
        problem: PathBuf,
        plan: PathBuf,
        /// Rows: "o[b]:(shared sa)" for observations,
        /// "b[a] b[b]:(shared sa)" for nested beliefs
        #[arg(long = "query")]
        queries: Vec<String>,
        /// Write the CSV here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Check observation-function and predictive-retrieval properties on
    /// randomized samples
    CheckModel {
        domain: PathBuf,
        /// Problem supplying objects and the initial state; without it two
        /// objects per type are synthesized
        #[arg(long)]
        problem: Option<PathBuf>,
        /// Number of random states / sequences / worlds per check
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[command(flatten)]
        common: CommonOpts,
    },
}

fn fail_usage(msg: impl std::fmt::Display) -> i32 {
    eprintln!("error: {msg}");
    EXIT_USAGE
}

fn read_file(path: &Path) -> Result<String, i32> {
    std::fs::read_to_string(path)
        .map_err(|e| fail_usage(format_args!("cannot read {}: {e}", path.display())))
}

fn registry_from(common: &CommonOpts) -> Result<PrRegistry, i32> {
    let seed = common
        .seed
        .or_else(|| std::env::var("PJP_SEED").ok().and_then(|s| s.parse().ok()))
        .unwrap_or(0);
    let mut registry = PrRegistry::standard(seed);
    for spec in &common.pr_override {
        let (ty, f) = spec
            .split_once('=')
            .ok_or_else(|| fail_usage(format_args!("--pr-override takes TYPE=FN, got `{spec}`")))?;
        registry
            .rebind(ty.trim(), f.trim())
            .map_err(|e| fail_usage(e))?;
    }
    Ok(registry)
}

fn load_defs(domain: &Path, problem: &Path) -> Result<(DomainDef, ProblemDef), i32> {
    let d = parse_domain(&read_file(domain)?)
        .map_err(|e| fail_usage(format_args!("{}: {e}", domain.display())))?;
    let p = parse_problem(&read_file(problem)?)
        .map_err(|e| fail_usage(format_args!("{}: {e}", problem.display())))?;
    Ok((d, p))
}

fn load_instance(domain: &Path, problem: &Path, common: &CommonOpts) -> Result<PlanningInstance, i32> {
    let (d, p) = load_defs(domain, problem)?;
    let registry = registry_from(common)?;
    PlanningInstance::build(&d, &p, registry).map_err(|e| fail_usage(e))
}

fn write_out(path: &Path, content: &str) -> Result<(), i32> {
    std::fs::write(path, content)
        .map_err(|e| fail_usage(format_args!("cannot write {}: {e}", path.display())))
}

fn parse_jp_query(instance: &PlanningInstance, text: &str) -> Result<(QueryPrefix, VarId), i32> {
    let (head, var) = text
        .split_once(':')
        .ok_or_else(|| fail_usage(format_args!("query `{text}` must be PREFIX:(fluent ...)")))?;
    let prefix = parse_query_prefix(head.trim()).map_err(|e| fail_usage(e))?;
    if prefix.is_empty() || prefix.iter().any(|i| i.negated || i.op != PrefixOp::Believes) {
        return Err(fail_usage(format_args!(
            "query `{text}` must use a positive belief chain"
        )));
    }
    let var = instance
        .var(var.trim())
        .ok_or_else(|| fail_usage(format_args!("unknown variable `{}`", var.trim())))?;
    Ok((prefix, var))
}

fn parse_trace_query(instance: &PlanningInstance, text: &str) -> Result<TraceQuery, i32> {
    let (head, var_text) = text
        .split_once(':')
        .ok_or_else(|| fail_usage(format_args!("query `{text}` must be PREFIX:(fluent ...)")))?;
    let head = head.trim();
    let var = instance
        .var(var_text.trim())
        .ok_or_else(|| fail_usage(format_args!("unknown variable `{}`", var_text.trim())))?;
    if let Some(agent) = head.strip_prefix("o[").and_then(|s| s.strip_suffix(']')) {
        instance
            .model
            .agent_by_name(agent.trim())
            .map_err(|e| fail_usage(e))?;
        return Ok(TraceQuery::Observation {
            agent: agent.trim().to_string(),
            var,
            label: text.to_string(),
        });
    }
    let prefix = parse_query_prefix(head).map_err(|e| fail_usage(e))?;
    if prefix.is_empty() || prefix.iter().any(|i| i.negated || i.op != PrefixOp::Believes) {
        return Err(fail_usage(format_args!(
            "trace query `{text}` must be o[agent] or a positive belief chain"
        )));
    }
    for item in &prefix {
        instance.model.agent_by_name(&item.agent).map_err(|e| fail_usage(e))?;
    }
    Ok(TraceQuery::Perspective { prefix, var, label: text.to_string() })
}

pub fn run() -> i32 {
    let cli = Cli::parse();
    match cli.command {
        Command::Solve {
            domain,
            problem,
            timeout,
            memory,
            max_depth,
            out,
            plan_out,
            metrics: print_metrics,
            common,
        } => {
            let instance = match load_instance(&domain, &problem, &common) {
                Ok(i) => i,
                Err(code) => return code,
            };
            let limits = Limits {
                timeout: Duration::from_secs_f64(timeout),
                memory_bytes: memory,
                max_depth,
            };
            let (plan, metrics) = bfs_solve(&instance, &limits);
            let status = solve_status(&plan, &metrics);
            let doc = SolveDocument {
                status: status.to_string(),
                domain: instance.domain_name.clone(),
                problem: instance.problem_name.clone(),
                plan: plan.as_ref().map(|p| p.steps.clone()).unwrap_or_default(),
                metrics,
            };
            if print_metrics {
                println!("{}", metrics_row(&instance.problem_name, &metrics));
            }
            match &plan {
                Some(p) => {
                    println!("status: solved ({} steps)", p.len());
                    for step in &p.steps {
                        println!("  {step}");
                    }
                }
                None => println!("status: {status}"),
            }
            if let Some(path) = out {
                let json = serde_json::to_string_pretty(&doc).expect("serializable document");
                if write_out(&path, &json).is_err() {
                    return EXIT_USAGE;
                }
            }
            if let (Some(path), Some(p)) = (plan_out, &plan) {
                if write_out(&path, &plan_to_text(p)).is_err() {
                    return EXIT_USAGE;
                }
            }
            match (plan, metrics.limit) {
                (Some(_), _) => EXIT_OK,
                (None, Some(LimitKind::Timeout) | Some(LimitKind::Memory)) => EXIT_LIMIT,
                (None, _) => EXIT_NO,
            }
        }
        Command::Validate { domain, problem, plan, queries, out, common } => {
            let instance = match load_instance(&domain, &problem, &common) {
                Ok(i) => i,
                Err(code) => return code,
            };
            let plan_text = match read_file(&plan) {
                Ok(t) => t,
                Err(code) => return code,
            };
            let steps = match parse_plan_text(&plan_text) {
                Ok(s) => s,
                Err(e) => return fail_usage(e),
            };
            let mut parsed_queries = Vec::new();
            for q in &queries {
                match parse_jp_query(&instance, q) {
                    Ok(pq) => parsed_queries.push(pq),
                    Err(code) => return code,
                }
            }
            let mut stats = PrStats::default();
            let report = validate_plan(&instance, &steps, &parsed_queries, &mut stats);
            for step in &report.steps {
                println!(
                    "step {:>2} {} {}",
                    step.index,
                    if step.applicable { "ok  " } else { "FAIL" },
                    step.action
                );
            }
            if let Some(i) = report.failed_step {
                println!("plan fails at step {i}");
            } else {
                println!(
                    "goal: {} ({})",
                    report.goal.as_deref().unwrap_or("-"),
                    if report.goal_holds { "holds" } else { "does not hold" }
                );
            }
            for q in &report.queries {
                println!("{} = {}", q.query, q.value);
            }
            if let Some(path) = out {
                let json = serde_json::to_string_pretty(&report).expect("serializable report");
                if write_out(&path, &json).is_err() {
                    return EXIT_USAGE;
                }
            }
            if report.failed_step.is_none() && report.goal_holds {
                EXIT_OK
            } else {
                EXIT_NO
            }
        }
        Command::Trace { domain, problem, plan, queries, out, common } => {
            let instance = match load_instance(&domain, &problem, &common) {
                Ok(i) => i,
                Err(code) => return code,
            };
            let plan_text = match read_file(&plan) {
                Ok(t) => t,
                Err(code) => return code,
            };
            let steps = match parse_plan_text(&plan_text) {
                Ok(s) => s,
                Err(e) => return fail_usage(e),
            };
            let mut parsed = Vec::new();
            for q in &queries {
                match parse_trace_query(&instance, q) {
                    Ok(tq) => parsed.push(tq),
                    Err(code) => return code,
                }
            }
            let mut stats = PrStats::default();
            let table = match trace(&instance, &steps, &parsed, &mut stats) {
                Ok(t) => t,
                Err(e) => return fail_usage(e),
            };
            let csv = trace_to_csv(&table);
            match out {
                Some(path) => {
                    if write_out(&path, &csv).is_err() {
                        return EXIT_USAGE;
                    }
                }
                None => print!("{csv}"),
            }
            EXIT_OK
        }
        Command::CheckModel { domain, problem, samples, common } => {
            let d = match read_file(&domain).and_then(|src| {
                parse_domain(&src).map_err(|e| fail_usage(format_args!("{}: {e}", domain.display())))
            }) {
                Ok(d) => d,
                Err(code) => return code,
            };
            let p = match problem {
                Some(path) => match read_file(&path).and_then(|src| {
                    parse_problem(&src)
                        .map_err(|e| fail_usage(format_args!("{}: {e}", path.display())))
                }) {
                    Ok(p) => p,
                    Err(code) => return code,
                },
                None => synthesize_problem(&d),
            };
            let registry = match registry_from(&common) {
                Ok(r) => r,
                Err(code) => return code,
            };
            let instance = match PlanningInstance::build(&d, &p, registry) {
                Ok(i) => i,
                Err(e) => return fail_usage(e),
            };
            let seed = common.seed.unwrap_or(0);
            run_check_model(&instance, samples, seed)
        }
    }
}

/// Two objects per declared type and an all-`none` initial state, used when
/// `check-model` runs without a problem file.
fn synthesize_problem(d: &DomainDef) -> ProblemDef {
    use crate::domain::{FluentRef, Lit};
    let mut objects = Vec::new();
    for ty in &d.types {
        objects.push((format!("{ty}1"), ty.clone()));
        objects.push((format!("{ty}2"), ty.clone()));
    }
    // init every ground fluent to none
    let mut init = Vec::new();
    let mut by_type: std::collections::BTreeMap<&str, Vec<&str>> = Default::default();
    for (o, t) in &objects {
        by_type.entry(t.as_str()).or_default().push(o.as_str());
    }
    for f in &d.functions {
        let mut combos: Vec<Vec<String>> = vec![Vec::new()];
        for p in &f.params {
            let objs = by_type.get(p.ty.as_str()).cloned().unwrap_or_default();
            let mut next = Vec::new();
            for c in &combos {
                for o in &objs {
                    let mut c = c.clone();
                    c.push(o.to_string());
                    next.push(c);
                }
            }
            combos = next;
        }
        for args in combos {
            init.push((FluentRef { name: f.name.clone(), args }, Lit::None));
        }
    }
    ProblemDef {
        name: format!("{}-synthetic", d.name),
        domain: d.name.clone(),
        objects,
        init,
        goal: Vec::new(),
        tolerance: None,
    }
}

fn run_check_model(instance: &PlanningInstance, samples: usize, seed: u64) -> i32 {
    let mut ok = true;

    let states = crate::harness::sample_states(instance, samples, seed);
    match check_observation_properties(&instance.model, &states) {
        Ok(report) => {
            println!(
                "observation properties on {} states: {}",
                report.states_checked,
                if report.all_hold() { "pass" } else { "FAIL" }
            );
            for v in report.violations.iter().take(5) {
                println!("  {} violates {} (witness: {:?})", v.agent, v.property, v.witness);
                ok = false;
            }
        }
        Err(e) => return fail_usage(e),
    }

    // one consistency report per type in use
    let mut types: Vec<String> = instance
        .omega
        .iter()
        .map(|(_, e)| e.type_name.clone())
        .collect();
    types.sort();
    types.dedup();
    if types.is_empty() {
        println!("no rules declared: static-only report");
    }
    let vars = [VarId(0), VarId(1)];
    for (i, ty) in types.iter().enumerate() {
        let Some(f) = instance.registry.get(ty) else {
            return fail_usage(format_args!("no prediction function for type `{ty}`"));
        };
        let seqs = crate::harness::sample_type_sequences(ty, &vars, samples, seed + i as u64);
        let report = match check_pr_consistency(f, &vars, &seqs) {
            Ok(r) => r,
            Err(e) => return fail_usage(e),
        };
        let worlds = crate::harness::sample_worlds(instance, samples.div_ceil(4), seed + 100 + i as u64);
        let omega_vars = instance.omega.vars();
        let recon = match check_pr_reconstructive(f, &omega_vars, &instance.model, &worlds) {
            Ok(r) => r,
            Err(e) => return fail_usage(e),
        };
        let preserving = report.preserving_violations.is_empty();
        let recursive = report.recursive_violations.is_empty();
        println!(
            "{ty}: preserving {} recursive {} reconstructive {} ({} sequences, {} worlds)",
            if preserving { "pass" } else { "FAIL" },
            if recursive { "pass" } else { "FAIL" },
            if recon.holds() { "yes" } else { "no" },
            report.samples_checked,
            recon.worlds_checked,
        );
        // reconstructive consistency is optional: recorded, not gating
        ok &= preserving && recursive;
    }

    if ok {
        EXIT_OK
    } else {
        EXIT_NO
    }
}
