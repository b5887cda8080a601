//! Planning layer over the epistemic reasoning kernel: the domain/problem
//! dialect, grounding, breadth-first search, plan validation, perspective
//! tracing and the `pjp` command-line tool.

pub mod cli;
pub mod domain;
pub mod harness;
pub mod instance;
pub mod report;
pub mod search;
pub mod sexpr;
pub mod validate;
