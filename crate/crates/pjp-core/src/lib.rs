//! Epistemic reasoning over state sequences.
//!
//! The crate provides the building blocks for belief reasoning in dynamic
//! environments: partial states and state sequences ([`state`]), per-agent
//! observation models ([`observe`]), predictive retrieval functions that
//! extrapolate unobserved variables from past observations ([`predict`]),
//! justified-perspective construction ([`perspective`]), and a three-valued
//! evaluator for a modal language of seeing, knowing and believing
//! ([`semantics`]).
//!
//! The crate is `no_std` (with `alloc`) so the reasoning kernel can be
//! embedded anywhere; IO, file formats and search live in companion crates.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod formula;
pub mod observe;
pub mod perspective;
pub mod predict;
pub mod semantics;
pub mod state;

pub use formula::{Formula, Predicate, PrefixItem, PrefixOp, QueryPrefix, Rel, Term, Ternary};
pub use observe::{AgentId, ObservationModel, ObserveError};
pub use predict::{FitDiagnostics, Omega, PrFunction, PrRegistry, PrStats};
pub use state::{State, Value, VarId, Vocab, VALUE_EPSILON};
