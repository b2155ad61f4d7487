//! Exhaustive verification on small populations.
//!
//! Reachable configurations are enumerated explicitly. Fair executions on a
//! finite reachability set end in a bottom SCC of the step graph, so
//! convergence questions reduce to properties of bottom SCCs.

mod check;
mod graph;
mod lower;
mod oracle;

pub use check::{
    check_computes, check_robust, check_robust_all, stable_consensus, CheckOptions, Stats, Status,
    Verdict, Violation, DEFAULT_NODE_LIMIT,
};
pub use graph::{tarjan, ReachGraph, Sccs};
pub use lower::{
    check_upward_invariant, confinement_status, critical_input, default_search_bound,
    enumerate_protocols, escape_transitions, rejecting_states, state_lower_bound, Confinement,
};
pub use oracle::{permissible_outputs, PredicateOracle};

use thiserror::Error;

use crate::model::ModelError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("node limit {limit} exceeded")]
    ResourceExceeded { limit: usize },
    #[error("input configuration is empty")]
    EmptyInput,
    #[error("snipe budget {j_max} must be below the population size {population}")]
    SnipeBudget { j_max: usize, population: u64 },
    #[error("protocol outputs are not all 0 or 1")]
    NotAPredicateProtocol,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("bad function descriptor `{0}`")]
    BadDescriptor(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}
