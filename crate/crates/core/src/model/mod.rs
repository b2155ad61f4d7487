//! The population-protocol execution model: states, transitions,
//! configurations, steps, snipes and consensus.

mod config;
mod json;
mod output;
mod protocol;
mod trace;

pub use config::Config;
pub use json::{
    ConfigDoc, EventDoc, ProtocolDoc, StateDoc, TraceDoc, TransitionDoc, SCHEMA_VERSION,
};
pub use output::Output;
pub(crate) use protocol::sorted_pair;
pub use protocol::{Input, Protocol, RawProtocol, Rule, StateId, StateInfo, StateIx};
pub use trace::{apply_event, Event, Trace};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("protocol has no states")]
    NoStates,
    #[error("state ids must be non-empty")]
    EmptyStateId,
    #[error("duplicate state id `{0}`")]
    DuplicateState(StateId),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("variable `{0}` has more than one initial state")]
    DuplicateVariable(String),
    #[error("unknown input variable `{0}`")]
    UnknownVariable(String),
    #[error("state `{state}` outputs {output}, which is not in the output alphabet")]
    OutputNotInAlphabet { state: StateId, output: Output },
    #[error("conflicting transitions for pair {{{}, {}}}", pre[0], pre[1])]
    ConflictingTransition { pre: [StateId; 2] },
    #[error("rule with pre {{{}, {}}} is not a transition of the protocol", pre[0], pre[1])]
    UnknownRule { pre: [StateId; 2] },
    #[error("rule with pre {{{}, {}}} is not enabled", pre[0], pre[1])]
    RuleNotEnabled { pre: [StateId; 2] },
    #[error("state #{} is not populated", .0.0)]
    StateNotPopulated(StateIx),
    #[error("empty configuration")]
    EmptyConfiguration,
    #[error("trace does not replay to its recorded final configuration")]
    TraceMismatch,
    #[error("malformed input `{0}` (expected var=count[,var=count…])")]
    BadInput(String),
    #[error("unsupported schema_version {0}")]
    SchemaVersion(u32),
    #[error("invalid JSON: {0}")]
    Json(String),
}
