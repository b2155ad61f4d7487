//! Randomized simulation under a uniform random-pair scheduler, with
//! scripted snipe adversaries and per-agent instrumentation.

mod jsonl;
mod ledger;
mod monte;
mod run;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use jsonl::write_jsonl;
pub use ledger::{
    check_min_invariant, check_mod_invariant, meta_level, mod_diagnostics, AgentLedger, AgentState,
    InvariantViolation, LedgerEvent, ModDiagnostics,
};
pub use monte::{monte_carlo, InputSummary};
pub use run::{
    replay, run, run_instrumented, RunOptions, RunReport, RunVerdict, SkippedSnipe, TimedEvent,
};

use crate::model::ModelError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("input configuration is empty")]
    EmptyInput,
    #[error("window {window} exceeds the step budget {max_steps}")]
    WindowTooLarge { window: u64, max_steps: u64 },
    #[error("protocol states carry no level/vector metadata")]
    NotAModProtocol,
    #[error("at least one trial is required")]
    NoTrials,
    #[error("bad snipe order `{0}`")]
    BadSnipeOrder(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Uniform random unordered pair of live agents, seeded ChaCha8.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scheduler {
    pub seed: u64,
}

impl Scheduler {
    pub fn new(seed: u64) -> Self {
        Scheduler { seed }
    }
}

/// Which agent a snipe removes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// A uniformly random live agent.
    Random,
    /// The lowest-numbered agent in this state.
    ByState(String),
    /// The lowest-numbered agent among the populated states of highest
    /// meta level; ties go to the smallest state id.
    MaxMetaLevel,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnipeOrder {
    pub at_step: u64,
    pub target: Target,
}

/// Scripted snipes, fired at the start of their step while budget lasts.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Adversary {
    pub schedule: Vec<SnipeOrder>,
    pub budget: usize,
}

impl Adversary {
    pub fn none() -> Self {
        Adversary::default()
    }

    /// Budget equal to the schedule length.
    pub fn scripted(schedule: Vec<SnipeOrder>) -> Self {
        Adversary {
            budget: schedule.len(),
            schedule,
        }
    }

    pub fn at(step: u64, target: Target) -> SnipeOrder {
        SnipeOrder {
            at_step: step,
            target,
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Random => f.write_str("random"),
            Target::ByState(id) => write!(f, "state:{id}"),
            Target::MaxMetaLevel => f.write_str("max-level"),
        }
    }
}

impl FromStr for Target {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(Target::Random),
            "max-level" => Ok(Target::MaxMetaLevel),
            _ => s
                .strip_prefix("state:")
                .filter(|id| !id.is_empty())
                .map(|id| Target::ByState(id.to_owned()))
                .ok_or_else(|| SimError::BadSnipeOrder(s.to_owned())),
        }
    }
}

impl fmt::Display for SnipeOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step={},target={}", self.at_step, self.target)
    }
}

/// `step=<n>,target=<random|max-level|state:ID>`. The state id may itself
/// contain commas, so `target` must come last.
impl FromStr for SnipeOrder {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SimError::BadSnipeOrder(s.to_owned());
        let rest = s.trim().strip_prefix("step=").ok_or_else(bad)?;
        let (step, target) = rest.split_once(",target=").ok_or_else(bad)?;
        Ok(SnipeOrder {
            at_step: step.trim().parse().map_err(|_| bad())?,
            target: target.parse().map_err(|_| bad())?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snipe_order_syntax() {
        let o: SnipeOrder = "step=50,target=max-level".parse().unwrap();
        assert_eq!(o, Adversary::at(50, Target::MaxMetaLevel));
        let o: SnipeOrder = "step=0,target=state:(1,1,[1,0,0,0])".parse().unwrap();
        assert_eq!(o.target, Target::ByState("(1,1,[1,0,0,0])".into()));
        assert_eq!(o.to_string().parse::<SnipeOrder>().unwrap(), o);
        for bad in [
            "50,max-level",
            "step=x,target=random",
            "step=1,target=state:",
            "step=1,target=foo",
        ] {
            assert!(bad.parse::<SnipeOrder>().is_err(), "{bad}");
        }
    }
}
