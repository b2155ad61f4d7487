use std::collections::BTreeMap;

use rayon::prelude::*;
use serde_json::{json, Value};

use super::{run, Adversary, RunOptions, RunVerdict, Scheduler, SimError};
use crate::model::{Input, Output, Protocol, SCHEMA_VERSION};

/// Outcome counts for one input over all trials.
#[derive(Clone, Debug, PartialEq)]
pub struct InputSummary {
    pub input: Input,
    pub trials: usize,
    pub converged: BTreeMap<Output, usize>,
    pub no_consensus: usize,
    /// Mean step at which the reported consensus began, over converged trials.
    pub mean_steps: Option<f64>,
}

impl InputSummary {
    pub fn fraction(&self, r: &Output) -> f64 {
        self.converged.get(r).copied().unwrap_or(0) as f64 / self.trials as f64
    }

    pub fn to_json(&self) -> Value {
        let outcomes: Vec<Value> = self
            .converged
            .iter()
            .map(|(r, &n)| json!({ "output": r, "count": n, "fraction": n as f64 / self.trials as f64 }))
            .collect();
        json!({
            "schema_version": SCHEMA_VERSION,
            "input": self.input,
            "trials": self.trials,
            "converged": outcomes,
            "no_consensus": self.no_consensus,
            "mean_steps": self.mean_steps,
        })
    }
}

/// Runs `trials` simulations per input with seeds `seed_base + i`.
pub fn monte_carlo(
    p: &Protocol,
    inputs: &[Input],
    trials: usize,
    seed_base: u64,
    adv: &Adversary,
    opts: RunOptions,
) -> Result<Vec<InputSummary>, SimError> {
    if trials == 0 {
        return Err(SimError::NoTrials);
    }
    inputs
        .iter()
        .map(|a| {
            let verdicts: Vec<RunVerdict> = (0..trials as u64)
                .into_par_iter()
                .map(|i| {
                    run(p, a, Scheduler::new(seed_base.wrapping_add(i)), adv, opts)
                        .map(|r| r.verdict)
                })
                .collect::<Result<_, _>>()?;
            let mut converged = BTreeMap::new();
            let mut no_consensus = 0;
            let mut step_sum = 0u64;
            for v in verdicts {
                match v {
                    RunVerdict::ConvergedTo { output, at_step } => {
                        *converged.entry(output).or_insert(0) += 1;
                        step_sum += at_step;
                    }
                    RunVerdict::NoConsensusWithinBudget => no_consensus += 1,
                }
            }
            let hits = trials - no_consensus;
            Ok(InputSummary {
                input: a.clone(),
                trials,
                converged,
                no_consensus,
                mean_steps: (hits > 0).then(|| step_sum as f64 / hits as f64),
            })
        })
        .collect()
}
