use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::{permissible_outputs, PredicateOracle, ReachGraph, VerifyError};
use crate::model::{Config, Input, Output, Protocol, Trace, SCHEMA_VERSION};

/// Default exploration budget per input.
pub const DEFAULT_NODE_LIMIT: usize = 2_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    ResourceExceeded,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Stats {
    /// Nodes stored, summed over inputs.
    pub nodes: usize,
    /// Step-graph SCCs, summed over inputs.
    pub sccs: usize,
    /// Largest number of snipe layers in any single graph.
    pub layers: usize,
}

impl Stats {
    fn absorb(&mut self, other: Stats) {
        self.nodes += other.nodes;
        self.sccs += other.sccs;
        self.layers = self.layers.max(other.layers);
    }
}

/// A bottom SCC that breaks the requirement.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub input: Input,
    pub snipes: usize,
    /// Common output of the SCC, `None` when it mixes outputs.
    pub observed: Option<Output>,
    pub permissible: BTreeSet<Output>,
    pub bottom_scc_size: usize,
    /// In strict mode, the other output already seen in the same layer.
    pub conflicting: Option<Output>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub status: Status,
    /// Path from the input into the offending bottom SCC. Present iff Fail.
    pub counterexample: Option<Trace>,
    pub violation: Option<Violation>,
    pub details: String,
    pub stats: Stats,
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn to_json(&self, p: &Protocol) -> Value {
        let mut v = json!({
            "schema_version": SCHEMA_VERSION,
            "status": self.status,
            "details": self.details,
            "stats": self.stats,
        });
        if let Some(t) = &self.counterexample {
            v["counterexample"] = serde_json::to_value(t.to_doc(p)).expect("trace doc serializes");
        }
        if let Some(viol) = &self.violation {
            v["violation"] = json!({
                "input": viol.input,
                "snipes": viol.snipes,
                "observed": viol.observed,
                "permissible": viol.permissible,
                "bottom_scc_size": viol.bottom_scc_size,
                "conflicting": viol.conflicting,
            });
        }
        v
    }
}

/// Knobs shared by the checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CheckOptions {
    pub node_limit: usize,
    /// Require one output per (input, snipe count) across all executions.
    pub strict: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            node_limit: DEFAULT_NODE_LIMIT,
            strict: false,
        }
    }
}

impl CheckOptions {
    pub fn with_limit(node_limit: usize) -> Self {
        CheckOptions {
            node_limit,
            ..CheckOptions::default()
        }
    }
}

enum Outcome {
    Pass(Stats),
    Fail(Box<(Trace, Violation)>, Stats),
    Exceeded(usize),
}

fn check_one(
    p: &Protocol,
    f: &PredicateOracle,
    a: &Input,
    j_max: usize,
    opts: CheckOptions,
) -> Result<Outcome, VerifyError> {
    let root = p.input_config(a)?;
    let g = match ReachGraph::explore(p, root, j_max, opts.node_limit) {
        Ok(g) => g,
        Err(VerifyError::ResourceExceeded { limit }) => return Ok(Outcome::Exceeded(limit)),
        Err(e) => return Err(e),
    };
    let sccs = g.step_sccs();
    let stats = Stats {
        nodes: g.len(),
        sccs: sccs.count,
        layers: g.num_layers(),
    };
    let members = sccs.members();
    let mut bottom: Vec<&Vec<usize>> = g
        .bottom_sccs(&sccs)
        .into_iter()
        .map(|c| &members[c])
        .collect();
    bottom.sort_by_key(|m| m[0]);

    let permissible: Vec<BTreeSet<Output>> = (0..=j_max)
        .map(|s| permissible_outputs(f, a, s as u64))
        .collect();
    let mut seen: BTreeMap<usize, Output> = BTreeMap::new();
    for scc in bottom {
        let head = scc[0];
        let s = g.layer(head);
        let first = p.consensus_output(g.node(head))?.cloned();
        let observed = match first {
            Some(r) => {
                let mut uniform = true;
                for &v in &scc[1..] {
                    if p.consensus_output(g.node(v))? != Some(&r) {
                        uniform = false;
                        break;
                    }
                }
                uniform.then_some(r)
            }
            None => None,
        };
        let mut conflicting = None;
        let ok = match &observed {
            Some(r) if permissible[s].contains(r) => {
                if opts.strict {
                    match seen.get(&s) {
                        Some(prev) if prev != r => {
                            conflicting = Some(prev.clone());
                            false
                        }
                        Some(_) => true,
                        None => {
                            seen.insert(s, r.clone());
                            true
                        }
                    }
                } else {
                    true
                }
            }
            _ => false,
        };
        if !ok {
            let trace = g.trace_to(p, head)?;
            let violation = Violation {
                input: a.clone(),
                snipes: s,
                observed,
                permissible: permissible[s].clone(),
                bottom_scc_size: scc.len(),
                conflicting,
            };
            return Ok(Outcome::Fail(Box::new((trace, violation)), stats));
        }
    }
    Ok(Outcome::Pass(stats))
}

fn describe(v: &Violation) -> String {
    let obs = match &v.observed {
        Some(r) => format!("stable consensus {r}"),
        None => "a bottom SCC with mixed outputs".to_owned(),
    };
    let allowed: Vec<String> = v.permissible.iter().map(Output::to_string).collect();
    let mut s = format!(
        "input {} with {} snipe(s) reaches {obs}; permissible: {{{}}}",
        v.input,
        v.snipes,
        allowed.join(", ")
    );
    if let Some(c) = &v.conflicting {
        s.push_str(&format!("; strict mode also saw {c} in this layer"));
    }
    s
}

fn run_all(
    p: &Protocol,
    f: &PredicateOracle,
    jobs: Vec<(Input, usize)>,
    opts: CheckOptions,
) -> Result<Verdict, VerifyError> {
    for (a, j) in &jobs {
        if a.size() == 0 {
            return Err(VerifyError::EmptyInput);
        }
        if *j as u64 >= a.size() {
            return Err(VerifyError::SnipeBudget {
                j_max: *j,
                population: a.size(),
            });
        }
    }
    let outcomes: Vec<Result<Outcome, VerifyError>> = jobs
        .par_iter()
        .map(|(a, j)| check_one(p, f, a, *j, opts))
        .collect();
    let mut stats = Stats::default();
    let checked = jobs.len();
    for outcome in outcomes {
        match outcome? {
            Outcome::Pass(s) => stats.absorb(s),
            Outcome::Fail(b, s) => {
                stats.absorb(s);
                let (trace, violation) = *b;
                return Ok(Verdict {
                    status: Status::Fail,
                    details: describe(&violation),
                    counterexample: Some(trace),
                    violation: Some(violation),
                    stats,
                });
            }
            Outcome::Exceeded(limit) => {
                return Ok(Verdict {
                    status: Status::ResourceExceeded,
                    counterexample: None,
                    violation: None,
                    details: format!("node limit {limit} exceeded"),
                    stats,
                })
            }
        }
    }
    Ok(Verdict {
        status: Status::Pass,
        counterexample: None,
        violation: None,
        details: format!("{checked} input(s) checked"),
        stats,
    })
}

/// Every bottom SCC of the snipe-free reach graph of each input is a
/// uniform `f(A)`-consensus.
pub fn check_computes(
    p: &Protocol,
    f: &PredicateOracle,
    inputs: &[Input],
    opts: CheckOptions,
) -> Result<Verdict, VerifyError> {
    run_all(p, f, inputs.iter().map(|a| (a.clone(), 0)).collect(), opts)
}

/// For every `s ≤ j_max`, every bottom SCC of the step graph reachable with
/// exactly `s` snipes is a uniform `r`-consensus with `r` permissible for
/// `(A, s)`.
pub fn check_robust(
    p: &Protocol,
    f: &PredicateOracle,
    a: &Input,
    j_max: usize,
    opts: CheckOptions,
) -> Result<Verdict, VerifyError> {
    run_all(p, f, vec![(a.clone(), j_max)], opts)
}

/// [`check_robust`] over several inputs, each with its own `j_max`.
pub fn check_robust_all(
    p: &Protocol,
    f: &PredicateOracle,
    jobs: &[(Input, usize)],
    opts: CheckOptions,
) -> Result<Verdict, VerifyError> {
    run_all(p, f, jobs.to_vec(), opts)
}

/// `Some(r)` if every configuration reachable from `c` is an `r`-consensus.
pub fn stable_consensus(
    p: &Protocol,
    c: &Config,
    node_limit: usize,
) -> Result<Option<Output>, VerifyError> {
    let g = ReachGraph::explore(p, c.clone(), 0, node_limit)?;
    let r = p.consensus_output(c)?.cloned();
    let Some(r) = r else { return Ok(None) };
    for d in g.nodes() {
        if p.consensus_output(d)? != Some(&r) {
            return Ok(None);
        }
    }
    Ok(Some(r))
}
