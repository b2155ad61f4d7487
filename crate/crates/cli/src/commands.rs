use std::collections::BTreeSet;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde_json::{json, Value};

use robustpp::model::{Input, ModelError, Protocol, Rule, Trace, TraceDoc, SCHEMA_VERSION};
use robustpp::presburger::{self, CompileError, Component, Formula};
use robustpp::sim::{self, Adversary, RunOptions, RunVerdict, Scheduler, SimError, SnipeOrder};
use robustpp::verify::{
    self, CheckOptions, PredicateOracle, Status, VerifyError, DEFAULT_NODE_LIMIT,
};
use robustpp::zoo::{self, ZooError, MAX_STATES};

use crate::input;
use crate::{AnalyzeCommand, CompileArgs, Family, Mode, SimulateArgs, VerifyArgs, ZooArgs};

const NODE_LIMIT_VAR: &str = "PP_NODE_LIMIT";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Resource(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Resource(_) => 2,
            CliError::Usage(_) => 3,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<ZooError> for CliError {
    fn from(e: ZooError) -> Self {
        match e {
            ZooError::TooLarge { .. } => CliError::Resource(e.to_string()),
            e => CliError::Usage(e.to_string()),
        }
    }
}

impl From<CompileError> for CliError {
    fn from(e: CompileError) -> Self {
        match e {
            CompileError::TooLarge { .. } => CliError::Resource(e.to_string()),
            CompileError::Zoo(z) => z.into(),
            e => CliError::Usage(e.to_string()),
        }
    }
}

impl From<VerifyError> for CliError {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::ResourceExceeded { .. } => CliError::Resource(e.to_string()),
            e => CliError::Usage(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Usage(e.to_string())
    }
}

type Exit = Result<i32, CliError>;

pub fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn load_protocol(path: &Path) -> Result<Protocol, CliError> {
    Protocol::from_json(&read(path)?)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn write_to(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, format!("{text}\n"))
            .map_err(|e| CliError::Usage(format!("{}: {e}", p.display()))),
        None => {
            print_text(text);
            Ok(())
        }
    }
}

/// A closed stdout (e.g. piped into `head`) is not an error.
fn print_text(text: &str) {
    let mut out = io::stdout().lock();
    let _ = writeln!(out, "{text}").and_then(|_| out.flush());
}

fn print_json(v: &Value) {
    print_text(&serde_json::to_string_pretty(v).expect("json value serializes"));
}

fn parse_formula(text: &str) -> Result<Formula, CliError> {
    presburger::parse(text).map_err(|e| CliError::Usage(e.to_string()))
}

fn node_limit(flag: Option<usize>) -> Result<usize, CliError> {
    if let Some(n) = flag {
        return Ok(n);
    }
    match std::env::var(NODE_LIMIT_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{NODE_LIMIT_VAR}=`{v}` is not a count"))),
        Err(_) => Ok(DEFAULT_NODE_LIMIT),
    }
}

pub fn zoo(a: ZooArgs) -> Exit {
    let need = |v: Option<u64>, flag: &str| {
        v.ok_or_else(|| CliError::Usage(format!("--{flag} is required for this family")))
    };
    let p = match a.family {
        Family::Pebble => zoo::pebble(need(a.k, "k")?)?,
        Family::Tower => zoo::tower(need(a.k, "k")?)?,
        Family::RobustMin => zoo::robust_min(need(a.k, "k")?)?,
        Family::RobustMod => zoo::robust_mod(need(a.m, "m")?)?,
        Family::RobustMinMod => zoo::robust_min_mod(need(a.k, "k")?, need(a.m, "m")?)?,
    };
    write_to(a.out.as_deref(), &p.to_json())?;
    Ok(0)
}

fn describe(c: Component) -> Value {
    match c {
        Component::MinMod { threshold, modulus } => {
            json!({ "kind": "robust_min_mod", "k": threshold, "m": modulus })
        }
        Component::Min { threshold } => json!({ "kind": "robust_min", "k": threshold }),
        Component::Mod { modulus } => json!({ "kind": "robust_mod", "m": modulus }),
        Component::Constant => json!({ "kind": "constant" }),
    }
}

pub fn compile(a: CompileArgs) -> Exit {
    let f = parse_formula(&a.formula)?;
    if a.stats {
        let plan = presburger::plan(&f)?;
        let profile: serde_json::Map<String, Value> = plan
            .profile
            .vars()
            .iter()
            .map(|(v, p)| (v.clone(), json!({ "t": p.threshold, "m": p.modulus })))
            .collect();
        let components: Vec<Value> = plan
            .components
            .iter()
            .map(|(v, c)| {
                let mut d = describe(*c);
                d["var"] = json!(v);
                d["states"] = json!(c.state_count().to_string());
                d
            })
            .collect();
        let fits = plan.state_count <= MAX_STATES.into();
        print_json(&json!({
            "schema_version": SCHEMA_VERSION,
            "formula": plan.formula.to_string(),
            "profile": profile,
            "components": components,
            "state_count": plan.state_count.to_string(),
            "state_limit": MAX_STATES,
            "materializable": fits,
        }));
        if let Some(out) = &a.out {
            let (p, _) = presburger::compile(&f)?;
            write_to(Some(out), &p.to_json())?;
        }
        return Ok(0);
    }
    let (p, _) = presburger::compile(&f)?;
    write_to(a.out.as_deref(), &p.to_json())?;
    Ok(0)
}

pub fn simulate(a: SimulateArgs) -> Exit {
    let p = load_protocol(&a.protocol)?;
    if let Some(path) = &a.replay {
        return replay(&p, path);
    }
    let inputs = input::collect(&a.input, None)?;
    let orders = a
        .snipe
        .iter()
        .map(|s| s.parse::<SnipeOrder>())
        .collect::<Result<Vec<_>, _>>()?;
    let adv = Adversary::scripted(orders);
    let opts = RunOptions {
        record_silent: a.record_silent,
        ..RunOptions::new(a.max_steps, a.window)
    };
    if a.trials > 1 || inputs.len() > 1 {
        if a.jsonl.is_some() {
            return Err(CliError::Usage(
                "--jsonl needs a single input and a single trial".into(),
            ));
        }
        let summaries = sim::monte_carlo(&p, &inputs, a.trials, a.seed, &adv, opts)?;
        let docs: Vec<Value> = summaries.iter().map(|s| s.to_json()).collect();
        print_json(&json!(docs));
        return Ok(0);
    }
    let report = sim::run(&p, &inputs[0], Scheduler::new(a.seed), &adv, opts)?;
    if let Some(path) = &a.jsonl {
        let file = fs::File::create(path)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        sim::write_jsonl(&p, &report, &mut w)
            .and_then(|_| w.flush())
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    }
    print_json(&report.to_json(&p));
    Ok(match report.verdict {
        RunVerdict::ConvergedTo { .. } => 0,
        RunVerdict::NoConsensusWithinBudget => 2,
    })
}

/// Accepts a bare trace document or a verdict carrying a counterexample.
fn replay(p: &Protocol, path: &Path) -> Exit {
    let value: Value = serde_json::from_str(&read(path)?)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let trace_value = match value.get("counterexample") {
        Some(Value::Null) => {
            return Err(CliError::Usage(format!(
                "{}: verdict has no counterexample",
                path.display()
            )))
        }
        Some(v) => v.clone(),
        None => value,
    };
    let doc: TraceDoc = serde_json::from_value(trace_value)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let trace = Trace::from_doc(p, &doc)?;
    let (end, consensus) = sim::replay(p, &trace)?;
    let stable = if end.is_empty() {
        None
    } else {
        verify::stable_consensus(p, &end, node_limit(None)?)?
    };
    print_json(&json!({
        "schema_version": SCHEMA_VERSION,
        "events": trace.events.len(),
        "snipes": trace.snipes_used,
        "final": p.config_to_doc(&end),
        "consensus": consensus,
        "stable_consensus": stable,
    }));
    Ok(0)
}

pub fn verify(a: VerifyArgs) -> Exit {
    let p = load_protocol(&a.protocol)?;
    let oracle = match (&a.oracle, &a.function) {
        (Some(text), _) => PredicateOracle::Formula(parse_formula(text)?),
        (None, Some(d)) => d.parse::<PredicateOracle>()?,
        (None, None) => return Err(CliError::Usage("--oracle or --function is required".into())),
    };
    let inputs = input::collect(&a.input, a.input_file.as_deref())?;
    let opts = CheckOptions {
        node_limit: node_limit(a.max_configs)?,
        strict: a.strict,
    };
    let verdict = match a.mode {
        Mode::Computes => verify::check_computes(&p, &oracle, &inputs, opts)?,
        Mode::Robust => {
            let jobs: Vec<(Input, usize)> = inputs
                .into_iter()
                .map(|i| {
                    let j = a.snipes.min(i.size().saturating_sub(1) as usize);
                    (i, j)
                })
                .collect();
            verify::check_robust_all(&p, &oracle, &jobs, opts)?
        }
    };
    print_json(&verdict.to_json(&p));
    Ok(match verdict.status {
        Status::Pass => 0,
        Status::Fail => 1,
        Status::ResourceExceeded => 2,
    })
}

fn rule_doc(p: &Protocol, r: &Rule) -> Value {
    let ids = |qs: [robustpp::model::StateIx; 2]| [p.id(qs[0]).as_str(), p.id(qs[1]).as_str()];
    json!({ "pre": ids(r.pre), "post": ids(r.post) })
}

fn state_set(p: &Protocol, ids: &[String]) -> Result<BTreeSet<robustpp::model::StateIx>, CliError> {
    ids.iter()
        .map(|id| p.state(id.trim()).map_err(CliError::from))
        .collect()
}

pub fn analyze(cmd: AnalyzeCommand) -> Exit {
    match cmd {
        AnalyzeCommand::CriticalInput { protocol, formula } => {
            let p = load_protocol(&protocol)?;
            let rejecting: Vec<&str> = verify::rejecting_states(&p)?
                .into_iter()
                .map(|q| p.id(q).as_str())
                .collect();
            let crit = verify::critical_input(&p)?;
            let mut doc = json!({
                "schema_version": SCHEMA_VERSION,
                "rejecting_states": rejecting,
                "critical_input": crit,
            });
            let mut code = 0;
            if let Some(text) = formula {
                let invariant = verify::check_upward_invariant(&parse_formula(&text)?, &crit);
                doc["upward_invariant"] = json!(invariant);
                code = i32::from(!invariant);
            }
            print_json(&doc);
            Ok(code)
        }
        AnalyzeCommand::Escape { protocol, states } => {
            let p = load_protocol(&protocol)?;
            let s = state_set(&p, &states)?;
            let rules: Vec<Value> = verify::escape_transitions(&p, &s)
                .iter()
                .map(|r| rule_doc(&p, r))
                .collect();
            print_json(&json!({ "schema_version": SCHEMA_VERSION, "escape_transitions": rules }));
            Ok(0)
        }
        AnalyzeCommand::Confine {
            protocol,
            input,
            states,
            max_configs,
        } => {
            let p = load_protocol(&protocol)?;
            let s = state_set(&p, &states)?;
            let inputs = input::expand(&input)?;
            let [a] = inputs.as_slice() else {
                return Err(CliError::Usage("confine takes a single input".into()));
            };
            let c = p.input_config(a)?;
            let status = verify::confinement_status(&p, &c, &s, node_limit(max_configs)?)?;
            print_json(&json!({ "schema_version": SCHEMA_VERSION, "input": a, "status": status }));
            Ok(0)
        }
        AnalyzeCommand::LowerBound {
            formula,
            search_bound,
        } => {
            let f = parse_formula(&formula)?;
            let bound = search_bound.unwrap_or_else(|| verify::default_search_bound(&f));
            let lb = verify::state_lower_bound(&f, bound);
            print_json(&json!({
                "schema_version": SCHEMA_VERSION,
                "formula": f.to_string(),
                "search_bound": bound,
                "lower_bound": lb,
            }));
            Ok(0)
        }
    }
}
