//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use robustpp::model::{Input, Output, Protocol};
use robustpp::presburger::{self, Formula, Rel};
use robustpp::sim::{self, Adversary, RunOptions, Scheduler, SnipeOrder, Target};
use robustpp::verify::{
    self, check_computes, check_robust, check_robust_all, permissible_outputs, CheckOptions,
    PredicateOracle, Status, Verdict,
};
use robustpp::zoo;

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

const BIG_BUDGET: usize = 10_000_000;

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("tower computes and is robust", secs(10), tower),
        ("pebble loses to one snipe", secs(5), pebble),
        ("robust min", secs(60), robust_min),
        ("robust mod", secs(900), robust_mod),
        ("robust min-mod", secs(900), robust_min_mod),
        ("composition", secs(600), composition),
        ("formula compilation", secs(900), compilation),
        ("profile evaluation", secs(60), saturation),
        ("lower-bound machinery", secs(600), lower_bounds),
        ("permissible outputs", secs(1), permissible),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let slow = if took > *budget {
            " [over time budget]"
        } else {
            ""
        };
        match outcome {
            Ok(detail) => println!(
                "PASS criterion {}: {name} ({detail}) in {:.2?}{slow}",
                i + 1,
                took
            ),
            Err(reason) => {
                failed += 1;
                println!(
                    "FAIL criterion {}: {name} ({reason}) in {:.2?}{slow}",
                    i + 1,
                    took
                );
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn x(n: u64) -> Input {
    Input::single("x", n)
}

fn opts(limit: usize) -> CheckOptions {
    CheckOptions::with_limit(limit)
}

fn expect_pass(what: &str, v: Result<Verdict, verify::VerifyError>) -> Result<(), String> {
    match v {
        Ok(v) if v.status == Status::Pass => Ok(()),
        Ok(v) => Err(format!("{what}: {:?}: {}", v.status, v.details)),
        Err(e) => Err(format!("{what}: {e}")),
    }
}

fn tower() -> Outcome {
    let mut checked = 0;
    for k in 2..=4 {
        let p = zoo::tower(k).map_err(|e| e.to_string())?;
        let f = PredicateOracle::ge("x", k);
        let inputs: Vec<Input> = (1..=k + 3).map(x).collect();
        expect_pass(
            &format!("computes k={k}"),
            check_computes(&p, &f, &inputs, CheckOptions::default()),
        )?;
        let jobs: Vec<(Input, usize)> = (1..=k + 3).map(|n| (x(n), n as usize - 1)).collect();
        expect_pass(
            &format!("robust k={k}"),
            check_robust_all(&p, &f, &jobs, CheckOptions::default()),
        )?;
        checked += inputs.len();
    }
    Ok(format!("{checked} inputs, j_max = n-1"))
}

/// Fails with a counterexample at `(a, j)` that replays to a stable
/// consensus outside the permissible set.
fn pebble_counterexample(p: &Protocol, n: u64, j: usize) -> Result<Output, String> {
    let f = PredicateOracle::ge("x", 3);
    let v = check_robust(p, &f, &x(n), j, CheckOptions::default()).map_err(|e| e.to_string())?;
    if v.status != Status::Fail {
        return Err(format!(
            "check_robust(A={n}, j_max={j}) returned {:?}",
            v.status
        ));
    }
    let trace = v.counterexample.ok_or("no counterexample")?;
    let (end, _) = sim::replay(p, &trace).map_err(|e| e.to_string())?;
    let stable = verify::stable_consensus(p, &end, BIG_BUDGET)
        .map_err(|e| e.to_string())?
        .ok_or("replayed trace does not end in a stable consensus")?;
    let snipes = n - end.size();
    if permissible_outputs(&f, &x(n), snipes).contains(&stable) {
        return Err(format!("replay stabilizes to permissible {stable}"));
    }
    Ok(stable)
}

fn pebble() -> Outcome {
    let p = zoo::pebble(3).map_err(|e| e.to_string())?;
    let evidence: Vec<String> = [(4, 1), (5, 2)]
        .into_iter()
        .map(|(n, j)| match pebble_counterexample(&p, n, j) {
            Ok(r) => format!("A={n},j_max={j} fails and replays to {r}"),
            Err(e) => format!("A={n},j_max={j}: {e}"),
        })
        .collect();
    match pebble_counterexample(&p, 5, 1) {
        Ok(r) => Ok(format!("A=5,j_max=1 replays to stable {r}")),
        Err(e) => Err(format!("A=5,j_max=1: {e}; {}", evidence.join("; "))),
    }
}

fn robust_min() -> Outcome {
    let p = zoo::robust_min(3).map_err(|e| e.to_string())?;
    let f = PredicateOracle::min("x", 3);
    let inputs: Vec<Input> = (1..=6).map(x).collect();
    expect_pass(
        "computes",
        check_computes(&p, &f, &inputs, CheckOptions::default()),
    )?;
    let jobs: Vec<(Input, usize)> = (1..=6).map(|n| (x(n), n as usize - 1)).collect();
    expect_pass(
        "robust",
        check_robust_all(&p, &f, &jobs, CheckOptions::default()),
    )?;
    Ok("n in 1..6, j_max = n-1".into())
}

/// Computes and robust (j ≤ 2) over `1..=hi`, falling back to `1..=fallback`
/// if the node budget trips.
fn budgeted(p: &Protocol, f: &PredicateOracle, hi: u64, fallback: u64) -> Outcome {
    let attempt = |top: u64| -> Result<Status, String> {
        let inputs: Vec<Input> = (1..=top).map(x).collect();
        let c = check_computes(p, f, &inputs, opts(BIG_BUDGET)).map_err(|e| e.to_string())?;
        match c.status {
            Status::Pass => {}
            Status::Fail => return Err(format!("computes: {}", c.details)),
            s => return Ok(s),
        }
        let jobs: Vec<(Input, usize)> =
            (1..=top).map(|n| (x(n), (n as usize - 1).min(2))).collect();
        let r = check_robust_all(p, f, &jobs, opts(BIG_BUDGET)).map_err(|e| e.to_string())?;
        match r.status {
            Status::Fail => Err(format!("robust: {}", r.details)),
            s => Ok(s),
        }
    };
    match attempt(hi)? {
        Status::Pass => Ok(format!("n in 1..{hi}, j_max <= 2")),
        _ => match attempt(fallback)? {
            Status::Pass => Ok(format!("budget tripped at n={hi}; n in 1..{fallback} pass")),
            s => Err(format!("{s:?} even for n in 1..{fallback}")),
        },
    }
}

fn robust_mod() -> Outcome {
    let p = zoo::robust_mod(2).map_err(|e| e.to_string())?;
    if p.num_states() != 400 {
        return Err(format!("{} states, expected 400", p.num_states()));
    }
    let exhaustive = budgeted(&p, &PredicateOracle::modulo("x", 2), 5, 4)?;
    let checked = mod_invariant_runs(&p, 1000)?;
    Ok(format!(
        "{exhaustive}; invariant held on 1000 runs, {checked} level checks"
    ))
}

fn mod_invariant_runs(p: &Protocol, runs: u64) -> Result<usize, String> {
    (0..runs)
        .into_par_iter()
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(0xacce_97ed ^ seed);
            let n = rng.gen_range(1..=8u64);
            let snipes = rng.gen_range(0..=(n - 1).min(3));
            let schedule: Vec<SnipeOrder> = (0..snipes)
                .map(|_| {
                    let target = if rng.gen_bool(0.5) {
                        Target::Random
                    } else {
                        Target::MaxMetaLevel
                    };
                    Adversary::at(rng.gen_range(0..400), target)
                })
                .collect();
            let adv = Adversary::scripted(schedule);
            let (_, ledger) = sim::run_instrumented(
                p,
                &x(n),
                Scheduler::new(seed),
                &adv,
                RunOptions::new(2_000, 200),
            )
            .map_err(|e| format!("run {seed}: {e}"))?;
            sim::check_mod_invariant(p, &ledger).map_err(|v| format!("run {seed}: {v:?}"))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

fn robust_min_mod() -> Outcome {
    let p = zoo::robust_min_mod(2, 2).map_err(|e| e.to_string())?;
    budgeted(&p, &PredicateOracle::min_mod("x", 2, 2), 5, 4)
}

fn composition() -> Outcome {
    let spec = || zoo::FunctionSpec::new((0..=2).map(Output::Int), Output::Int(0));
    let left = zoo::robust_min(2).map_err(|e| e.to_string())?;
    let right = left.rename_variable("x", "y").map_err(|e| e.to_string())?;
    let (p, _) = zoo::compose_all(vec![
        (left, spec().map_err(|e| e.to_string())?),
        (right, spec().map_err(|e| e.to_string())?),
    ])
    .map_err(|e| e.to_string())?;
    let f = PredicateOracle::Tuple(vec![
        PredicateOracle::min("x", 2),
        PredicateOracle::min("y", 2),
    ]);
    let inputs: Vec<Input> = (1..=3)
        .flat_map(|a| (1..=3).map(move |b| Input::new().with("x", a).with("y", b)))
        .collect();
    expect_pass(
        "computes",
        check_computes(&p, &f, &inputs, opts(BIG_BUDGET)),
    )?;
    let jobs: Vec<(Input, usize)> = inputs
        .iter()
        .map(|a| (a.clone(), (a.size() as usize - 1).min(2)))
        .collect();
    expect_pass("robust", check_robust_all(&p, &f, &jobs, opts(BIG_BUDGET)))?;
    Ok(format!("{} states, 9 inputs, j_max <= 2", p.num_states()))
}

/// Every assignment of `0..=hi` to `vars`.
fn grid(vars: &[String], hi: &[u64]) -> Vec<Input> {
    let mut out = vec![Input::new()];
    for (v, &h) in vars.iter().zip(hi) {
        out = out
            .into_iter()
            .flat_map(|a| (0..=h).map(move |n| a.clone().with(v.clone(), n)))
            .collect();
    }
    out
}

fn compilation() -> Outcome {
    let mut notes = Vec::new();
    for text in ["x >= 2", "x % 2 in {1}", "x >= 2 & y >= 2"] {
        let f = presburger::parse(text).map_err(|e| e.to_string())?;
        let (p, _) = presburger::compile(&f).map_err(|e| format!("{text}: {e}"))?;
        let oracle = PredicateOracle::Formula(f.clone());
        let vars: Vec<String> = f.vars().into_iter().collect();
        let box_inputs: Vec<Input> = grid(&vars, &vec![4; vars.len()])
            .into_iter()
            .filter(|a| a.size() >= 1)
            .collect();
        expect_pass(
            &format!("{text} computes"),
            check_computes(&p, &oracle, &box_inputs, opts(BIG_BUDGET)),
        )?;
        let jobs: Vec<(Input, usize)> = grid(&vars, &vec![5; vars.len()])
            .into_iter()
            .filter(|a| (1..=5).contains(&a.size()))
            .map(|a| {
                let j = (a.size() as usize - 1).min(2);
                (a, j)
            })
            .collect();
        expect_pass(
            &format!("{text} robust"),
            check_robust_all(&p, &oracle, &jobs, opts(BIG_BUDGET)),
        )?;
        notes.push(format!("`{text}` {} states", p.num_states()));
    }
    Ok(notes.join(", "))
}

fn random_atom(rng: &mut ChaCha8Rng, vars: &[&str]) -> Formula {
    let var = vars[rng.gen_range(0..vars.len())].to_owned();
    let rels = [Rel::Lt, Rel::Le, Rel::Eq, Rel::Ge, Rel::Gt];
    let rel = rels[rng.gen_range(0..rels.len())];
    match rng.gen_range(0..3) {
        0 => Formula::Threshold {
            var,
            rel,
            bound: rng.gen_range(0..=8),
        },
        1 => {
            let modulus = rng.gen_range(2..=6);
            Formula::ModCmp {
                var,
                modulus,
                rel,
                bound: rng.gen_range(0..modulus),
            }
        }
        _ => {
            let modulus = rng.gen_range(2..=6);
            Formula::Mod {
                var,
                modulus,
                accepted: (0..modulus).filter(|_| rng.gen_bool(0.5)).collect(),
            }
        }
    }
}

fn random_formula(rng: &mut ChaCha8Rng, vars: &[&str], depth: u32) -> Formula {
    if depth == 0 || rng.gen_bool(0.3) {
        return random_atom(rng, vars);
    }
    match rng.gen_range(0..3) {
        0 => Formula::and(
            random_formula(rng, vars, depth - 1),
            random_formula(rng, vars, depth - 1),
        ),
        1 => Formula::or(
            random_formula(rng, vars, depth - 1),
            random_formula(rng, vars, depth - 1),
        ),
        _ => Formula::not(random_formula(rng, vars, depth - 1)),
    }
}

fn saturation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let pools: [&[&str]; 3] = [&["x"], &["x", "y"], &["x", "y", "z"]];
    let mut points = 0usize;
    for i in 0..100 {
        let f = random_formula(&mut rng, pools[i % 3], 4);
        let prof = presburger::profile(&f);
        let vars: Vec<String> = f.vars().into_iter().collect();
        let hi: Vec<u64> = vars
            .iter()
            .map(|v| {
                let vp = prof.get(v).expect("profiled");
                vp.threshold + 2 * vp.modulus
            })
            .collect();
        for a in grid(&vars, &hi) {
            let direct = presburger::eval(&f, &a).map_err(|e| e.to_string())?;
            let via = presburger::eval_from_profile(&f, &prof, &prof.tuple_of(&a))
                .map_err(|e| e.to_string())?;
            if direct != via {
                return Err(format!("`{f}` disagrees at {a:?}"));
            }
            points += 1;
        }
    }
    Ok(format!("100 formulas, {points} points"))
}

fn lower_bounds() -> Outcome {
    let t3 = zoo::tower(3).map_err(|e| e.to_string())?;
    let crit = verify::critical_input(&t3).map_err(|e| e.to_string())?;
    if crit.size() != 3 {
        return Err(format!(
            "critical input of tower(3) has {} agents",
            crit.size()
        ));
    }
    let ge3 = Formula::ge("x", 3);
    if !verify::check_upward_invariant(&ge3, &crit) {
        return Err("critical input is not upward invariant".into());
    }
    for k in 2..=4 {
        let f = Formula::ge("x", k);
        let got = verify::state_lower_bound(&f, verify::default_search_bound(&f));
        if got != Some(k) {
            return Err(format!("state_lower_bound(x >= {k}) = {got:?}"));
        }
    }
    let f = PredicateOracle::ge("x", 3);
    let jobs: Vec<(Input, usize)> = (1..=6).map(|n| (x(n), n as usize - 1)).collect();
    let protocols: Vec<Protocol> = verify::enumerate_protocols(2)
        .map_err(|e| e.to_string())?
        .collect();
    let passing: Vec<String> = protocols
        .par_iter()
        .filter(|p| {
            check_robust_all(p, &f, &jobs, CheckOptions::default())
                .map(|v| v.is_pass())
                .unwrap_or(false)
        })
        .map(|p| p.to_json())
        .collect();
    if !passing.is_empty() {
        return Err(format!("{} two-state protocols pass", passing.len()));
    }
    Ok(format!(
        "critical input {crit:?}; bounds 2,3,4; none of {} two-state protocols robust",
        protocols.len()
    ))
}

fn permissible() -> Outcome {
    let f = PredicateOracle::min("x", 6);
    let a = x(7);
    let ints = |v: &[u64]| v.iter().map(|&n| Output::Int(n)).collect::<BTreeSet<_>>();
    let one = permissible_outputs(&f, &a, 1);
    let two = permissible_outputs(&f, &a, 2);
    if one != ints(&[6]) || two != ints(&[5, 6]) {
        return Err(format!("j=1 gives {one:?}, j=2 gives {two:?}"));
    }
    Ok("j=1 {6}, j=2 {5,6}".into())
}
