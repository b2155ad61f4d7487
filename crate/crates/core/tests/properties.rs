//! Cross-module properties checked through the public API.

use proptest::prelude::*;

use robustpp::model::{Input, Output, Protocol};
use robustpp::presburger::{self, Formula, Rel};
use robustpp::sim::{self, Adversary, RunOptions, RunVerdict, Scheduler, Target};
use robustpp::verify::{self, check_computes, CheckOptions, PredicateOracle};
use robustpp::zoo;

fn rel() -> impl Strategy<Value = Rel> {
    prop::sample::select(vec![Rel::Lt, Rel::Le, Rel::Eq, Rel::Ge, Rel::Gt])
}

fn atom(var: &'static str, max_bound: u64, max_mod: u64) -> BoxedStrategy<Formula> {
    prop_oneof![
        (rel(), 0..=max_bound).prop_map(move |(rel, bound)| Formula::Threshold {
            var: var.into(),
            rel,
            bound
        }),
        (2..=max_mod, rel(), 0..max_mod).prop_map(move |(modulus, rel, b)| Formula::ModCmp {
            var: var.into(),
            modulus,
            rel,
            bound: b % modulus,
        }),
    ]
    .boxed()
}

fn formula(vars: &'static [&'static str], max_bound: u64, max_mod: u64) -> BoxedStrategy<Formula> {
    let leaves: Vec<BoxedStrategy<Formula>> =
        vars.iter().map(|v| atom(v, max_bound, max_mod)).collect();
    prop::strategy::Union::new(leaves)
        .prop_recursive(3, 8, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::and(l, r)),
                (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::or(l, r)),
                inner.prop_map(Formula::not),
            ]
        })
        .boxed()
}

/// Every assignment with `lo[i] ..= hi[i]` per variable.
fn boxed_inputs(vars: &[String], lo: &[u64], hi: &[u64]) -> Vec<Input> {
    let mut out = vec![Input::new()];
    for ((v, &l), &h) in vars.iter().zip(lo).zip(hi) {
        out = out
            .into_iter()
            .flat_map(|a| (l..=h).map(move |n| a.clone().with(v.clone(), n)))
            .collect();
    }
    out
}

/// `f` constant on `[a, a + width]` per variable.
fn brute_upward_invariant(f: &Formula, a: &Input, width: u64) -> bool {
    let vars: Vec<String> = f.vars().into_iter().collect();
    let lo: Vec<u64> = vars.iter().map(|v| a.get(v)).collect();
    let hi: Vec<u64> = lo.iter().map(|l| l + width).collect();
    let base = presburger::eval(f, a).unwrap();
    boxed_inputs(&vars, &lo, &hi)
        .iter()
        .all(|b| presburger::eval(f, b).unwrap() == base)
}

fn lcm_of_moduli(f: &Formula) -> u64 {
    presburger::profile(f)
        .vars()
        .values()
        .map(|p| p.modulus)
        .fold(1, num_integer::lcm)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn upward_invariance_matches_enlarged_box(
        f in formula(&["x", "y"], 6, 4),
        ax in 0u64..8,
        ay in 0u64..8,
    ) {
        let a: Input = f.vars().into_iter().map(|v| {
            let n = if v == "x" { ax } else { ay };
            (v, n)
        }).collect();
        let width = verify::default_search_bound(&f) + 2 * lcm_of_moduli(&f);
        prop_assert_eq!(
            verify::check_upward_invariant(&f, &a),
            brute_upward_invariant(&f, &a, width),
            "{}", f
        );
    }

    #[test]
    fn compiled_single_variable_formulas_compute(f in formula(&["x"], 3, 2)) {
        let (p, spec) = presburger::compile(&f).unwrap();
        let oracle = PredicateOracle::Formula(f.clone());
        prop_assert_eq!(spec.zero_value(), &oracle.eval(&Input::single("x", 0)));
        let inputs: Vec<Input> = (1..=4).map(|n| Input::single("x", n)).collect();
        let v = check_computes(&p, &oracle, &inputs, CheckOptions::default()).unwrap();
        prop_assert!(v.is_pass(), "{}: {}", f, v.details);
    }

    #[test]
    fn simulation_never_certifies_a_wrong_value(
        which in 0usize..3,
        n in 1u64..6,
        seed in any::<u64>(),
    ) {
        let (p, f): (Protocol, PredicateOracle) = match which {
            0 => (zoo::tower(3).unwrap(), PredicateOracle::ge("x", 3)),
            1 => (zoo::robust_min(3).unwrap(), PredicateOracle::min("x", 3)),
            _ => (zoo::robust_mod(2).unwrap(), PredicateOracle::modulo("x", 2)),
        };
        let a = Input::single("x", n);
        prop_assume!(check_computes(&p, &f, std::slice::from_ref(&a), CheckOptions::default()).unwrap().is_pass());
        let report = sim::run(&p, &a, Scheduler::new(seed), &Adversary::none(), RunOptions::new(20_000, 2_000)).unwrap();
        if let RunVerdict::ConvergedTo { output, .. } = &report.verdict {
            prop_assert_eq!(output, &f.eval(&a));
        }
    }

    #[test]
    fn identical_seeds_give_identical_reports(n in 1u64..8, seed in any::<u64>(), at in 0u64..30) {
        let p = zoo::robust_min(3).unwrap();
        let adv = Adversary::scripted(vec![Adversary::at(at, Target::Random)]);
        let run = || sim::run(&p, &Input::single("x", n), Scheduler::new(seed), &adv, RunOptions::new(5_000, 500)).unwrap();
        let (a, b) = (run(), run());
        prop_assert_eq!(a.to_json(&p).to_string(), b.to_json(&p).to_string());
    }

    #[test]
    fn robust_min_knowledge_dominates_level(n in 1u64..8, seed in any::<u64>()) {
        let p = zoo::robust_min(4).unwrap();
        let (_, ledger) = sim::run_instrumented(
            &p, &Input::single("x", n), Scheduler::new(seed), &Adversary::none(), RunOptions::new(3_000, 300),
        ).unwrap();
        prop_assert!(sim::check_min_invariant(&p, &ledger).is_ok());
    }

    #[test]
    fn min_mod_invariant_survives_snipes(n in 2u64..7, seed in any::<u64>(), at in 0u64..200) {
        let p = zoo::robust_min_mod(2, 2).unwrap();
        let adv = Adversary::scripted(vec![Adversary::at(at, Target::MaxMetaLevel)]);
        let (_, ledger) = sim::run_instrumented(
            &p, &Input::single("x", n), Scheduler::new(seed), &adv, RunOptions::new(2_000, 200),
        ).unwrap();
        prop_assert!(sim::check_mod_invariant(&p, &ledger).is_ok());
    }
}

#[test]
fn robust_verdicts_agree_with_simulated_snipes() {
    let p = zoo::pebble(3).unwrap();
    let f = PredicateOracle::ge("x", 3);
    let v =
        verify::check_robust(&p, &f, &Input::single("x", 4), 1, CheckOptions::default()).unwrap();
    assert!(!v.is_pass());
    let (end, _) = sim::replay(&p, v.counterexample.as_ref().unwrap()).unwrap();
    assert_eq!(
        verify::stable_consensus(&p, &end, 1_000).unwrap(),
        Some(Output::Int(0))
    );
    let early = Adversary::scripted(vec![Adversary::at(1, Target::MaxMetaLevel)]);
    let hits = (0..64)
        .filter(|&seed| {
            sim::run(
                &p,
                &Input::single("x", 4),
                Scheduler::new(seed),
                &early,
                RunOptions::new(5_000, 500),
            )
            .unwrap()
            .converged_to()
                == Some(&Output::Int(0))
        })
        .count();
    assert!(hits > 0);
}

#[test]
fn composed_protocol_round_trips_through_json() {
    let spec = || zoo::FunctionSpec::new((0..=2).map(Output::Int), Output::Int(0)).unwrap();
    let l = zoo::robust_min(2).unwrap();
    let r = l.rename_variable("x", "y").unwrap();
    let (p, _) = zoo::compose_all(vec![(l, spec()), (r, spec())]).unwrap();
    let back = Protocol::from_json(&p.to_json()).unwrap();
    assert_eq!(back, p);
    let a = Input::new().with("x", 1).with("y", 3);
    assert_eq!(
        verify::check_computes(
            &back,
            &"pair(min(x,2),min(y,2))".parse().unwrap(),
            &[a],
            CheckOptions::default()
        )
        .unwrap()
        .status,
        verify::Status::Pass
    );
}
