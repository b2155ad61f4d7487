//! Lower-bound analyses: escape transitions, confinement, critical inputs,
//! upward invariance and tiny-protocol enumeration.

use std::collections::BTreeSet;

use serde::Serialize;

use super::{ReachGraph, VerifyError};
use crate::model::{Config, Input, Output, Protocol, RawProtocol, Rule, StateInfo, StateIx};
use crate::presburger::{eval, profile, Formula};

/// Non-silent rules with both preconditions in `s` and some postcondition
/// outside it.
pub fn escape_transitions(p: &Protocol, s: &BTreeSet<StateIx>) -> Vec<Rule> {
    p.rules()
        .into_iter()
        .filter(|r| r.pre.iter().all(|q| s.contains(q)) && r.post.iter().any(|q| !s.contains(q)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Confinement {
    /// Every reachable configuration stays inside the set.
    Confined,
    /// Not confined, but some reachable configuration is.
    ConfinableNotConfined,
    NotConfinable,
}

pub fn confinement_status(
    p: &Protocol,
    c: &Config,
    s: &BTreeSet<StateIx>,
    node_limit: usize,
) -> Result<Confinement, VerifyError> {
    let g = ReachGraph::explore(p, c.clone(), 0, node_limit)?;
    let n = g.len();
    let mut preds = vec![Vec::new(); n];
    for v in 0..n {
        for &w in g.step_targets(v) {
            preds[w as usize].push(v);
        }
    }
    // escapes[v]: some configuration reachable from v leaves `s`
    let mut escapes = vec![false; n];
    let mut stack: Vec<usize> = (0..n)
        .filter(|&v| g.node(v).support().any(|q| !s.contains(&q)))
        .collect();
    for &v in &stack {
        escapes[v] = true;
    }
    while let Some(v) = stack.pop() {
        for &u in &preds[v] {
            if !escapes[u] {
                escapes[u] = true;
                stack.push(u);
            }
        }
    }
    Ok(if !escapes[0] {
        Confinement::Confined
    } else if escapes.iter().any(|e| !e) {
        Confinement::ConfinableNotConfined
    } else {
        Confinement::NotConfinable
    })
}

/// States outputting 0. Fails unless every output is 0 or 1.
pub fn rejecting_states(p: &Protocol) -> Result<BTreeSet<StateIx>, VerifyError> {
    let mut q0 = BTreeSet::new();
    for q in p.state_indices() {
        match p.output(q) {
            Output::Int(0) => {
                q0.insert(q);
            }
            Output::Int(1) => {}
            _ => return Err(VerifyError::NotAPredicateProtocol),
        }
    }
    Ok(q0)
}

/// `|Q_0| + 1` agents for every input variable.
pub fn critical_input(p: &Protocol) -> Result<Input, VerifyError> {
    let n = rejecting_states(p)?.len() as u64 + 1;
    Ok(p.variables().map(|v| (v.to_owned(), n)).collect())
}

/// Calls `visit` on every assignment with `vars[i]` ranging over
/// `ranges[i]`.
fn for_each_in_box(
    vars: &[String],
    ranges: &[(u64, u64)],
    mut visit: impl FnMut(&Input) -> bool,
) -> bool {
    let mut a: Input = vars
        .iter()
        .zip(ranges)
        .map(|(v, r)| (v.clone(), r.0))
        .collect();
    loop {
        if !visit(&a) {
            return false;
        }
        let mut i = 0;
        loop {
            if i == vars.len() {
                return true;
            }
            let x = a.get(&vars[i]);
            if x < ranges[i].1 {
                a.set(vars[i].clone(), x + 1);
                break;
            }
            a.set(vars[i].clone(), ranges[i].0);
            i += 1;
        }
    }
}

fn assignment(f: &Formula, a: &Input) -> Input {
    f.vars()
        .into_iter()
        .map(|v| {
            let n = a.get(&v);
            (v, n)
        })
        .collect()
}

/// Whether `f` is constant on `{A' : A' ≥ A}`. Decided on the box
/// `A_i ≤ x_i ≤ max(A_i, t_i) + m_i`, beyond which profile tuples repeat.
pub fn check_upward_invariant(f: &Formula, a: &Input) -> bool {
    let a = assignment(f, a);
    let prof = profile(f);
    let vars: Vec<String> = a.vars().map(str::to_owned).collect();
    let ranges: Vec<(u64, u64)> = vars
        .iter()
        .map(|v| {
            let vp = prof.get(v).expect("formula variable is profiled");
            let lo = a.get(v);
            (lo, lo.max(vp.threshold) + vp.modulus)
        })
        .collect();
    let base = eval(f, &a).expect("complete assignment");
    for_each_in_box(&vars, &ranges, |b| {
        eval(f, b).expect("complete assignment") == base
    })
}

/// Default search bound: `max_i (t_i + m_i)`.
pub fn default_search_bound(f: &Formula) -> u64 {
    profile(f)
        .vars()
        .values()
        .map(|vp| vp.threshold + vp.modulus)
        .max()
        .unwrap_or(0)
}

/// Smallest `max_i A_i` over upward-invariant inputs `A` in
/// `[0, search_bound]^vars`, or `None` if the box holds none.
pub fn state_lower_bound(f: &Formula, search_bound: u64) -> Option<u64> {
    let vars: Vec<String> = f.vars().into_iter().collect();
    let ranges = vec![(0, search_bound); vars.len()];
    let mut best: Option<u64> = None;
    for_each_in_box(&vars, &ranges, |a| {
        let height = a.iter().map(|(_, &n)| n).max().unwrap_or(0);
        if best.is_none_or(|b| height < b) && check_upward_invariant(f, a) {
            best = Some(height);
        }
        true
    });
    best
}

/// Predicate protocols with `num_states ≤ 3` states `q0..`, one input
/// variable `x` and outputs in `{0, 1}`, one per class of state renamings.
/// Order is deterministic.
pub fn enumerate_protocols(
    num_states: usize,
) -> Result<impl Iterator<Item = Protocol>, VerifyError> {
    if !(1..=3).contains(&num_states) {
        return Err(VerifyError::InvalidParameter(format!(
            "enumeration supports 1 to 3 states, got {num_states}"
        )));
    }
    let n = num_states;
    let pairs: Vec<[usize; 2]> = (0..n).flat_map(|a| (a..n).map(move |b| [a, b])).collect();
    let np = pairs.len();
    let tables = np.pow(np as u32);
    let total = tables * (1 << n) * n;
    let perms = permutations(n);
    let pair_ix = move |a: usize, b: usize| -> usize {
        let (a, b) = (a.min(b), a.max(b));
        pairs
            .iter()
            .position(|p| *p == [a, b])
            .expect("pair listed")
    };
    let pairs2: Vec<[usize; 2]> = (0..n).flat_map(|a| (a..n).map(move |b| [a, b])).collect();

    Ok((0..total).filter_map(move |code| {
        let initial = code % n;
        let outputs = (code / n) % (1 << n);
        let mut t = code / n / (1 << n);
        let table: Vec<usize> = (0..np)
            .map(|_| {
                let d = t % np;
                t /= np;
                d
            })
            .collect();
        let encode = |pi: &[usize]| -> Vec<usize> {
            // pi maps old state to new state; inv maps back
            let mut inv = vec![0; n];
            for (old, &new) in pi.iter().enumerate() {
                inv[new] = old;
            }
            let mut key = vec![pi[initial]];
            key.extend((0..n).map(|new| (outputs >> inv[new]) & 1));
            for p in &pairs2 {
                let old = pair_ix(inv[p[0]], inv[p[1]]);
                let [c, d] = pairs2[table[old]];
                key.push(pair_ix(pi[c], pi[d]));
            }
            key
        };
        let own = encode(&perms[0]);
        if perms[1..].iter().any(|pi| encode(pi) < own) {
            return None;
        }
        let states = (0..n)
            .map(|q| StateInfo::new(format!("q{q}"), Output::Int(((outputs >> q) & 1) as u64)))
            .collect();
        let transitions = pairs2
            .iter()
            .zip(&table)
            .filter(|(p, &d)| **p != pairs2[d])
            .map(|(p, &d)| (*p, pairs2[d]))
            .collect();
        Some(
            Protocol::from_raw(RawProtocol {
                name: format!("enum{n}#{code}"),
                output_alphabet: Some(vec![Output::Int(0), Output::Int(1)]),
                states,
                initial: vec![("x".into(), initial)],
                transitions,
            })
            .expect("enumerated protocol is well formed"),
        )
    }))
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..n {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}
