//! Constructors for the concrete protocol families and the parallel
//! composition combinator.

mod compose;
mod tower_mod;

pub use compose::{compose_all, compose_state_count, parallel_compose, FunctionSpec, Side};
pub use tower_mod::{
    plurality, reconcile, robust_min_mod, robust_mod, tower_mod_state_count, ModVector,
    TowerModLayout,
};

use serde_json::json;
use thiserror::Error;

use crate::model::{ModelError, Output, Protocol, RawProtocol, StateInfo};

/// Largest state count a constructor will materialize. The transition table
/// is built over all unordered pairs, so cost grows quadratically.
pub const MAX_STATES: u64 = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ZooError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("vector lengths or moduli differ")]
    LengthMismatch,
    #[error("plurality of an empty vector")]
    EmptyVector,
    #[error("input variable `{0}` occurs in both protocols")]
    VariableClash(String),
    #[error("state `{state}` outputs {output}, outside the declared codomain")]
    CodomainMismatch { state: String, output: Output },
    #[error("zero value {0} is not in the codomain")]
    ZeroOutsideCodomain(Output),
    #[error("protocol would have {states} states (limit {limit})")]
    TooLarge { states: String, limit: u64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<(), ZooError> {
    if cond {
        Ok(())
    } else {
        Err(ZooError::InvalidParameter(msg()))
    }
}

/// Threshold `x ≥ k` by pebble collection. Not robust.
///
/// States `P0..Pk` count pebbles; `i, j ↦ i+j, 0` below `k` and `k, k` at or
/// above it.
pub fn pebble(k: u64) -> Result<Protocol, ZooError> {
    require(k >= 1, || format!("pebble needs k >= 1, got {k}"))?;
    require(k < MAX_STATES, || format!("pebble k = {k} too large"))?;
    let k = k as usize;
    let states = (0..=k)
        .map(|i| {
            StateInfo::new(format!("P{i}"), u64::from(i == k)).with_meta(json!({ "level": i }))
        })
        .collect();
    let mut transitions = Vec::new();
    for i in 0..=k {
        for j in i..=k {
            let post = if i + j < k { [i + j, 0] } else { [k, k] };
            let mut sorted_post = post;
            sorted_post.sort();
            if sorted_post != [i, j] {
                transitions.push(([i, j], post));
            }
        }
    }
    Ok(Protocol::from_raw(RawProtocol {
        name: format!("pebble({k})"),
        output_alphabet: Some(vec![Output::Int(0), Output::Int(1)]),
        states,
        initial: vec![("x".into(), 1)],
        transitions,
    })?)
}

/// Threshold `x ≥ k` with levels `L1..Lk`: equal levels below the top split
/// and one climbs; the top level pulls everyone up.
pub fn tower(k: u64) -> Result<Protocol, ZooError> {
    require(k >= 1, || format!("tower needs k >= 1, got {k}"))?;
    require(k <= MAX_STATES, || format!("tower k = {k} too large"))?;
    let k = k as usize;
    // position i-1 holds level i
    let states = (1..=k)
        .map(|i| {
            StateInfo::new(format!("L{i}"), u64::from(i == k)).with_meta(json!({ "level": i }))
        })
        .collect();
    let mut transitions = Vec::new();
    for i in 1..k {
        transitions.push(([i - 1, i - 1], [i - 1, i]));
        transitions.push(([k - 1, i - 1], [k - 1, k - 1]));
    }
    Ok(Protocol::from_raw(RawProtocol {
        name: format!("tower({k})"),
        output_alphabet: Some(vec![Output::Int(0), Output::Int(1)]),
        states,
        initial: vec![("x".into(), 0)],
        transitions,
    })?)
}

/// `min(x, k)` over states `(level, known-height)` in `[k]×[k]`; outputs the
/// known height.
pub fn robust_min(k: u64) -> Result<Protocol, ZooError> {
    require(k >= 1, || format!("robust_min needs k >= 1, got {k}"))?;
    require(k * k <= MAX_STATES, || {
        format!("robust_min k = {k} too large")
    })?;
    let k = k as usize;
    let ix = |i: usize, h: usize| (i - 1) * k + (h - 1);
    let mut states = Vec::with_capacity(k * k);
    for i in 1..=k {
        for h in 1..=k {
            states.push(
                StateInfo::new(format!("({i},{h})"), h as u64)
                    .with_meta(json!({ "level": i, "knowledge": h })),
            );
        }
    }
    let mut transitions = Vec::new();
    for i1 in 1..=k {
        for h1 in 1..=k {
            for i2 in i1..=k {
                for h2 in 1..=k {
                    if (i2, h2) < (i1, h1) {
                        continue;
                    }
                    let post = if i1 == i2 {
                        if i1 == k {
                            continue;
                        }
                        let h = h1.max(h2).max(i1 + 1);
                        [ix(i1, h), ix(i1 + 1, h)]
                    } else {
                        let h = h1.max(h2);
                        [ix(i1, h), ix(i2, h)]
                    };
                    let pre = [ix(i1, h1), ix(i2, h2)];
                    if post != pre {
                        transitions.push((pre, post));
                    }
                }
            }
        }
    }
    Ok(Protocol::from_raw(RawProtocol {
        name: format!("robust_min({k})"),
        output_alphabet: Some((1..=k as u64).map(Output::Int).collect()),
        states,
        initial: vec![("x".into(), ix(1, 1))],
        transitions,
    })?)
}

/// A protocol with one state and no transitions. Every agent outputs
/// `output`.
pub fn constant(var: &str, output: Output) -> Result<Protocol, ZooError> {
    Ok(Protocol::from_raw(RawProtocol {
        name: format!("constant({output})"),
        output_alphabet: None,
        states: vec![StateInfo::new("c", output)],
        initial: vec![(var.to_owned(), 0)],
        transitions: Vec::new(),
    })?)
}
