//! Parallel composition `P_f × P_g`.
//!
//! Every agent runs one side and stores the last known output of the other
//! side. Same-side pairs run their own δ (resetting the stored value to the
//! other side's zero output when they disagree on it); cross pairs copy each
//! other's current output.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use serde_json::{json, Value};

use super::{ZooError, MAX_STATES};
use crate::model::{Output, Protocol, RawProtocol, StateInfo, StateIx};

/// Declared codomain of a computed function and its value on the zero input.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionSpec {
    codomain: BTreeSet<Output>,
    zero_value: Output,
}

impl FunctionSpec {
    pub fn new(
        codomain: impl IntoIterator<Item = Output>,
        zero_value: Output,
    ) -> Result<Self, ZooError> {
        let codomain: BTreeSet<Output> = codomain.into_iter().collect();
        if !codomain.contains(&zero_value) {
            return Err(ZooError::ZeroOutsideCodomain(zero_value));
        }
        Ok(FunctionSpec {
            codomain,
            zero_value,
        })
    }

    pub fn codomain(&self) -> &BTreeSet<Output> {
        &self.codomain
    }

    pub fn zero_value(&self) -> &Output {
        &self.zero_value
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    F,
    G,
}

impl Side {
    fn tag(self) -> &'static str {
        match self {
            Side::F => "f",
            Side::G => "g",
        }
    }
}

/// `|Q_f|·|G'| + |Q_g|·|F'|`.
pub fn compose_state_count(
    f_states: &BigUint,
    f_codomain: usize,
    g_states: &BigUint,
    g_codomain: usize,
) -> BigUint {
    f_states * BigUint::from(g_codomain) + g_states * BigUint::from(f_codomain)
}

fn check_codomain(p: &Protocol, spec: &FunctionSpec) -> Result<(), ZooError> {
    for st in p.states() {
        if !spec.codomain.contains(&st.output) {
            return Err(ZooError::CodomainMismatch {
                state: st.id.to_string(),
                output: st.output.clone(),
            });
        }
    }
    Ok(())
}

struct Slot {
    side: Side,
    inner: StateIx,
    stored: usize,
}

pub fn parallel_compose(
    pf: &Protocol,
    sf: &FunctionSpec,
    pg: &Protocol,
    sg: &FunctionSpec,
) -> Result<Protocol, ZooError> {
    if let Some(var) = pf.variables().find(|v| pg.initial().contains_key(*v)) {
        return Err(ZooError::VariableClash(var.to_owned()));
    }
    check_codomain(pf, sf)?;
    check_codomain(pg, sg)?;
    let f_store: Vec<&Output> = sg.codomain.iter().collect();
    let g_store: Vec<&Output> = sf.codomain.iter().collect();
    let total = pf.num_states() * f_store.len() + pg.num_states() * g_store.len();
    if total as u64 > MAX_STATES {
        return Err(ZooError::TooLarge {
            states: total.to_string(),
            limit: MAX_STATES,
        });
    }

    let f_base = 0;
    let g_base = pf.num_states() * f_store.len();
    let index = |side: Side, inner: StateIx, stored: usize| match side {
        Side::F => f_base + inner.index() * f_store.len() + stored,
        Side::G => g_base + inner.index() * g_store.len() + stored,
    };
    let pos_in = |store: &[&Output], o: &Output| {
        store
            .iter()
            .position(|s| *s == o)
            .expect("outputs checked against codomain")
    };

    let mut slots = Vec::with_capacity(total);
    let mut states = Vec::with_capacity(total);
    for (side, p, store) in [(Side::F, pf, &f_store), (Side::G, pg, &g_store)] {
        for q in p.state_indices() {
            for (k, stored) in store.iter().enumerate() {
                let own = p.output(q).clone();
                let output = match side {
                    Side::F => Output::pair(own, (*stored).clone()),
                    Side::G => Output::pair((*stored).clone(), own),
                };
                let meta = json!({
                    "side": side.tag(),
                    "inner": p.meta(q).cloned().unwrap_or(Value::Null),
                    "inner_id": p.id(q).as_str(),
                    "stored": stored,
                });
                states.push(
                    StateInfo::new(format!("{}|{}|{}", side.tag(), p.id(q), stored), output)
                        .with_meta(meta),
                );
                slots.push(Slot {
                    side,
                    inner: q,
                    stored: k,
                });
            }
        }
    }

    let f_zero = pos_in(&g_store, &sf.zero_value);
    let g_zero = pos_in(&f_store, &sg.zero_value);
    let mut transitions = Vec::new();
    for a in 0..total {
        for b in a..total {
            let (x, y) = (&slots[a], &slots[b]);
            let post = if x.side == y.side {
                let (p, reset) = match x.side {
                    Side::F => (pf, g_zero),
                    Side::G => (pg, f_zero),
                };
                let [q1, q2] = p.delta(x.inner, y.inner);
                let o = if x.stored == y.stored {
                    x.stored
                } else {
                    reset
                };
                [index(x.side, q1, o), index(x.side, q2, o)]
            } else {
                let (fs, gs) = if x.side == Side::F { (x, y) } else { (y, x) };
                let of = pos_in(&g_store, pf.output(fs.inner));
                let og = pos_in(&f_store, pg.output(gs.inner));
                [index(Side::F, fs.inner, og), index(Side::G, gs.inner, of)]
            };
            let mut sorted = post;
            sorted.sort();
            if sorted != [a, b] {
                transitions.push(([a, b], post));
            }
        }
    }

    let mut initial = Vec::new();
    for (var, &q) in pf.initial() {
        initial.push((var.clone(), index(Side::F, q, g_zero)));
    }
    for (var, &q) in pg.initial() {
        initial.push((var.clone(), index(Side::G, q, f_zero)));
    }
    Ok(Protocol::from_raw(RawProtocol {
        name: format!("{} x {}", pf.name(), pg.name()),
        output_alphabet: None,
        states,
        initial,
        transitions,
    })?)
}

/// Left fold of [`parallel_compose`]. The output tuples of the result are
/// flattened to one entry per component.
pub fn compose_all(
    parts: Vec<(Protocol, FunctionSpec)>,
) -> Result<(Protocol, FunctionSpec), ZooError> {
    let n = parts.len();
    let mut iter = parts.into_iter();
    let (mut acc, mut spec) = iter
        .next()
        .ok_or_else(|| ZooError::InvalidParameter("nothing to compose".into()))?;
    for (p, s) in iter {
        acc = parallel_compose(&acc, &spec, &p, &s)?;
        let codomain = spec.codomain.iter().flat_map(|a| {
            s.codomain
                .iter()
                .map(move |b| Output::pair(a.clone(), b.clone()))
        });
        spec = FunctionSpec::new(
            codomain,
            Output::pair(spec.zero_value.clone(), s.zero_value.clone()),
        )?;
    }
    if n <= 2 {
        return Ok((acc, spec));
    }
    let depth = n - 1;
    let flat = acc.map_outputs(acc.name().to_owned(), None, |o| o.flatten_left(depth))?;
    let flat_spec = FunctionSpec::new(
        spec.codomain.iter().map(|o| o.flatten_left(depth)),
        spec.zero_value.flatten_left(depth),
    )?;
    Ok((flat, flat_spec))
}
