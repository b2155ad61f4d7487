use std::collections::BTreeSet;

use serde_json::Value;

use super::SimError;
use crate::model::{Config, Protocol, StateIx};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AgentState {
    Live(StateIx),
    /// Sniped; terminal.
    Tombstone,
}

/// State changes caused by one interaction or one snipe.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LedgerEvent {
    pub tick: u64,
    pub changes: Vec<(usize, AgentState)>,
}

/// Per-agent state history. Agent ids are `0..population`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AgentLedger {
    initial: Vec<StateIx>,
    events: Vec<LedgerEvent>,
}

impl AgentLedger {
    pub fn new(initial: impl IntoIterator<Item = StateIx>) -> Self {
        AgentLedger {
            initial: initial.into_iter().collect(),
            events: Vec::new(),
        }
    }

    pub(crate) fn record(&mut self, tick: u64, changes: Vec<(usize, AgentState)>) {
        self.events.push(LedgerEvent { tick, changes });
    }

    pub fn population(&self) -> usize {
        self.initial.len()
    }

    pub fn initial(&self) -> &[StateIx] {
        &self.initial
    }

    pub fn events(&self) -> &[LedgerEvent] {
        &self.events
    }

    /// `(tick, state)` pairs of one agent, starting with its initial state
    /// at tick 0.
    pub fn history(&self, agent: usize) -> Vec<(u64, AgentState)> {
        let mut out = vec![(0, AgentState::Live(self.initial[agent]))];
        for e in &self.events {
            for &(a, s) in &e.changes {
                if a == agent {
                    out.push((e.tick, s));
                }
            }
        }
        out
    }

    /// Agent states after every event, starting with the initial ones.
    pub fn snapshots(&self) -> impl Iterator<Item = (Option<&LedgerEvent>, Vec<AgentState>)> + '_ {
        let mut cur: Vec<AgentState> = self.initial.iter().map(|&q| AgentState::Live(q)).collect();
        std::iter::once((None, cur.clone())).chain(self.events.iter().map(move |e| {
            for &(a, s) in &e.changes {
                cur[a] = s;
            }
            (Some(e), cur.clone())
        }))
    }

    /// Final states.
    pub fn current(&self) -> Vec<AgentState> {
        self.snapshots()
            .last()
            .expect("at least the initial snapshot")
            .1
    }

    pub fn tombstones(&self) -> usize {
        self.current()
            .iter()
            .filter(|s| **s == AgentState::Tombstone)
            .count()
    }

    pub fn live(&self) -> usize {
        self.population() - self.tombstones()
    }

    pub fn config(states: &[AgentState]) -> Config {
        let mut c = Config::new();
        for s in states {
            if let AgentState::Live(q) = s {
                c.add(*q, 1);
            }
        }
        c
    }
}

/// `level` from a state's metadata, looking through composition wrappers.
pub fn meta_level(p: &Protocol, q: StateIx) -> Option<u64> {
    let mut m = p.meta(q)?;
    loop {
        if let Some(l) = m.get("level").and_then(Value::as_u64) {
            return Some(l);
        }
        m = m.get("inner")?;
    }
}

fn meta_u64(m: &Value, key: &str) -> Option<u64> {
    m.get(key).and_then(Value::as_u64)
}

struct ModMeta {
    level: u64,
    vector: Vec<u64>,
    modulus: u64,
}

fn mod_meta(p: &Protocol, q: StateIx) -> Result<ModMeta, SimError> {
    let m = p.meta(q).ok_or(SimError::NotAModProtocol)?;
    let vector = m
        .get("vector")
        .and_then(Value::as_array)
        .ok_or(SimError::NotAModProtocol)?
        .iter()
        .map(|v| v.as_u64().ok_or(SimError::NotAModProtocol))
        .collect::<Result<Vec<u64>, _>>()?;
    Ok(ModMeta {
        level: meta_u64(m, "level").ok_or(SimError::NotAModProtocol)?,
        modulus: meta_u64(m, "modulus").ok_or(SimError::NotAModProtocol)?,
        vector,
    })
}

/// Value vector `V` and output vector `Ω` of a configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModDiagnostics {
    /// `V_i = Σ_{agents at level i} u_i mod m`, for `i = 1..=c`.
    pub value: Vec<u64>,
    /// `(V + (0, 1, ..., c-1)) mod m`.
    pub output: Vec<u64>,
}

pub fn mod_diagnostics(p: &Protocol, c: &Config) -> Result<ModDiagnostics, SimError> {
    let any = p.state_indices().next().ok_or(SimError::NotAModProtocol)?;
    let shape = mod_meta(p, any)?;
    let (len, m) = (shape.vector.len(), shape.modulus);
    let mut value = vec![0u64; len];
    for &(q, n) in c.entries() {
        let meta = mod_meta(p, q)?;
        let i = meta.level as usize;
        if (1..=len).contains(&i) {
            value[i - 1] = (value[i - 1] + u64::from(n) * (meta.vector[i - 1] % m)) % m;
        }
    }
    let output = value
        .iter()
        .enumerate()
        .map(|(i, v)| (v + i as u64) % m)
        .collect();
    Ok(ModDiagnostics { value, output })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InvariantViolation {
    pub tick: u64,
    pub level: usize,
    pub detail: String,
}

/// Checks after every ledger event that `V_i ≡ |{agents ever at level i}|
/// (mod m)` for each level `i ≤ c` where no agent has been sniped.
/// Returns the number of (event, level) pairs checked.
pub fn check_mod_invariant(
    p: &Protocol,
    ledger: &AgentLedger,
) -> Result<usize, InvariantViolation> {
    let meta = |q| mod_meta(p, q).expect("mod protocol metadata");
    let (len, m) = {
        let first = meta(ledger.initial()[0]);
        (first.vector.len(), first.modulus)
    };
    let mut ever: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); len + 1];
    let mut sniped = vec![false; len + 1];
    let mut prev: Option<Vec<AgentState>> = None;
    let mut checked = 0;
    for (event, states) in ledger.snapshots() {
        if let (Some(e), Some(before)) = (event, &prev) {
            for &(a, s) in &e.changes {
                if let (AgentState::Tombstone, AgentState::Live(q)) = (s, before[a]) {
                    let level = meta(q).level as usize;
                    if level <= len {
                        sniped[level] = true;
                    }
                }
            }
        }
        for (a, s) in states.iter().enumerate() {
            if let AgentState::Live(q) = s {
                let level = meta(*q).level as usize;
                if level <= len {
                    ever[level].insert(a);
                }
            }
        }
        let diag = mod_diagnostics(p, &AgentLedger::config(&states)).expect("mod protocol");
        let tick = event.map_or(0, |e| e.tick);
        for i in 1..=len {
            if sniped[i] {
                continue;
            }
            checked += 1;
            let expected = ever[i].len() as u64 % m;
            if diag.value[i - 1] != expected {
                return Err(InvariantViolation {
                    tick,
                    level: i,
                    detail: format!(
                        "V_{i} = {} but {} agents have visited level {i}",
                        diag.value[i - 1],
                        ever[i].len()
                    ),
                });
            }
        }
        prev = Some(states);
    }
    Ok(checked)
}

/// Snipe-free robust_min runs: every agent's knowledge is at least its
/// level, and no level exceeds the population.
pub fn check_min_invariant(p: &Protocol, ledger: &AgentLedger) -> Result<(), InvariantViolation> {
    let n = ledger.population() as u64;
    for (event, states) in ledger.snapshots() {
        let tick = event.map_or(0, |e| e.tick);
        for s in &states {
            let AgentState::Live(q) = s else { continue };
            let m = p.meta(*q).expect("robust_min metadata");
            let level = meta_u64(m, "level").expect("level");
            let knowledge = meta_u64(m, "knowledge").expect("knowledge");
            if knowledge < level || level > n {
                return Err(InvariantViolation {
                    tick,
                    level: level as usize,
                    detail: format!(
                        "state {} has knowledge {knowledge}, population {n}",
                        p.id(*q)
                    ),
                });
            }
        }
    }
    Ok(())
}
