use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Config, ModelError, Output};

/// Name of a protocol state. Unique within one protocol.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateId(String);

impl StateId {
    pub fn new(id: impl Into<String>) -> Self {
        StateId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for StateId {
    fn from(s: &str) -> Self {
        StateId(s.to_owned())
    }
}

/// Position of a state in its protocol's state table.
///
/// States are stored sorted by [`StateId`], so comparing indices of one
/// protocol compares their ids.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateIx(pub u32);

impl StateIx {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A transition `pre ↦ post` on unordered pairs. Both pairs are kept sorted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rule {
    pub pre: [StateIx; 2],
    pub post: [StateIx; 2],
}

impl Rule {
    pub fn new(pre: [StateIx; 2], post: [StateIx; 2]) -> Self {
        Rule {
            pre: sorted_pair(pre),
            post: sorted_pair(post),
        }
    }

    pub fn is_silent(&self) -> bool {
        self.pre == self.post
    }
}

#[inline]
pub(crate) fn sorted_pair([a, b]: [StateIx; 2]) -> [StateIx; 2] {
    if a <= b {
        [a, b]
    } else {
        [b, a]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateInfo {
    pub id: StateId,
    pub output: Output,
    pub meta: Option<Value>,
}

impl StateInfo {
    pub fn new(id: impl Into<String>, output: impl Into<Output>) -> Self {
        StateInfo {
            id: StateId::new(id),
            output: output.into(),
            meta: None,
        }
    }

    pub fn with_meta(mut self, meta: Value) -> Self {
        self.meta = Some(meta);
        self
    }
}

/// Protocol parts addressed by position in `states`, before sorting and
/// validation. Constructors that generate many transitions use this to avoid
/// id lookups.
#[derive(Clone, Debug, Default)]
pub struct RawProtocol {
    pub name: String,
    /// Inferred from the state outputs when `None`.
    pub output_alphabet: Option<Vec<Output>>,
    pub states: Vec<StateInfo>,
    pub initial: Vec<(String, usize)>,
    pub transitions: Vec<([usize; 2], [usize; 2])>,
}

/// A population protocol `(Q, I, O, δ)` over a finite output alphabet.
///
/// Pairs absent from the transition table map to themselves.
#[derive(Clone, Debug, PartialEq)]
pub struct Protocol {
    name: String,
    output_alphabet: Vec<Output>,
    states: Vec<StateInfo>,
    ids: HashMap<StateId, StateIx>,
    initial: BTreeMap<String, StateIx>,
    delta: HashMap<[StateIx; 2], [StateIx; 2]>,
}

impl Protocol {
    pub fn from_raw(raw: RawProtocol) -> Result<Protocol, ModelError> {
        let RawProtocol {
            name,
            output_alphabet,
            states,
            initial,
            transitions,
        } = raw;
        if states.is_empty() {
            return Err(ModelError::NoStates);
        }
        let mut order: Vec<usize> = (0..states.len()).collect();
        order.sort_by(|&a, &b| states[a].id.cmp(&states[b].id));
        let mut remap = vec![StateIx(0); states.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old] = StateIx(new as u32);
        }
        let mut slots: Vec<Option<StateInfo>> = states.into_iter().map(Some).collect();
        let sorted: Vec<StateInfo> = order
            .iter()
            .map(|&old| slots[old].take().expect("each state moved once"))
            .collect();

        let mut ids = HashMap::with_capacity(sorted.len());
        for (i, st) in sorted.iter().enumerate() {
            if st.id.as_str().is_empty() {
                return Err(ModelError::EmptyStateId);
            }
            if ids.insert(st.id.clone(), StateIx(i as u32)).is_some() {
                return Err(ModelError::DuplicateState(st.id.clone()));
            }
        }

        let output_alphabet = match output_alphabet {
            Some(alpha) => {
                let set: BTreeSet<Output> = alpha.into_iter().collect();
                for st in &sorted {
                    if !set.contains(&st.output) {
                        return Err(ModelError::OutputNotInAlphabet {
                            state: st.id.clone(),
                            output: st.output.clone(),
                        });
                    }
                }
                set.into_iter().collect()
            }
            None => sorted
                .iter()
                .map(|st| st.output.clone())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect(),
        };

        let n = sorted.len();
        let check = |i: usize| -> Result<StateIx, ModelError> {
            remap
                .get(i)
                .copied()
                .ok_or_else(|| ModelError::UnknownState(format!("#{i} of {n}")))
        };

        let mut init = BTreeMap::new();
        for (var, i) in initial {
            if init.insert(var.clone(), check(i)?).is_some() {
                return Err(ModelError::DuplicateVariable(var));
            }
        }

        let mut delta = HashMap::with_capacity(transitions.len());
        for ([a, b], [c, d]) in transitions {
            let pre = sorted_pair([check(a)?, check(b)?]);
            let post = sorted_pair([check(c)?, check(d)?]);
            if let Some(prev) = delta.insert(pre, post) {
                if prev != post {
                    return Err(ModelError::ConflictingTransition {
                        pre: [
                            sorted[pre[0].index()].id.clone(),
                            sorted[pre[1].index()].id.clone(),
                        ],
                    });
                }
            }
        }

        Ok(Protocol {
            name,
            output_alphabet,
            states: sorted,
            ids,
            initial: init,
            delta,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn output_alphabet(&self) -> &[Output] {
        &self.output_alphabet
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[StateInfo] {
        &self.states
    }

    pub fn state_indices(&self) -> impl Iterator<Item = StateIx> {
        (0..self.states.len() as u32).map(StateIx)
    }

    pub fn info(&self, q: StateIx) -> &StateInfo {
        &self.states[q.index()]
    }

    pub fn id(&self, q: StateIx) -> &StateId {
        &self.states[q.index()].id
    }

    pub fn output(&self, q: StateIx) -> &Output {
        &self.states[q.index()].output
    }

    pub fn meta(&self, q: StateIx) -> Option<&Value> {
        self.states[q.index()].meta.as_ref()
    }

    /// Looks a state up by id.
    pub fn state(&self, id: &str) -> Result<StateIx, ModelError> {
        self.ids
            .get(&StateId::new(id))
            .copied()
            .ok_or_else(|| ModelError::UnknownState(id.to_owned()))
    }

    pub fn initial(&self) -> &BTreeMap<String, StateIx> {
        &self.initial
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.initial.keys().map(String::as_str)
    }

    /// δ on an unordered pair, with the identity default.
    pub fn delta(&self, a: StateIx, b: StateIx) -> [StateIx; 2] {
        let pre = sorted_pair([a, b]);
        self.delta.get(&pre).copied().unwrap_or(pre)
    }

    /// The non-silent rule with precondition `{a, b}`, if any.
    #[inline]
    pub fn rule_for(&self, a: StateIx, b: StateIx) -> Option<Rule> {
        let pre = sorted_pair([a, b]);
        match self.delta.get(&pre) {
            Some(&post) if post != pre => Some(Rule { pre, post }),
            _ => None,
        }
    }

    /// All non-silent rules, sorted by precondition.
    pub fn rules(&self) -> Vec<Rule> {
        let mut rules: Vec<Rule> = self
            .delta
            .iter()
            .filter(|(pre, post)| pre != post)
            .map(|(&pre, &post)| Rule { pre, post })
            .collect();
        rules.sort();
        rules
    }

    /// Every explicitly stored entry of δ, silent ones included.
    pub fn table(&self) -> Vec<([StateIx; 2], [StateIx; 2])> {
        let mut t: Vec<_> = self.delta.iter().map(|(&a, &b)| (a, b)).collect();
        t.sort();
        t
    }

    pub fn has_rule(&self, rule: &Rule) -> bool {
        self.rule_for(rule.pre[0], rule.pre[1])
            .is_some_and(|r| r.post == rule.post)
    }

    /// `C − pre(t) + post(t)`.
    pub fn apply_step(&self, c: &Config, rule: &Rule) -> Result<Config, ModelError> {
        if !self.has_rule(rule) {
            return Err(ModelError::UnknownRule {
                pre: [self.id(rule.pre[0]).clone(), self.id(rule.pre[1]).clone()],
            });
        }
        if !c.enables(rule.pre) {
            return Err(ModelError::RuleNotEnabled {
                pre: [self.id(rule.pre[0]).clone(), self.id(rule.pre[1]).clone()],
            });
        }
        Ok(c.apply(rule.pre, rule.post))
    }

    /// Non-silent rules enabled in `c`, sorted by precondition.
    pub fn enabled_rules(&self, c: &Config) -> Vec<Rule> {
        let entries = c.entries();
        let mut out = Vec::new();
        for (i, &(a, ca)) in entries.iter().enumerate() {
            if ca >= 2 {
                if let Some(r) = self.rule_for(a, a) {
                    out.push(r);
                }
            }
            for &(b, _) in &entries[i + 1..] {
                if let Some(r) = self.rule_for(a, b) {
                    out.push(r);
                }
            }
        }
        out
    }

    /// One-step successors of `c`, one per enabled non-silent rule.
    pub fn successors(&self, c: &Config) -> Vec<(Rule, Config)> {
        self.enabled_rules(c)
            .into_iter()
            .map(|r| (r, c.apply(r.pre, r.post)))
            .collect()
    }

    /// `Some(r)` when every populated state outputs `r`.
    pub fn consensus_output(&self, c: &Config) -> Result<Option<&Output>, ModelError> {
        let mut support = c.support();
        let first = support.next().ok_or(ModelError::EmptyConfiguration)?;
        let r = self.output(first);
        Ok(support.all(|q| self.output(q) == r).then_some(r))
    }

    /// Places `counts[x]` agents in the initial state of every variable `x`.
    pub fn input_config(&self, input: &Input) -> Result<Config, ModelError> {
        let mut c = Config::new();
        for (var, &n) in input.iter() {
            let q = self
                .initial
                .get(var)
                .ok_or_else(|| ModelError::UnknownVariable(var.to_owned()))?;
            c.add(*q, n);
        }
        Ok(c)
    }

    /// Same protocol with input variable `from` renamed to `to`.
    pub fn rename_variable(&self, from: &str, to: &str) -> Result<Protocol, ModelError> {
        let mut next = self.clone();
        let q = next
            .initial
            .remove(from)
            .ok_or_else(|| ModelError::UnknownVariable(from.to_owned()))?;
        if next.initial.insert(to.to_owned(), q).is_some() {
            return Err(ModelError::DuplicateVariable(to.to_owned()));
        }
        Ok(next)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Protocol {
        self.name = name.into();
        self
    }

    /// Same protocol with every state's output replaced by `f(output)`.
    pub fn map_outputs(
        &self,
        name: impl Into<String>,
        alphabet: Option<Vec<Output>>,
        mut f: impl FnMut(&Output) -> Output,
    ) -> Result<Protocol, ModelError> {
        let mut states = self.states.clone();
        for st in &mut states {
            st.output = f(&st.output);
        }
        let output_alphabet = match alphabet {
            Some(alpha) => {
                let set: BTreeSet<Output> = alpha.into_iter().collect();
                if let Some(st) = states.iter().find(|st| !set.contains(&st.output)) {
                    return Err(ModelError::OutputNotInAlphabet {
                        state: st.id.clone(),
                        output: st.output.clone(),
                    });
                }
                set.into_iter().collect()
            }
            None => states
                .iter()
                .map(|st| st.output.clone())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect(),
        };
        Ok(Protocol {
            name: name.into(),
            output_alphabet,
            states,
            ids: self.ids.clone(),
            initial: self.initial.clone(),
            delta: self.delta.clone(),
        })
    }
}

/// Agent counts per input variable.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Input(BTreeMap<String, u64>);

impl Input {
    pub fn new() -> Self {
        Input::default()
    }

    pub fn single(var: impl Into<String>, n: u64) -> Self {
        let mut m = BTreeMap::new();
        m.insert(var.into(), n);
        Input(m)
    }

    pub fn set(&mut self, var: impl Into<String>, n: u64) {
        self.0.insert(var.into(), n);
    }

    pub fn with(mut self, var: impl Into<String>, n: u64) -> Self {
        self.set(var, n);
        self
    }

    /// Count for `var`; absent variables count 0.
    pub fn get(&self, var: &str) -> u64 {
        self.0.get(var).copied().unwrap_or(0)
    }

    pub fn size(&self) -> u64 {
        self.0.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &u64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn as_map(&self) -> &BTreeMap<String, u64> {
        &self.0
    }

    /// Parses `x=5,y=3`.
    pub fn parse(text: &str) -> Result<Input, ModelError> {
        let mut input = Input::new();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (var, n) = part
                .split_once('=')
                .ok_or_else(|| ModelError::BadInput(part.to_owned()))?;
            let var = var.trim();
            let n: u64 = n
                .trim()
                .parse()
                .map_err(|_| ModelError::BadInput(part.to_owned()))?;
            if var.is_empty() || input.0.insert(var.to_owned(), n).is_some() {
                return Err(ModelError::BadInput(part.to_owned()));
            }
        }
        Ok(input)
    }
}

impl FromIterator<(String, u64)> for Input {
    fn from_iter<T: IntoIterator<Item = (String, u64)>>(iter: T) -> Self {
        Input(iter.into_iter().collect())
    }
}

impl fmt::Display for Input {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}
