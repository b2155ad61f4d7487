use super::{ModelError, StateIx};

/// A configuration: a multiset of states, stored as `(state, count)` entries
/// sorted by state with every count positive.
///
/// The entry list is canonical, so derived equality and hashing coincide
/// with multiset equality.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Config {
    entries: Vec<(StateIx, u32)>,
}

impl Config {
    pub fn new() -> Self {
        Config::default()
    }

    pub fn from_counts(counts: impl IntoIterator<Item = (StateIx, u64)>) -> Self {
        let mut c = Config::new();
        for (q, n) in counts {
            c.add(q, n);
        }
        c
    }

    /// `n` agents in state `q`.
    pub fn uniform(q: StateIx, n: u64) -> Self {
        Config::from_counts([(q, n)])
    }

    pub fn entries(&self) -> &[(StateIx, u32)] {
        &self.entries
    }

    pub fn size(&self) -> u64 {
        self.entries.iter().map(|&(_, n)| n as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, q: StateIx) -> u32 {
        match self.entries.binary_search_by_key(&q, |&(s, _)| s) {
            Ok(i) => self.entries[i].1,
            Err(_) => 0,
        }
    }

    pub fn support(&self) -> impl Iterator<Item = StateIx> + '_ {
        self.entries.iter().map(|&(q, _)| q)
    }

    pub fn add(&mut self, q: StateIx, n: u64) {
        if n == 0 {
            return;
        }
        let n = u32::try_from(n).expect("agent count fits in u32");
        match self.entries.binary_search_by_key(&q, |&(s, _)| s) {
            Ok(i) => self.entries[i].1 += n,
            Err(i) => self.entries.insert(i, (q, n)),
        }
    }

    fn remove(&mut self, q: StateIx) -> bool {
        match self.entries.binary_search_by_key(&q, |&(s, _)| s) {
            Ok(i) => {
                if self.entries[i].1 == 1 {
                    self.entries.remove(i);
                } else {
                    self.entries[i].1 -= 1;
                }
                true
            }
            Err(_) => false,
        }
    }

    /// `C ≥ pre`.
    #[inline]
    pub fn enables(&self, pre: [StateIx; 2]) -> bool {
        if pre[0] == pre[1] {
            self.count(pre[0]) >= 2
        } else {
            self.count(pre[0]) >= 1 && self.count(pre[1]) >= 1
        }
    }

    /// `C − pre + post`. The caller guarantees `C ≥ pre`.
    pub(crate) fn apply(&self, pre: [StateIx; 2], post: [StateIx; 2]) -> Config {
        let mut next = self.clone();
        let ok = next.remove(pre[0]) && next.remove(pre[1]);
        debug_assert!(ok, "apply called on a configuration not enabling pre");
        next.add(post[0], 1);
        next.add(post[1], 1);
        next
    }

    /// Removes one agent from `q`.
    pub fn snipe(&self, q: StateIx) -> Result<Config, ModelError> {
        let mut next = self.clone();
        if next.remove(q) {
            Ok(next)
        } else {
            Err(ModelError::StateNotPopulated(q))
        }
    }

    /// `self ≤ other` as multisets.
    pub fn is_sub_of(&self, other: &Config) -> bool {
        self.entries.iter().all(|&(q, n)| other.count(q) >= n)
    }
}
