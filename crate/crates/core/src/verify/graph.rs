use indexmap::IndexSet;

use super::VerifyError;
use crate::model::{Config, Event, Protocol, Rule, StateIx, Trace};

/// Configurations reachable from an initial configuration by steps and at
/// most `snipe_budget` snipes.
///
/// Nodes are numbered in BFS order from the root (node 0). A node's snipe
/// layer is determined by its size: `layer = |A| - |C|`.
#[derive(Clone, Debug)]
pub struct ReachGraph {
    nodes: IndexSet<Config>,
    root_size: u64,
    snipe_budget: usize,
    step_offsets: Vec<usize>,
    step_targets: Vec<u32>,
    step_rules: Vec<Rule>,
    snipe_edges: Vec<(u32, u32, StateIx)>,
    parent: Vec<Option<(u32, Event)>>,
}

impl ReachGraph {
    /// BFS closure of `root`. Fails with `ResourceExceeded` as soon as more
    /// than `node_limit` nodes would be stored.
    pub fn explore(
        p: &Protocol,
        root: Config,
        snipe_budget: usize,
        node_limit: usize,
    ) -> Result<ReachGraph, VerifyError> {
        if root.is_empty() {
            return Err(VerifyError::EmptyInput);
        }
        if node_limit == 0 {
            return Err(VerifyError::ResourceExceeded { limit: node_limit });
        }
        let root_size = root.size();
        let mut g = ReachGraph {
            nodes: IndexSet::new(),
            root_size,
            snipe_budget,
            step_offsets: vec![0],
            step_targets: Vec::new(),
            step_rules: Vec::new(),
            snipe_edges: Vec::new(),
            parent: vec![None],
        };
        g.nodes.insert(root);
        let mut i = 0;
        while i < g.nodes.len() {
            let c = g.nodes[i].clone();
            for (rule, next) in p.successors(&c) {
                let j = g.intern(next, i, Event::Step(rule), node_limit)?;
                g.step_targets.push(j);
                g.step_rules.push(rule);
            }
            g.step_offsets.push(g.step_targets.len());
            if g.layer_of_size(c.size()) < snipe_budget && !c.is_empty() {
                for q in c.support() {
                    let next = c.snipe(q)?;
                    let j = g.intern(next, i, Event::Snipe(q), node_limit)?;
                    g.snipe_edges.push((i as u32, j, q));
                }
            }
            i += 1;
        }
        Ok(g)
    }

    fn intern(
        &mut self,
        c: Config,
        from: usize,
        via: Event,
        node_limit: usize,
    ) -> Result<u32, VerifyError> {
        if let Some(j) = self.nodes.get_index_of(&c) {
            return Ok(j as u32);
        }
        if self.nodes.len() >= node_limit {
            return Err(VerifyError::ResourceExceeded { limit: node_limit });
        }
        let (j, _) = self.nodes.insert_full(c);
        self.parent.push(Some((from as u32, via)));
        Ok(j as u32)
    }

    fn layer_of_size(&self, size: u64) -> usize {
        (self.root_size - size) as usize
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> &Config {
        &self.nodes[0]
    }

    pub fn node(&self, i: usize) -> &Config {
        &self.nodes[i]
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Config> {
        self.nodes.iter()
    }

    pub fn index_of(&self, c: &Config) -> Option<usize> {
        self.nodes.get_index_of(c)
    }

    pub fn snipe_budget(&self) -> usize {
        self.snipe_budget
    }

    /// Snipes used to reach node `i`.
    pub fn layer(&self, i: usize) -> usize {
        self.layer_of_size(self.nodes[i].size())
    }

    /// Number of distinct layers present.
    pub fn num_layers(&self) -> usize {
        self.nodes
            .iter()
            .map(|c| self.layer_of_size(c.size()))
            .max()
            .map_or(0, |m| m + 1)
    }

    /// Step successors of node `i` (one entry per non-silent enabled rule).
    pub fn steps(&self, i: usize) -> impl Iterator<Item = (Rule, usize)> + '_ {
        let range = self.step_offsets[i]..self.step_offsets[i + 1];
        self.step_rules[range.clone()]
            .iter()
            .copied()
            .zip(self.step_targets[range].iter().map(|&j| j as usize))
    }

    pub fn step_targets(&self, i: usize) -> &[u32] {
        &self.step_targets[self.step_offsets[i]..self.step_offsets[i + 1]]
    }

    pub fn num_step_edges(&self) -> usize {
        self.step_targets.len()
    }

    /// `(from, to, sniped state)`.
    pub fn snipe_edges(&self) -> &[(u32, u32, StateIx)] {
        &self.snipe_edges
    }

    /// BFS-tree path from the root to node `i`.
    pub fn trace_to(&self, p: &Protocol, i: usize) -> Result<Trace, VerifyError> {
        let mut events = Vec::new();
        let mut at = i;
        while let Some((from, e)) = self.parent[at] {
            events.push(e);
            at = from as usize;
        }
        let mut t = Trace::start(self.root().clone());
        for e in events.into_iter().rev() {
            t.push(p, e)?;
        }
        Ok(t)
    }

    /// Strongly connected components of the step-only graph.
    pub fn step_sccs(&self) -> Sccs {
        tarjan(self.len(), |v| {
            self.step_targets(v).iter().map(|&w| w as usize)
        })
    }

    /// Indices of the bottom SCCs of the step-only graph.
    pub fn bottom_sccs(&self, sccs: &Sccs) -> Vec<usize> {
        let mut bottom = vec![true; sccs.count];
        for v in 0..self.len() {
            let cv = sccs.component[v];
            if self
                .step_targets(v)
                .iter()
                .any(|&w| sccs.component[w as usize] != cv)
            {
                bottom[cv] = false;
            }
        }
        (0..sccs.count).filter(|&c| bottom[c]).collect()
    }
}

/// SCC decomposition: `component[v]` is the SCC index of vertex `v`.
/// Components are numbered in reverse topological order (sinks first).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sccs {
    pub count: usize,
    pub component: Vec<usize>,
}

impl Sccs {
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.count];
        for (v, &c) in self.component.iter().enumerate() {
            out[c].push(v);
        }
        out
    }
}

/// Iterative Tarjan over vertices `0..n`.
pub fn tarjan<I, F>(n: usize, succ: F) -> Sccs
where
    F: Fn(usize) -> I,
    I: Iterator<Item = usize>,
{
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut component = vec![UNSEEN; n];
    let mut stack = Vec::new();
    let mut call: Vec<(usize, I)> = Vec::new();
    let mut next_index = 0;
    let mut count = 0;

    for start in 0..n {
        if index[start] != UNSEEN {
            continue;
        }
        index[start] = next_index;
        low[start] = next_index;
        next_index += 1;
        stack.push(start);
        on_stack[start] = true;
        call.push((start, succ(start)));

        while let Some((v, iter)) = call.last_mut() {
            let v = *v;
            if let Some(w) = iter.next() {
                if index[w] == UNSEEN {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, succ(w)));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some((u, _)) = call.last() {
                low[*u] = low[*u].min(low[v]);
            }
            if low[v] == index[v] {
                loop {
                    let w = stack.pop().expect("tarjan stack holds v");
                    on_stack[w] = false;
                    component[w] = count;
                    if w == v {
                        break;
                    }
                }
                count += 1;
            }
        }
    }
    Sccs { count, component }
}
