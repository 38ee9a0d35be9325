//! Cardinality-constrained maximum-weight independent set.
//!
//! Exact depth-first branch and bound. Vertices are decided in ascending
//! index order; at each node the search first stops, then includes the next
//! vertex, then excludes it. That visits feasible sets in lexicographic order
//! of their sorted index sequences, so the first optimum reached is the
//! lexicographically smallest one. Subtrees are cut with the bound "current
//! value + the heaviest positive remaining weights that still fit".
//!
//! Lexicographic order makes zero-weight UEs part of the answer when they sit
//! below a selected positive-weight UE; callers that do not want them active
//! pass them in `forced_zero`.

use crate::association::ConflictGraph;

/// Default limit on explored search nodes before the incumbent is returned.
pub const DEFAULT_NODE_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Selected UEs, ascending.
    pub set: Vec<usize>,
    pub value: f64,
    /// False when the node budget ran out before optimality was proven.
    pub optimal: bool,
    pub nodes: u64,
}

fn tolerance(x: f64) -> f64 {
    1e-9 * (1.0 + x.abs())
}

struct Search<'a> {
    weights: Vec<f64>,
    adj: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
    by_weight: Vec<usize>,
    blocked: Vec<u32>,
    chosen: Vec<usize>,
    best: Vec<usize>,
    best_value: f64,
    best_from_search: bool,
    nodes: u64,
    budget: u64,
    aborted: bool,
    _graph: std::marker::PhantomData<&'a ()>,
}

impl Search<'_> {
    fn available(&self, v: usize, pos: usize) -> bool {
        v >= pos && self.blocked[v] == 0
    }

    fn accept(&mut self, value: f64, extra: &[usize]) {
        let better = if self.best_from_search {
            value > self.best_value + tolerance(self.best_value)
        } else {
            value >= self.best_value - tolerance(self.best_value)
        };
        if better {
            self.best.clear();
            self.best.extend_from_slice(&self.chosen);
            self.best.extend_from_slice(extra);
            self.best_value = value;
            self.best_from_search = true;
        }
    }

    fn prune(&self, bound: f64) -> bool {
        if self.best_from_search {
            bound <= self.best_value + tolerance(self.best_value)
        } else {
            bound < self.best_value - tolerance(self.best_value)
        }
    }

    fn explore(&mut self, pos: usize, room: usize, value: f64) {
        self.nodes += 1;
        if self.nodes > self.budget {
            self.aborted = true;
            return;
        }
        let n = self.weights.len();
        let mut pos = pos;
        while pos < n && self.blocked[pos] > 0 {
            pos += 1;
        }
        self.accept(value, &[]);
        if room == 0 || pos == n {
            return;
        }

        // heaviest positive available vertices that fit
        let mut top = Vec::with_capacity(room);
        let mut bound = value;
        for &v in &self.by_weight {
            if top.len() == room || !(self.weights[v] > 0.0) {
                break;
            }
            if self.available(v, pos) {
                top.push(v);
                bound += self.weights[v];
            }
        }
        if self.prune(bound) {
            return;
        }

        let live_edges = self
            .edges
            .iter()
            .any(|&(a, b)| self.available(a, pos) && self.available(b, pos));
        if !live_edges {
            // no constraints left: the heaviest positive vertices (lowest index
            // among equal weights), then zero-weight vertices below the largest
            // of them, smallest first
            if let Some(&last) = top.iter().max() {
                let mut completion = top.clone();
                for z in pos..last {
                    if completion.len() == room {
                        break;
                    }
                    if !(self.weights[z] > 0.0) && self.available(z, pos) {
                        completion.push(z);
                    }
                }
                self.accept(bound, &completion);
            }
            return;
        }

        let v = pos;
        let free = self.adj[v].iter().all(|&u| !self.available(u, pos));
        let dominant = free && self.weights[v] > 0.0 && {
            let wv = self.weights[v];
            let heavier = self
                .by_weight
                .iter()
                .take_while(|&&u| self.weights[u] >= wv)
                .filter(|&&u| u != v && self.available(u, pos))
                .count();
            heavier < room
        };

        // include v
        self.chosen.push(v);
        for i in 0..self.adj[v].len() {
            let u = self.adj[v][i];
            self.blocked[u] += 1;
        }
        self.explore(pos + 1, room - 1, value + self.weights[v]);
        for i in 0..self.adj[v].len() {
            let u = self.adj[v][i];
            self.blocked[u] -= 1;
        }
        self.chosen.pop();
        if self.aborted || dominant {
            return;
        }

        // exclude v
        self.explore(pos + 1, room, value);
    }
}

/// Maximizes the total weight of a set of at most `cap` UEs that is
/// independent in `graph` and avoids `forced_zero`.
///
/// Among optimal sets the lexicographically smallest sorted index sequence
/// is returned. Weights must be nonnegative.
pub fn solve_selection(
    weights: &[f64],
    graph: &ConflictGraph,
    cap: usize,
    forced_zero: &[usize],
) -> Selection {
    solve_selection_with_budget(weights, graph, cap, forced_zero, DEFAULT_NODE_BUDGET)
}

pub fn solve_selection_with_budget(
    weights: &[f64],
    graph: &ConflictGraph,
    cap: usize,
    forced_zero: &[usize],
    budget: u64,
) -> Selection {
    let n = weights.len();
    let mut excluded = vec![false; n];
    for &k in forced_zero {
        if k < n {
            excluded[k] = true;
        }
    }
    let candidates: Vec<usize> = (0..n).filter(|&k| !excluded[k]).collect();
    let mut local = vec![usize::MAX; n];
    for (i, &k) in candidates.iter().enumerate() {
        local[k] = i;
    }
    let local_weights: Vec<f64> = candidates
        .iter()
        .map(|&k| {
            debug_assert!(weights[k] >= 0.0, "negative weight for UE {k}");
            weights[k].max(0.0)
        })
        .collect();
    let c = candidates.len();
    let mut adj = vec![Vec::new(); c];
    let mut edges = Vec::new();
    for (a, b) in graph.edges() {
        if a >= n || b >= n {
            continue;
        }
        let (la, lb) = (local[a], local[b]);
        if la != usize::MAX && lb != usize::MAX {
            adj[la].push(lb);
            adj[lb].push(la);
            edges.push((la, lb));
        }
    }
    let mut by_weight: Vec<usize> = (0..c).collect();
    by_weight.sort_by(|&a, &b| local_weights[b].total_cmp(&local_weights[a]).then(a.cmp(&b)));

    // greedy incumbent
    let mut greedy = Vec::new();
    let mut taken = vec![false; c];
    let mut greedy_value = 0.0;
    for &v in &by_weight {
        if greedy.len() == cap || !(local_weights[v] > 0.0) {
            break;
        }
        if adj[v].iter().all(|&u| !taken[u]) {
            taken[v] = true;
            greedy.push(v);
            greedy_value += local_weights[v];
        }
    }

    let mut search = Search {
        weights: local_weights,
        adj,
        edges,
        by_weight,
        blocked: vec![0; c],
        chosen: Vec::new(),
        best: greedy,
        best_value: greedy_value,
        best_from_search: false,
        nodes: 0,
        budget,
        aborted: false,
        _graph: std::marker::PhantomData,
    };
    search.explore(0, cap, 0.0);

    let mut set: Vec<usize> = search.best.iter().map(|&i| candidates[i]).collect();
    set.sort_unstable();
    let value = set.iter().map(|&k| weights[k].max(0.0)).sum();
    Selection {
        set,
        value,
        optimal: !search.aborted,
        nodes: search.nodes,
    }
}
