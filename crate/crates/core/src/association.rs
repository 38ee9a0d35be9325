//! User-centric clusters, pilot assignment and the conflict graph.
//!
//! Two UEs conflict when they share an RU, use the same pilot and have
//! non-orthogonal channel subspaces at some shared RU. Conflicting UEs must
//! not be active in the same slot.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::geometry::LargeScaleState;

#[derive(Debug, Clone, PartialEq)]
pub struct Association {
    /// RUs serving each UE, ascending.
    pub clusters: Vec<Vec<usize>>,
    /// UEs served by each RU, ascending.
    pub served: Vec<Vec<usize>>,
    /// Pilot index per UE (0-based).
    pub pilots: Vec<Option<usize>>,
}

impl Association {
    /// Builds the association from per-UE clusters; pilots start unassigned.
    pub fn from_clusters(num_rus: usize, mut clusters: Vec<Vec<usize>>) -> Self {
        let mut served = vec![Vec::new(); num_rus];
        for (k, cluster) in clusters.iter_mut().enumerate() {
            cluster.sort_unstable();
            cluster.dedup();
            for &l in cluster.iter() {
                served[l].push(k);
            }
        }
        let pilots = vec![None; clusters.len()];
        Association {
            clusters,
            served,
            pilots,
        }
    }

    pub fn num_users(&self) -> usize {
        self.clusters.len()
    }

    /// UEs with a non-empty cluster; the others are never scheduled.
    pub fn is_schedulable(&self, k: usize) -> bool {
        !self.clusters[k].is_empty()
    }

    pub fn unserved(&self) -> Vec<usize> {
        (0..self.num_users()).filter(|&k| !self.is_schedulable(k)).collect()
    }

    /// RUs shared by two UEs.
    pub fn shared_rus(&self, a: usize, b: usize) -> impl Iterator<Item = usize> + '_ {
        let cb = &self.clusters[b];
        self.clusters[a]
            .iter()
            .copied()
            .filter(move |l| cb.binary_search(l).is_ok())
    }
}

/// Forms clusters from the `cluster_max` strongest RUs above the association
/// threshold `eta / (M snr)`. Ties go to the lower RU index.
pub fn form_clusters(lss: &LargeScaleState, config: &SimConfig) -> Association {
    let threshold = config.eta / (config.antennas as f64 * lss.snr);
    let clusters = (0..lss.num_users)
        .map(|k| {
            let mut candidates: Vec<usize> = (0..lss.num_rus)
                .filter(|&l| lss.beta(l, k) >= threshold)
                .collect();
            candidates.sort_by(|&a, &b| lss.beta(b, k).total_cmp(&lss.beta(a, k)).then(a.cmp(&b)));
            candidates.truncate(config.cluster_max);
            candidates
        })
        .collect();
    Association::from_clusters(lss.num_rus, clusters)
}

fn intersection_size(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Frobenius norm of the cross-Gram of two sets of orthonormal DFT columns,
/// i.e. `sqrt(|A ∩ B|)`. Both supports must be sorted.
pub fn subspace_overlap(a: &[usize], b: &[usize]) -> f64 {
    (intersection_size(a, b) as f64).sqrt()
}

fn overlaps(lss: &LargeScaleState, l: usize, a: usize, b: usize, eta_f: f64) -> bool {
    subspace_overlap(lss.support(l, a), lss.support(l, b)) > eta_f
}

/// Greedy minimum-conflict pilot assignment of the UEs in `order`.
///
/// Each UE takes the pilot with the fewest already-assigned conflicting UEs
/// among those served by its RUs, ties going to the smallest pilot index.
/// Only UEs in `order` are assigned and counted.
pub fn greedy_pilots(
    order: &[usize],
    assoc: &Association,
    lss: &LargeScaleState,
    tau_p: usize,
    eta_f: f64,
) -> Vec<Option<usize>> {
    let mut pilots: Vec<Option<usize>> = vec![None; assoc.num_users()];
    let mut conflicting: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); tau_p];
    for &k in order {
        conflicting.iter_mut().for_each(BTreeSet::clear);
        for &l in &assoc.clusters[k] {
            for &other in &assoc.served[l] {
                if other == k {
                    continue;
                }
                if let Some(p) = pilots[other] {
                    if overlaps(lss, l, k, other, eta_f) {
                        conflicting[p].insert(other);
                    }
                }
            }
        }
        let best = (0..tau_p)
            .min_by_key(|&p| (conflicting[p].len(), p))
            .expect("tau_p >= 1");
        pilots[k] = Some(best);
    }
    pilots
}

/// Assigns pilots to every UE in ascending index order.
pub fn assign_pilots_fixed(assoc: &Association, lss: &LargeScaleState, config: &SimConfig) -> Association {
    let order: Vec<usize> = (0..assoc.num_users()).collect();
    let mut out = assoc.clone();
    out.pilots = greedy_pilots(&order, assoc, lss, config.tau_p, config.eta_f);
    out
}

/// Undirected conflict graph over global UE indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConflictGraph {
    edges: BTreeSet<(usize, usize)>,
}

impl ConflictGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_edges(edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut g = Self::new();
        for (a, b) in edges {
            g.add_edge(a, b);
        }
        g
    }

    /// Adds `{a, b}`; self-loops are ignored.
    pub fn add_edge(&mut self, a: usize, b: usize) {
        if a != b {
            self.edges.insert((a.min(b), a.max(b)));
        }
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    /// Edges as `(smaller, larger)` pairs in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn vertices(&self) -> BTreeSet<usize> {
        self.edges.iter().flat_map(|&(a, b)| [a, b]).collect()
    }

    /// Adjacency lists for vertices `0..n`.
    pub fn adjacency(&self, n: usize) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    pub fn is_independent(&self, set: &[usize]) -> bool {
        set.iter()
            .enumerate()
            .all(|(i, &a)| set[i + 1..].iter().all(|&b| !self.contains(a, b)))
    }

    /// Subgraph induced by `keep`.
    pub fn induced(&self, keep: &[usize]) -> ConflictGraph {
        let keep: BTreeSet<usize> = keep.iter().copied().collect();
        ConflictGraph {
            edges: self
                .edges
                .iter()
                .copied()
                .filter(|(a, b)| keep.contains(a) && keep.contains(b))
                .collect(),
        }
    }

    /// Writes one `k k'` pair (0-based UE ids) per line.
    pub fn write_edge_list(&self, path: &Path) -> Result<()> {
        let mut file = std::io::BufWriter::new(
            std::fs::File::create(path).map_err(|e| Error::io(path, e))?,
        );
        for (a, b) in self.edges() {
            writeln!(file, "{a} {b}").map_err(|e| Error::io(path, e))?;
        }
        file.flush().map_err(|e| Error::io(path, e))
    }
}

/// Conflict graph over the UEs in `scope`, using `pilots` (global indexing).
pub fn build_conflict_graph(
    assoc: &Association,
    pilots: &[Option<usize>],
    lss: &LargeScaleState,
    eta_f: f64,
    scope: &[usize],
) -> ConflictGraph {
    let mut in_scope = vec![false; assoc.num_users()];
    for &k in scope {
        in_scope[k] = true;
    }
    let mut graph = ConflictGraph::new();
    for (l, served) in assoc.served.iter().enumerate() {
        let members: Vec<usize> = served
            .iter()
            .copied()
            .filter(|&k| in_scope[k] && pilots[k].is_some())
            .collect();
        for (i, &a) in members.iter().enumerate() {
            for &b in &members[i + 1..] {
                if pilots[a] == pilots[b] && overlaps(lss, l, a, b, eta_f) {
                    graph.add_edge(a, b);
                }
            }
        }
    }
    graph
}

/// Reassigns pilots to the preselected UEs in `order` (a permutation of the
/// preselected set) and returns the pilots together with the conflict graph
/// restricted to that set.
pub fn reassign_pilots(
    order: &[usize],
    assoc: &Association,
    lss: &LargeScaleState,
    config: &SimConfig,
) -> (Vec<Option<usize>>, ConflictGraph) {
    let pilots = greedy_pilots(order, assoc, lss, config.tau_p, config.eta_f);
    let graph = build_conflict_graph(assoc, &pilots, lss, config.eta_f, order);
    (pilots, graph)
}
