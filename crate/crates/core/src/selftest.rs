//! Randomized comparisons of the fast routines against brute-force oracles.

use rand::Rng;

use crate::association::{build_conflict_graph, form_clusters, ConflictGraph};
use crate::config::SimConfig;
use crate::geometry::{angular_support, LargeScaleState};
use crate::oracle::{brute_force_conflicts, brute_force_selection, grid_outage_rate};
use crate::ratectl::RateWindow;
use crate::rng::substream;
use crate::scheduler::solve_selection;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub instances: usize,
    pub mismatches: usize,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.mismatches == 0
    }
}

/// Selection solver vs. subset enumeration on instances with at most
/// `max_users` UEs.
pub fn selection_suite(instances: usize, max_users: usize, seed: u64) -> SuiteResult {
    let mut mismatches = 0;
    for i in 0..instances {
        let mut rng = substream(seed, &[0x5E1, i as u64]);
        let n = rng.random_range(1..=max_users);
        let density = rng.random_range(0.0..0.5);
        let weights: Vec<f64> = (0..n)
            .map(|_| if rng.random_bool(0.1) { 0.0 } else { rng.random_range(0.0..10.0) })
            .collect();
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.random_bool(density) {
                    edges.push((a, b));
                }
            }
        }
        let graph = ConflictGraph::from_edges(edges);
        let cap = rng.random_range(0..=n);
        let forced: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.1)).collect();
        let fast = solve_selection(&weights, &graph, cap, &forced);
        let (set, value) = brute_force_selection(&weights, &graph, cap, &forced);
        if !fast.optimal || fast.set != set || (fast.value - value).abs() > 1e-9 * (1.0 + value) {
            mismatches += 1;
        }
    }
    SuiteResult {
        name: "selection vs brute force",
        instances,
        mismatches,
    }
}

/// Outage-rate maximizer vs. a dense grid search.
pub fn outage_suite(instances: usize, seed: u64) -> SuiteResult {
    let step = 1e-4;
    let mut mismatches = 0;
    for i in 0..instances {
        let mut rng = substream(seed, &[0x0A7, i as u64]);
        let len = rng.random_range(1..=50);
        let hi = rng.random_range(0.5..10.0);
        let samples: Vec<f64> = (0..len).map(|_| rng.random_range(0.0..hi)).collect();
        let w = RateWindow::from_samples(50, &samples);
        let grid = grid_outage_rate(&w, step);
        let direct = samples.iter().filter(|&&s| s >= w.r_star()).count() as f64 / len as f64 * w.r_star();
        if w.r_bar() < grid - 1e-12 || w.r_bar() > grid + step || (direct - w.r_bar()).abs() > 1e-12 {
            mismatches += 1;
        }
    }
    SuiteResult {
        name: "outage rate vs grid search",
        instances,
        mismatches,
    }
}

/// Conflict graph construction vs. pairwise evaluation of the three
/// conditions.
pub fn conflict_suite(instances: usize, max_users: usize, seed: u64) -> SuiteResult {
    let mut mismatches = 0;
    for i in 0..instances {
        let mut rng = substream(seed, &[0xC0F, i as u64]);
        let n = rng.random_range(2..=max_users);
        let l = rng.random_range(1..=6);
        let m = [4, 8, 16][rng.random_range(0..3)];
        let delta = rng.random_range(0.05..0.8);
        let beta: Vec<f64> = (0..l * n).map(|_| 10f64.powf(rng.random_range(-3.0..0.0))).collect();
        let support: Vec<Vec<usize>> = (0..l * n)
            .map(|_| angular_support(rng.random_range(-3.2..3.2), delta, m))
            .collect();
        let lss = LargeScaleState::from_parts(l, n, m, beta, support, 1.0);
        let config = SimConfig {
            antennas: m,
            cluster_max: rng.random_range(1..=4),
            eta: 1.0,
            ..SimConfig::default()
        };
        let assoc = form_clusters(&lss, &config);
        let tau_p = rng.random_range(1..=4);
        let pilots: Vec<Option<usize>> = (0..n)
            .map(|_| if rng.random_bool(0.1) { None } else { Some(rng.random_range(0..tau_p)) })
            .collect();
        let eta_f = [0.0, 1.0, 1.5][rng.random_range(0..3)];
        let scope: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.8)).collect();
        let fast = build_conflict_graph(&assoc, &pilots, &lss, eta_f, &scope);
        let slow = brute_force_conflicts(&assoc, &pilots, &lss, eta_f, &scope);
        if fast != slow {
            mismatches += 1;
        }
    }
    SuiteResult {
        name: "conflict graph vs pairwise conditions",
        instances,
        mismatches,
    }
}

/// All oracle suites at their standard sizes.
pub fn run_all(seed: u64) -> Vec<SuiteResult> {
    vec![
        selection_suite(200, 16, seed),
        outage_suite(200, seed),
        conflict_suite(100, 30, seed),
    ]
}
