//! Brute-force reference implementations for small instances.

use crate::association::{Association, ConflictGraph};
use crate::geometry::LargeScaleState;
use crate::ratectl::RateWindow;

/// Exhaustive selection over all subsets (n <= 20). Among optimal sets the
/// lexicographically smallest sorted index sequence wins. Returns the set
/// (ascending) and its value.
pub fn brute_force_selection(
    weights: &[f64],
    graph: &ConflictGraph,
    cap: usize,
    forced_zero: &[usize],
) -> (Vec<usize>, f64) {
    let n = weights.len();
    assert!(n <= 20, "brute force limited to 20 UEs");
    let mut blocked_mask = 0u32;
    for &k in forced_zero {
        if k < n {
            blocked_mask |= 1 << k;
        }
    }
    let edges: Vec<(usize, usize)> = graph.edges().filter(|&(a, b)| a < n && b < n).collect();
    let mut best: Option<(u32, f64)> = None;
    for mask in 0u32..(1u32 << n) {
        if mask & blocked_mask != 0 || mask.count_ones() as usize > cap {
            continue;
        }
        if edges.iter().any(|&(a, b)| mask & (1 << a) != 0 && mask & (1 << b) != 0) {
            continue;
        }
        let value: f64 = (0..n).filter(|&k| mask & (1 << k) != 0).map(|k| weights[k]).sum();
        best = match best {
            None => Some((mask, value)),
            Some((bm, bv)) => {
                let tol = 1e-9 * (1.0 + bv.abs());
                if value > bv + tol || (value >= bv - tol && prefers(mask, bm)) {
                    Some((mask, value))
                } else {
                    Some((bm, bv))
                }
            }
        };
    }
    let (mask, value) = best.expect("empty set is always feasible");
    ((0..n).filter(|&k| mask & (1 << k) != 0).collect(), value)
}

/// True when the sorted index sequence of `a` is lexicographically smaller
/// than that of `b` (a proper prefix is smaller).
fn prefers(a: u32, b: u32) -> bool {
    let diff = a ^ b;
    if diff == 0 {
        return false;
    }
    let low = diff & diff.wrapping_neg();
    let above = !(low - 1);
    if a & low != 0 {
        // b continues with a larger index, or stops
        b & above != 0
    } else {
        a & above == 0
    }
}

/// Maximum of `r * P(I >= r)` over a uniform grid of step `step` on
/// `[0, max sample]`.
pub fn grid_outage_rate(window: &RateWindow, step: f64) -> f64 {
    let samples: Vec<f64> = window.samples().collect();
    let hi = samples.iter().copied().fold(0.0, f64::max);
    let n = samples.len() as f64;
    let mut best = 0.0f64;
    let mut i = 0u64;
    loop {
        let r = i as f64 * step;
        if r > hi {
            break;
        }
        let p = samples.iter().filter(|&&s| s >= r).count() as f64 / n;
        best = best.max(r * p);
        i += 1;
    }
    let p = samples.iter().filter(|&&s| s >= hi).count() as f64 / n;
    best.max(hi * p)
}

/// Conflict test evaluated straight from the three conditions: a shared
/// serving RU, the same pilot, and subspace overlap above `eta_f` at that RU.
pub fn brute_force_conflicts(
    assoc: &Association,
    pilots: &[Option<usize>],
    lss: &LargeScaleState,
    eta_f: f64,
    scope: &[usize],
) -> ConflictGraph {
    let mut g = ConflictGraph::new();
    for &a in scope {
        for &b in scope {
            if a >= b {
                continue;
            }
            let same_pilot = matches!((pilots[a], pilots[b]), (Some(p), Some(q)) if p == q);
            if !same_pilot {
                continue;
            }
            for l in 0..lss.num_rus {
                let shared = assoc.clusters[a].contains(&l) && assoc.clusters[b].contains(&l);
                if !shared {
                    continue;
                }
                let common = lss
                    .support(l, a)
                    .iter()
                    .filter(|x| lss.support(l, b).contains(x))
                    .count();
                if (common as f64).sqrt() > eta_f {
                    g.add_edge(a, b);
                    break;
                }
            }
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brute_force_example() {
        let g = ConflictGraph::from_edges([(1, 2)]);
        let (set, value) = brute_force_selection(&[10.0, 9.0, 8.0, 1.0], &g, 2, &[]);
        assert_eq!(set, vec![0, 1]);
        assert_eq!(value, 19.0);
    }

    #[test]
    fn preference_rule() {
        assert!(prefers(0b01, 0b10));
        assert!(!prefers(0b10, 0b01));
        assert!(prefers(0b01, 0b11));
        assert!(!prefers(0b11, 0b01));
        assert!(prefers(0b101, 0b110));
        assert!(!prefers(0b01, 0b01));
    }

    #[test]
    fn grid_example() {
        let w = RateWindow::from_samples(10, &[1.0, 3.0, 4.0]);
        assert!((grid_outage_rate(&w, 1e-3) - 2.0).abs() < 1e-9);
    }
}
