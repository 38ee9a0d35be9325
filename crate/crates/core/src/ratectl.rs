//! Outage-rate adaptation from a sliding window of mutual-information samples.
//!
//! Each UE keeps the instantaneous mutual information of its last `N` active
//! slots. The allocated rate is the sample value `r` maximizing
//! `r * P(I >= r)` under the empirical distribution; `r * P(I >= r)` at that
//! rate is the expected service rate used as the scheduling weight.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateWindow {
    capacity: usize,
    samples: VecDeque<f64>,
    r_star: f64,
    r_bar: f64,
}

impl RateWindow {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "window capacity must be positive");
        RateWindow {
            capacity,
            samples: VecDeque::with_capacity(capacity),
            r_star: 0.0,
            r_bar: 0.0,
        }
    }

    pub fn from_samples(capacity: usize, samples: &[f64]) -> Self {
        let mut w = Self::new(capacity);
        for &s in samples {
            w.record_sample(s);
        }
        w
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Oldest first.
    pub fn samples(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.samples.iter().copied()
    }

    /// Allocated (outage) rate; 0 for an empty window.
    pub fn r_star(&self) -> f64 {
        self.r_star
    }

    /// Expected service rate `r* P(I >= r*)`; 0 for an empty window.
    pub fn r_bar(&self) -> f64 {
        self.r_bar
    }

    /// Appends a sample, evicting the oldest beyond capacity, and refreshes
    /// the rate.
    pub fn record_sample(&mut self, value: f64) {
        debug_assert!(value >= 0.0 && value.is_finite(), "bad sample {value}");
        if self.samples.len() == self.capacity {
            self.samples.pop_front();
        }
        self.samples.push_back(value.max(0.0));
        let (r_star, r_bar) = optimal_outage_rate(self);
        self.r_star = r_star;
        self.r_bar = r_bar;
    }
}

/// Fraction of samples at or above `r`.
///
/// # Panics
/// On an empty window.
pub fn empirical_ccdf(window: &RateWindow, r: f64) -> f64 {
    assert!(!window.is_empty(), "empirical CCDF of an empty window");
    let hits = window.samples.iter().filter(|&&s| s >= r).count();
    hits as f64 / window.len() as f64
}

/// Maximizer of `r * P(I >= r)` over the distinct sample values, with ties
/// resolved to the smallest rate. Returns `(r_star, r_bar)`.
///
/// # Panics
/// On an empty window.
pub fn optimal_outage_rate(window: &RateWindow) -> (f64, f64) {
    assert!(!window.is_empty(), "outage rate of an empty window");
    let mut sorted: Vec<f64> = window.samples.iter().copied().collect();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut best = (sorted[0], sorted[0]);
    let mut i = 0;
    while i < n {
        let r = sorted[i];
        // samples >= r are exactly those from position i on
        let value = r * (n - i) as f64 / n as f64;
        if value > best.1 * (1.0 + 1e-12) {
            best = (r, value);
        }
        while i < n && sorted[i] == r {
            i += 1;
        }
    }
    best
}
