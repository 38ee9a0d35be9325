//! Network topology on a torus and large-scale propagation state.
//!
//! Pathloss follows the 3GPP TR 38.901 UMi street-canyon model (primary
//! entries, breakpoint branch ignored); LOS probability follows the matching
//! UMi LOS table.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::rng::{purpose, substream};

/// Shadowing standard deviation for LOS links (dB).
pub const SHADOW_SIGMA_LOS_DB: f64 = 4.0;
/// Shadowing standard deviation for NLOS links (dB).
pub const SHADOW_SIGMA_NLOS_DB: f64 = 7.82;
/// Monte-Carlo draws used to estimate the mean LSFC for SNR calibration.
pub const CALIBRATION_DRAWS: usize = 200_000;
/// Minimum 2-D distance fed to the pathloss model (m).
const MIN_DISTANCE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGeometry {
    pub ru_positions: Vec<Point>,
    pub ue_positions: Vec<Point>,
    pub area_side: f64,
}

/// Places RUs at the cell centers of the configured grid and drops
/// `config.num_users()` UEs uniformly over the square.
///
/// UE positions are drawn sequentially, so the first `n` positions are the
/// same for any population size `>= n` under a fixed seed.
pub fn place_topology<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> Result<NetworkGeometry> {
    if config.grid_cols * config.grid_rows != config.num_rus || config.num_rus == 0 {
        return Err(Error::Config(format!(
            "{} RUs cannot be arranged on a {}x{} grid",
            config.num_rus, config.grid_cols, config.grid_rows
        )));
    }
    let side = config.area_side;
    let mut ru_positions = Vec::with_capacity(config.num_rus);
    for row in 0..config.grid_rows {
        for col in 0..config.grid_cols {
            ru_positions.push(Point::new(
                side * (col as f64 + 0.5) / config.grid_cols as f64,
                side * (row as f64 + 0.5) / config.grid_rows as f64,
            ));
        }
    }
    let ue_positions = (0..config.num_users())
        .map(|_| {
            let x = rng.random::<f64>() * side;
            let y = rng.random::<f64>() * side;
            Point::new(x, y)
        })
        .collect();
    Ok(NetworkGeometry {
        ru_positions,
        ue_positions,
        area_side: side,
    })
}

fn wrap_axis(d: f64, side: f64) -> f64 {
    let d = d.rem_euclid(side);
    if d > side / 2.0 {
        d - side
    } else {
        d
    }
}

/// Shortest displacement from `a` to `b` on the torus.
pub fn torus_displacement(a: Point, b: Point, side: f64) -> (f64, f64) {
    (wrap_axis(b.x - a.x, side), wrap_axis(b.y - a.y, side))
}

pub fn torus_distance(a: Point, b: Point, side: f64) -> f64 {
    let (dx, dy) = torus_displacement(a, b, side);
    dx.hypot(dy)
}

/// UMi street-canyon LOS probability.
pub fn los_probability(d2d: f64) -> f64 {
    if d2d <= 18.0 {
        1.0
    } else {
        18.0 / d2d + (-d2d / 36.0).exp() * (1.0 - 18.0 / d2d)
    }
}

/// Deterministic UMi street-canyon pathloss in dB.
pub fn pathloss_db(d2d: f64, los: bool, config: &SimConfig) -> f64 {
    let d2d = d2d.max(MIN_DISTANCE);
    let dh = config.bs_height - config.ue_height;
    let d3d = (d2d * d2d + dh * dh).sqrt();
    let fc = config.carrier_ghz;
    let pl_los = 32.4 + 21.0 * d3d.log10() + 20.0 * fc.log10();
    if los {
        pl_los
    } else {
        let pl_nlos =
            35.3 * d3d.log10() + 22.4 + 21.3 * fc.log10() - 0.3 * (config.ue_height - 1.5);
        pl_nlos.max(pl_los)
    }
}

pub fn shadow_sigma_db(los: bool) -> f64 {
    if los {
        SHADOW_SIGMA_LOS_DB
    } else {
        SHADOW_SIGMA_NLOS_DB
    }
}

/// Linear large-scale fading coefficient for one link.
pub fn pathloss_lsfc(d2d: f64, los: bool, shadow_draw: f64, config: &SimConfig) -> f64 {
    let loss_db = pathloss_db(d2d, los, config) + shadow_sigma_db(los) * shadow_draw;
    10f64.powf(-loss_db / 10.0)
}

fn wrap_angle(a: f64) -> f64 {
    // (-pi, pi]
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

/// DFT grid indices whose angle `2*pi*m/M` falls inside the interval of
/// width `delta` centered at `theta`. Never empty: if no grid angle falls
/// inside, the single nearest grid angle is returned.
pub fn angular_support(theta: f64, delta: f64, antennas: usize) -> Vec<usize> {
    const EDGE_TOL: f64 = 1e-12;
    let step = 2.0 * PI / antennas as f64;
    let offset = |m: usize| wrap_angle(step * m as f64 - theta).abs();
    let inside: Vec<usize> = (0..antennas)
        .filter(|&m| offset(m) <= delta / 2.0 + EDGE_TOL)
        .collect();
    if !inside.is_empty() {
        return inside;
    }
    let nearest = (0..antennas)
        .min_by(|&a, &b| offset(a).total_cmp(&offset(b)))
        .expect("at least one antenna");
    vec![nearest]
}

/// Per-link large-scale state, stored RU-major (`l * num_users + k`).
#[derive(Debug, Clone, PartialEq)]
pub struct LargeScaleState {
    pub num_rus: usize,
    pub num_users: usize,
    pub antennas: usize,
    pub beta: Vec<f64>,
    pub los: Vec<bool>,
    pub support: Vec<Vec<usize>>,
    /// Calibrated transmit SNR (linear).
    pub snr: f64,
}

impl LargeScaleState {
    #[inline]
    fn idx(&self, l: usize, k: usize) -> usize {
        l * self.num_users + k
    }

    #[inline]
    pub fn beta(&self, l: usize, k: usize) -> f64 {
        self.beta[self.idx(l, k)]
    }

    #[inline]
    pub fn los(&self, l: usize, k: usize) -> bool {
        self.los[self.idx(l, k)]
    }

    #[inline]
    pub fn support(&self, l: usize, k: usize) -> &[usize] {
        &self.support[self.idx(l, k)]
    }

    /// Builds a state directly from per-link values (row-major over RUs).
    pub fn from_parts(
        num_rus: usize,
        num_users: usize,
        antennas: usize,
        beta: Vec<f64>,
        support: Vec<Vec<usize>>,
        snr: f64,
    ) -> Self {
        assert_eq!(beta.len(), num_rus * num_users);
        assert_eq!(support.len(), num_rus * num_users);
        LargeScaleState {
            num_rus,
            num_users,
            antennas,
            los: vec![false; beta.len()],
            beta,
            support,
            snr,
        }
    }
}

/// Draws LOS states, shadowing and angular supports for every RU-UE link.
///
/// Each UE has its own substream, so a UE's links do not depend on how many
/// other UEs exist.
pub fn draw_large_scale(geom: &NetworkGeometry, config: &SimConfig, snr: f64) -> LargeScaleState {
    let l_count = geom.ru_positions.len();
    let k_count = geom.ue_positions.len();
    let n = l_count * k_count;
    let mut beta = vec![0.0; n];
    let mut los = vec![false; n];
    let mut support = vec![Vec::new(); n];
    for (k, &ue) in geom.ue_positions.iter().enumerate() {
        let mut rng = substream(config.seed, &[purpose::LARGE_SCALE, k as u64]);
        for (l, &ru) in geom.ru_positions.iter().enumerate() {
            let (dx, dy) = torus_displacement(ru, ue, geom.area_side);
            let d2d = dx.hypot(dy);
            let is_los = rng.random::<f64>() < los_probability(d2d);
            let shadow: f64 = rng.sample(StandardNormal);
            let i = l * k_count + k;
            beta[i] = pathloss_lsfc(d2d, is_los, shadow, config);
            los[i] = is_los;
            support[i] = angular_support(dy.atan2(dx), config.angular_spread, config.antennas);
        }
    }
    LargeScaleState {
        num_rus: l_count,
        num_users: k_count,
        antennas: config.antennas,
        beta,
        los,
        support,
        snr,
    }
}

/// Radius of a disk with area `A / L`.
pub fn coverage_radius(config: &SimConfig) -> f64 {
    (config.area_side * config.area_side / (PI * config.num_rus as f64)).sqrt()
}

/// Distance at which the calibration mean LSFC is evaluated.
pub fn calibration_distance(config: &SimConfig) -> f64 {
    2.5 * coverage_radius(config)
}

/// Monte-Carlo mean of the LSFC at distance `d2d`, averaging over the LOS
/// draw and shadowing.
pub fn mean_lsfc<R: Rng + ?Sized>(d2d: f64, config: &SimConfig, draws: usize, rng: &mut R) -> f64 {
    let p_los = los_probability(d2d);
    let total: f64 = (0..draws)
        .map(|_| {
            let los = rng.random::<f64>() < p_los;
            let shadow: f64 = rng.sample(StandardNormal);
            pathloss_lsfc(d2d, los, shadow, config)
        })
        .sum();
    total / draws as f64
}

/// SNR such that `mean_beta * M * SNR = 1`.
pub fn snr_from_mean_lsfc(mean_beta: f64, antennas: usize) -> f64 {
    1.0 / (antennas as f64 * mean_beta)
}

pub fn calibrate_snr(config: &SimConfig) -> f64 {
    let mut rng = substream(config.seed, &[purpose::CALIBRATION]);
    let mean = mean_lsfc(calibration_distance(config), config, CALIBRATION_DRAWS, &mut rng);
    snr_from_mean_lsfc(mean, config.antennas)
}

/// Topology, calibrated SNR and large-scale state for a config.
pub fn build_scenario(config: &SimConfig) -> Result<(NetworkGeometry, LargeScaleState)> {
    let mut rng = substream(config.seed, &[purpose::TOPOLOGY]);
    let geom = place_topology(config, &mut rng)?;
    let snr = calibrate_snr(config);
    let lss = draw_large_scale(&geom, config, snr);
    Ok((geom, lss))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn grid_centers_for_default_layout() {
        let cfg = SimConfig::default();
        let mut rng = substream(1, &[0]);
        let g = place_topology(&cfg, &mut rng).unwrap();
        assert_eq!(g.ru_positions.len(), 20);
        let mut xs: Vec<f64> = g.ru_positions.iter().map(|p| p.x).collect();
        let mut ys: Vec<f64> = g.ru_positions.iter().map(|p| p.y).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        ys.sort_by(f64::total_cmp);
        ys.dedup();
        assert_eq!(xs, vec![25.0, 75.0, 125.0, 175.0]);
        assert_eq!(ys, vec![20.0, 60.0, 100.0, 140.0, 180.0]);
        assert_eq!(g.ue_positions.len(), 120);
        for p in &g.ue_positions {
            assert!((0.0..200.0).contains(&p.x) && (0.0..200.0).contains(&p.y));
        }
    }

    #[test]
    fn single_ru_sits_in_the_middle() {
        let cfg = SimConfig {
            area_side: 100.0,
            num_rus: 1,
            grid_cols: 1,
            grid_rows: 1,
            ..SimConfig::default()
        };
        let g = place_topology(&cfg, &mut substream(3, &[])).unwrap();
        assert_eq!(g.ru_positions, vec![Point::new(50.0, 50.0)]);
    }

    #[test]
    fn bad_grid_is_a_config_error() {
        let cfg = SimConfig {
            num_rus: 19,
            ..SimConfig::default()
        };
        assert!(matches!(
            place_topology(&cfg, &mut substream(3, &[])),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn topology_is_seed_deterministic_and_prefix_stable() {
        let cfg = SimConfig::default();
        let a = place_topology(&cfg, &mut substream(9, &[purpose::TOPOLOGY])).unwrap();
        let b = place_topology(&cfg, &mut substream(9, &[purpose::TOPOLOGY])).unwrap();
        assert_eq!(a, b);
        let big = SimConfig {
            num_rbs: 5,
            ..SimConfig::default()
        };
        let c = place_topology(&big, &mut substream(9, &[purpose::TOPOLOGY])).unwrap();
        assert_eq!(&c.ue_positions[..120], &a.ue_positions[..]);
    }

    #[test]
    fn torus_distance_examples() {
        let d = torus_distance(Point::new(10.0, 10.0), Point::new(190.0, 10.0), 200.0);
        assert!((d - 20.0).abs() < 1e-12);
        assert_eq!(torus_distance(Point::new(3.0, 4.0), Point::new(3.0, 4.0), 200.0), 0.0);
        let d = torus_distance(Point::new(0.0, 0.0), Point::new(50.0, 120.0), 200.0);
        // brute force over the nine images
        let mut best = f64::INFINITY;
        for ox in [-200.0, 0.0, 200.0] {
            for oy in [-200.0, 0.0, 200.0] {
                best = best.min(((50.0f64 + ox).powi(2) + (120.0f64 + oy).powi(2)).sqrt());
            }
        }
        assert!((d - best).abs() < 1e-12);
        assert!((d - 94.339_811_320_566_04).abs() < 1e-9);
    }

    #[test]
    fn los_probability_examples() {
        assert_eq!(los_probability(18.0), 1.0);
        assert_eq!(los_probability(0.0), 1.0);
        let expected = 0.5 + (-1.0f64).exp() * 0.5;
        assert!((los_probability(36.0) - expected).abs() < 1e-15);
        assert!((los_probability(36.0) - 0.6839).abs() < 1e-4);
        assert!(los_probability(1e7) < 1e-5);
    }

    #[test]
    fn pathloss_matches_reference_point() {
        let cfg = SimConfig::default();
        // d3d = 100 m exactly
        let d2d = (100.0f64.powi(2) - 8.5f64.powi(2)).sqrt();
        let pl = pathloss_db(d2d, true, &cfg);
        assert!((pl - 85.28).abs() < 0.01, "{pl}");
        let beta = pathloss_lsfc(d2d, true, 0.0, &cfg);
        assert!((beta - 10f64.powf(-pl / 10.0)).abs() < 1e-25);
        // shadowing shifts the loss by sigma dB per unit draw
        let shadowed = pathloss_lsfc(d2d, false, 1.0, &cfg);
        let plain = pathloss_lsfc(d2d, false, 0.0, &cfg);
        assert!(((plain / shadowed).log10() * 10.0 - SHADOW_SIGMA_NLOS_DB).abs() < 1e-9);
    }

    #[test]
    fn nlos_never_beats_los_and_loss_grows_with_distance() {
        let cfg = SimConfig::default();
        let mut prev = (0.0, 0.0);
        for i in 0..2000 {
            let d = 0.5 + i as f64 * 0.25;
            let los = pathloss_db(d, true, &cfg);
            let nlos = pathloss_db(d, false, &cfg);
            assert!(nlos >= los);
            assert!(los >= prev.0 && nlos >= prev.1);
            prev = (los, nlos);
        }
    }

    #[test]
    fn zero_distance_is_clamped() {
        let cfg = SimConfig::default();
        assert_eq!(pathloss_db(0.0, true, &cfg), pathloss_db(1.0, true, &cfg));
        assert!(pathloss_lsfc(0.0, false, 0.0, &cfg).is_finite());
    }

    #[test]
    fn angular_support_examples() {
        let delta = PI / 8.0;
        assert_eq!(angular_support(0.0, delta, 10), vec![0]);
        assert_eq!(angular_support(0.31, delta, 10), vec![0]);
        assert_eq!(angular_support(0.0, delta, 64), vec![0, 1, 2, 62, 63]);
        // wrap-around near pi
        assert_eq!(angular_support(PI, delta, 10), vec![5]);
        // nearest fallback can land on the far side of the wrap
        assert_eq!(angular_support(-0.32, delta, 10), vec![9]);
    }

    #[test]
    fn calibration_distance_example() {
        let cfg = SimConfig::default();
        assert!((coverage_radius(&cfg) - 25.2313).abs() < 1e-3);
        assert!((calibration_distance(&cfg) - 63.078).abs() < 1e-2);
    }

    #[test]
    fn snr_is_inversely_proportional() {
        let base = snr_from_mean_lsfc(1e-9, 10);
        assert!((snr_from_mean_lsfc(2e-9, 10) - base / 2.0).abs() < 1e-6 * base);
        assert!((snr_from_mean_lsfc(1e-9, 20) - base / 2.0).abs() < 1e-6 * base);
    }

    #[test]
    fn calibrated_snr_matches_closed_form_mixture() {
        // E[10^(-s X/10)] = exp((s ln10 / 10)^2 / 2) for X ~ N(0,1)
        let cfg = SimConfig::default();
        let d = calibration_distance(&cfg);
        let p = los_probability(d);
        let lognormal = |sigma: f64| ((sigma * 10f64.ln() / 10.0).powi(2) / 2.0).exp();
        let mean = p * 10f64.powf(-pathloss_db(d, true, &cfg) / 10.0) * lognormal(SHADOW_SIGMA_LOS_DB)
            + (1.0 - p) * 10f64.powf(-pathloss_db(d, false, &cfg) / 10.0) * lognormal(SHADOW_SIGMA_NLOS_DB);
        let snr = calibrate_snr(&cfg);
        let exact = snr_from_mean_lsfc(mean, cfg.antennas);
        assert!((snr / exact - 1.0).abs() < 0.05, "{snr} vs {exact}");
    }

    #[test]
    fn large_scale_draws_are_reproducible() {
        let cfg = SimConfig::default();
        let (g1, l1) = build_scenario(&cfg).unwrap();
        let (g2, l2) = build_scenario(&cfg).unwrap();
        assert_eq!(g1, g2);
        assert_eq!(l1, l2);
        assert!(l1.beta.iter().all(|&b| b > 0.0));
        assert!(l1.support.iter().all(|s| !s.is_empty()));
    }

    proptest! {
        #[test]
        fn torus_metric_properties(
            ax in 0.0..200.0f64, ay in 0.0..200.0f64,
            bx in 0.0..200.0f64, by in 0.0..200.0f64,
            cx in 0.0..200.0f64, cy in 0.0..200.0f64,
        ) {
            let (a, b, c) = (Point::new(ax, ay), Point::new(bx, by), Point::new(cx, cy));
            let side = 200.0;
            let ab = torus_distance(a, b, side);
            prop_assert!((ab - torus_distance(b, a, side)).abs() < 1e-9);
            prop_assert!(ab <= torus_distance(a, c, side) + torus_distance(c, b, side) + 1e-9);
            prop_assert!(ab <= side * 2f64.sqrt() / 2.0 + 1e-9);
        }

        #[test]
        fn los_probability_is_monotone(d in 0.0..500.0f64, step in 0.0..50.0f64) {
            let p = los_probability(d);
            prop_assert!((0.0..=1.0).contains(&p));
            prop_assert!(los_probability(d + step) <= p + 1e-15);
        }

        #[test]
        fn angular_support_never_empty(theta in 0.0..(2.0 * PI), m in 1usize..=256) {
            let s = angular_support(theta, PI / 8.0, m);
            prop_assert!(!s.is_empty());
            prop_assert!(s.iter().all(|&i| i < m));
            prop_assert!(s.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
