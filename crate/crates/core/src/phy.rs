//! Local MMSE combining, cluster fusion and instantaneous mutual information.

use nalgebra::{DMatrix, DVector};

use crate::association::Association;
use crate::channel::{dot_conj, ChannelBlock, EstimatedChannelBlock, C64};
use crate::error::{Error, Result};

/// Weight given to RU `l`'s local soft output when fusing a cluster.
pub trait FusionRule {
    fn weight(&self, h_hat: &[C64], local: &[C64]) -> f64;
}

/// Energy-proportional fusion: `w = ||h_hat||^2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct EnergyFusion;

impl FusionRule for EnergyFusion {
    fn weight(&self, h_hat: &[C64], _local: &[C64]) -> f64 {
        h_hat.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Unit-norm overall combining vectors of the active UEs, stored as the
/// per-RU blocks of each UE's cluster.
#[derive(Debug, Clone)]
pub struct CombinerSet {
    num_rbs: usize,
    antennas: usize,
    active: Vec<usize>,
    clusters: Vec<Vec<usize>>,
    offsets: Vec<usize>,
    stride: usize,
    v: Vec<C64>,
    w: Vec<f64>,
}

impl CombinerSet {
    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn num_rbs(&self) -> usize {
        self.num_rbs
    }

    /// Cluster RUs of the `j`-th active UE.
    pub fn cluster(&self, j: usize) -> &[usize] {
        &self.clusters[j]
    }

    /// All cluster blocks of active UE `j` on RB `f`, concatenated.
    pub fn vector(&self, f: usize, j: usize) -> &[C64] {
        let start = f * self.stride * self.antennas + self.offsets[j] * self.antennas;
        &self.v[start..start + self.clusters[j].len() * self.antennas]
    }

    pub fn vector_mut(&mut self, f: usize, j: usize) -> &mut [C64] {
        let start = f * self.stride * self.antennas + self.offsets[j] * self.antennas;
        let len = self.clusters[j].len() * self.antennas;
        &mut self.v[start..start + len]
    }

    /// Block of active UE `j` at its `b`-th cluster RU.
    pub fn block(&self, f: usize, j: usize, b: usize) -> &[C64] {
        &self.vector(f, j)[b * self.antennas..(b + 1) * self.antennas]
    }

    /// Fusion weight of active UE `j` at its `b`-th cluster RU.
    pub fn weight(&self, f: usize, j: usize, b: usize) -> f64 {
        self.w[f * self.stride + self.offsets[j] + b]
    }

    /// Expands the vector of active UE `j` to its full `L * M` form.
    pub fn dense(&self, f: usize, j: usize, num_rus: usize) -> Vec<C64> {
        let m = self.antennas;
        let mut out = vec![C64::new(0.0, 0.0); num_rus * m];
        for (b, &l) in self.clusters[j].iter().enumerate() {
            out[l * m..(l + 1) * m].copy_from_slice(self.block(f, j, b));
        }
        out
    }

    fn empty(num_rbs: usize, antennas: usize, active: &[usize], assoc: &Association) -> Self {
        let clusters: Vec<Vec<usize>> = active.iter().map(|&k| assoc.clusters[k].clone()).collect();
        let mut offsets = Vec::with_capacity(active.len());
        let mut stride = 0;
        for c in &clusters {
            offsets.push(stride);
            stride += c.len();
        }
        CombinerSet {
            num_rbs,
            antennas,
            active: active.to_vec(),
            clusters,
            offsets,
            stride,
            v: vec![C64::new(0.0, 0.0); num_rbs * stride * antennas],
            w: vec![0.0; num_rbs * stride],
        }
    }
}

/// Local MMSE combining at every RU followed by weighted cluster fusion and
/// normalization to unit norm.
pub fn compute_combiners(
    est: &EstimatedChannelBlock,
    assoc: &Association,
    active: &[usize],
    snr: f64,
    fusion: &dyn FusionRule,
) -> Result<CombinerSet> {
    let m = est.block.antennas();
    let num_rbs = est.block.num_rbs();
    let mut set = CombinerSet::empty(num_rbs, m, active, assoc);

    let mut slot_of = vec![usize::MAX; assoc.num_users()];
    for (j, &k) in active.iter().enumerate() {
        slot_of[k] = j;
    }
    for (l, served) in assoc.served.iter().enumerate() {
        let local: Vec<(usize, usize)> = served
            .iter()
            .filter(|&&k| slot_of[k] != usize::MAX)
            .map(|&k| {
                let j = slot_of[k];
                let b = set.clusters[j].binary_search(&l).expect("served implies clustered");
                (k, b)
            })
            .collect();
        if local.is_empty() {
            continue;
        }
        for f in 0..num_rbs {
            let mut gram = DMatrix::<C64>::from_diagonal_element(m, m, C64::new(1.0 / snr, 0.0));
            let mut rhs = DMatrix::<C64>::zeros(m, local.len());
            for (c, &(k, _)) in local.iter().enumerate() {
                let h = DVector::from_column_slice(est.h_hat(f, l, k));
                gram.ger(C64::new(1.0, 0.0), &h, &h.conjugate(), C64::new(1.0, 0.0));
                rhs.set_column(c, &h);
            }
            let chol = gram.cholesky().ok_or_else(|| {
                Error::Contract(format!("local covariance at RU {l} is not positive definite"))
            })?;
            let sol = chol.solve(&rhs);
            for (c, &(k, b)) in local.iter().enumerate() {
                let j = slot_of[k];
                let v_local: Vec<C64> = sol.column(c).iter().copied().collect();
                let w = fusion.weight(est.h_hat(f, l, k), &v_local);
                set.w[f * set.stride + set.offsets[j] + b] = w;
                let block = &mut set.vector_mut(f, j)[b * m..(b + 1) * m];
                for (dst, src) in block.iter_mut().zip(&v_local) {
                    *dst = src * w;
                }
            }
        }
    }

    for j in 0..active.len() {
        for f in 0..num_rbs {
            let v = set.vector_mut(f, j);
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(Error::Contract(format!(
                    "UE {} has no usable combiner on RB {f} (empty cluster?)",
                    active[j]
                )));
            }
            v.iter_mut().for_each(|z| *z /= norm);
        }
    }
    Ok(set)
}

/// Per-active-UE instantaneous mutual information of one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct MutualInfoRecord {
    pub active: Vec<usize>,
    pub num_rbs: usize,
    /// bit/s/Hz, averaged over the resource blocks.
    pub value: Vec<f64>,
    /// `[j * num_rbs + f]`
    pub per_rb_sinr: Vec<f64>,
}

impl MutualInfoRecord {
    pub fn sinr(&self, j: usize, f: usize) -> f64 {
        self.per_rb_sinr[j * self.num_rbs + f]
    }
}

/// Average of `log2(1 + sinr)` over resource blocks.
pub fn mutual_information(sinrs: &[f64]) -> f64 {
    sinrs.iter().map(|s| (1.0 + s).log2()).sum::<f64>() / sinrs.len() as f64
}

/// `G[j][i] = v_j^H h_i` on one RB, for active UEs `j` (combiners) and `i`
/// (true channels).
fn effective_gains(truth: &ChannelBlock, comb: &CombinerSet, f: usize) -> Vec<C64> {
    let n = comb.active.len();
    let mut gains = vec![C64::new(0.0, 0.0); n * n];
    for j in 0..n {
        for (b, &l) in comb.clusters[j].iter().enumerate() {
            let v = comb.block(f, j, b);
            for (i, &k) in comb.active.iter().enumerate() {
                gains[j * n + i] += dot_conj(v, truth.h(f, l, k));
            }
        }
    }
    gains
}

fn check_active(comb: &CombinerSet, active: &[usize]) -> Result<()> {
    if comb.active != active {
        return Err(Error::Contract(
            "combiners were computed for a different active set".into(),
        ));
    }
    Ok(())
}

fn build_record(
    comb: &CombinerSet,
    snr: f64,
    truth: &ChannelBlock,
    sinr_of: impl Fn(&[C64], usize, usize) -> (f64, f64),
) -> MutualInfoRecord {
    let n = comb.active.len();
    let num_rbs = comb.num_rbs;
    let mut per_rb_sinr = vec![0.0; n * num_rbs];
    for f in 0..num_rbs {
        let gains = effective_gains(truth, comb, f);
        for k in 0..n {
            let (signal, interference) = sinr_of(&gains, n, k);
            per_rb_sinr[k * num_rbs + f] = signal / (1.0 / snr + interference);
        }
    }
    let value = (0..n)
        .map(|k| mutual_information(&per_rb_sinr[k * num_rbs..(k + 1) * num_rbs]))
        .collect();
    MutualInfoRecord {
        active: comb.active.clone(),
        num_rbs,
        value,
        per_rb_sinr,
    }
}

/// Uplink: `|v_k^H h_k|^2 / (1/snr + sum_{j != k} |v_k^H h_j|^2)`.
pub fn ul_mutual_information(
    truth: &ChannelBlock,
    comb: &CombinerSet,
    active: &[usize],
    snr: f64,
) -> Result<MutualInfoRecord> {
    check_active(comb, active)?;
    Ok(build_record(comb, snr, truth, |g, n, k| {
        let row = &g[k * n..(k + 1) * n];
        let interference = row
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != k)
            .map(|(_, z)| z.norm_sqr())
            .sum();
        (row[k].norm_sqr(), interference)
    }))
}

/// Downlink with the combiners reused as unit-power precoders:
/// `|h_k^H v_k|^2 / (1/snr + sum_{j != k} |h_k^H v_j|^2)`.
pub fn dl_mutual_information(
    truth: &ChannelBlock,
    comb: &CombinerSet,
    active: &[usize],
    snr: f64,
) -> Result<MutualInfoRecord> {
    check_active(comb, active)?;
    Ok(build_record(comb, snr, truth, |g, n, k| {
        let interference = (0..n)
            .filter(|&j| j != k)
            .map(|j| g[j * n + k].norm_sqr())
            .sum();
        (g[k * n + k].norm_sqr(), interference)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{complex_normal, estimate_channels, sample_channels, FourierGrid};
    use crate::geometry::LargeScaleState;
    use crate::rng::substream;

    fn est_from(truth: &ChannelBlock, active: &[usize]) -> EstimatedChannelBlock {
        // perfect estimates through the real estimator (infinite SNR, distinct pilots)
        let l = truth.num_rus();
        let n = active.iter().max().unwrap() + 1;
        let lss = LargeScaleState::from_parts(
            l,
            n,
            truth.antennas(),
            vec![1.0; l * n],
            vec![(0..truth.antennas()).collect(); l * n],
            f64::INFINITY,
        );
        let clusters = vec![(0..l).collect(); n];
        let assoc = Association::from_clusters(l, clusters);
        let pilots: Vec<Option<usize>> = (0..n).map(Some).collect();
        estimate_channels(truth, &lss, &FourierGrid::new(truth.antennas()), &assoc, active, &pilots, n, 0).unwrap()
    }

    fn random_block(l: usize, m: usize, n: usize, f: usize, seed: u64) -> ChannelBlock {
        let users: Vec<usize> = (0..n).collect();
        let mut b = ChannelBlock::zeros(f, l, m, n, &users, 0);
        let mut rng = substream(seed, &[]);
        for rb in 0..f {
            for ru in 0..l {
                for k in 0..n {
                    for z in b.h_mut(rb, ru, k) {
                        *z = complex_normal(&mut rng, 1.0);
                    }
                }
            }
        }
        b
    }

    #[test]
    fn single_user_single_ru_is_matched_filter() {
        let truth = random_block(1, 6, 1, 1, 1);
        let est = est_from(&truth, &[0]);
        let assoc = Association::from_clusters(1, vec![vec![0]]);
        let comb = compute_combiners(&est, &assoc, &[0], 10.0, &EnergyFusion).unwrap();
        let v = comb.vector(0, 0);
        let h = truth.h(0, 0, 0);
        let norm_h = crate::channel::norm_sqr(h).sqrt();
        let align = dot_conj(v, h).norm() / norm_h;
        assert!((align - 1.0).abs() < 1e-12);
        assert!((crate::channel::norm_sqr(v) - 1.0).abs() < 1e-12);

        let snr = 3.0;
        let rec = ul_mutual_information(&truth, &comb, &[0], snr).unwrap();
        let g = norm_h * norm_h;
        assert!((rec.value[0] - (1.0 + g * snr).log2()).abs() < 1e-12);
        let dl = dl_mutual_information(&truth, &comb, &[0], snr).unwrap();
        assert!((dl.value[0] - rec.value[0]).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_equal_norm_blocks_share_energy() {
        let m = 4;
        let mut truth = ChannelBlock::zeros(1, 2, m, 1, &[0], 0);
        truth.h_mut(0, 0, 0)[0] = C64::new(2.0, 0.0);
        truth.h_mut(0, 1, 0)[1] = C64::new(0.0, 2.0);
        let est = est_from(&truth, &[0]);
        let assoc = Association::from_clusters(2, vec![vec![0, 1]]);
        let comb = compute_combiners(&est, &assoc, &[0], 5.0, &EnergyFusion).unwrap();
        assert!((comb.weight(0, 0, 0) - comb.weight(0, 0, 1)).abs() < 1e-12);
        for b in 0..2 {
            let e = crate::channel::norm_sqr(comb.block(0, 0, b));
            assert!((e - 0.5).abs() < 1e-12, "{e}");
        }
    }

    #[test]
    fn combiners_have_unit_norm_and_respect_clusters() {
        let (l, m, n, f) = (3, 4, 5, 2);
        let truth = random_block(l, m, n, f, 7);
        let est = est_from(&truth, &[0, 1, 2, 3, 4]);
        let assoc = Association::from_clusters(l, vec![vec![0], vec![0, 1], vec![2], vec![1, 2], vec![0, 1, 2]]);
        let active = [0, 1, 3, 4];
        let comb = compute_combiners(&est, &assoc, &active, 2.0, &EnergyFusion).unwrap();
        for j in 0..active.len() {
            for rb in 0..f {
                let v = comb.vector(rb, j);
                assert!((crate::channel::norm_sqr(v) - 1.0).abs() < 1e-9);
                let dense = comb.dense(rb, j, l);
                for ru in 0..l {
                    if !assoc.clusters[active[j]].contains(&ru) {
                        assert!(dense[ru * m..(ru + 1) * m].iter().all(|z| z.norm() == 0.0));
                    }
                }
            }
        }
    }

    #[test]
    fn per_rb_average_example() {
        assert!((mutual_information(&[1.0, 3.0]) - 1.5).abs() < 1e-15);
        assert_eq!(mutual_information(&[0.0]), 0.0);
    }

    fn dense_ul_sinr(truth: &ChannelBlock, comb: &CombinerSet, j: usize, f: usize, snr: f64) -> f64 {
        let l = truth.num_rus();
        let v = comb.dense(f, j, l);
        let col = |k: usize| -> Vec<C64> { (0..l).flat_map(|ru| truth.h(f, ru, k).to_vec()).collect() };
        let active = comb.active();
        let sig = dot_conj(&v, &col(active[j])).norm_sqr();
        let intf: f64 = active.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &k)| dot_conj(&v, &col(k)).norm_sqr()).sum();
        sig / (1.0 / snr + intf)
    }

    #[test]
    fn sparse_sinr_matches_dense_evaluation() {
        let (l, m, n) = (3, 4, 4);
        let truth = random_block(l, m, n, 1, 9);
        let est = est_from(&truth, &[0, 1, 2, 3]);
        let assoc = Association::from_clusters(l, vec![vec![0], vec![0, 1], vec![1, 2], vec![2]]);
        let active = [0, 1, 2, 3];
        let comb = compute_combiners(&est, &assoc, &active, 4.0, &EnergyFusion).unwrap();
        let rec = ul_mutual_information(&truth, &comb, &active, 4.0).unwrap();
        for j in 0..4 {
            let d = dense_ul_sinr(&truth, &comb, j, 0, 4.0);
            assert!((rec.sinr(j, 0) - d).abs() < 1e-12 * d.max(1.0));
        }
    }

    #[test]
    fn adding_an_interferer_never_helps() {
        let (l, m, n) = (2, 4, 3);
        let truth = random_block(l, m, n, 1, 13);
        let est = est_from(&truth, &[0, 1, 2]);
        let assoc = Association::from_clusters(l, vec![vec![0, 1]; 3]);
        let comb = compute_combiners(&est, &assoc, &[0, 1], 3.0, &EnergyFusion).unwrap();
        let base = ul_mutual_information(&truth, &comb, &[0, 1], 3.0).unwrap();
        // same combiners, evaluate with UE 2 also transmitting
        let v = comb.dense(0, 0, l);
        let h2: Vec<C64> = (0..l).flat_map(|ru| truth.h(0, ru, 2).to_vec()).collect();
        let extra = dot_conj(&v, &h2).norm_sqr();
        let s = base.sinr(0, 0);
        let h0: Vec<C64> = (0..l).flat_map(|ru| truth.h(0, ru, 0).to_vec()).collect();
        let signal = dot_conj(&v, &h0).norm_sqr();
        let with_extra = signal / (signal / s + extra);
        assert!(with_extra <= s);
    }

    #[test]
    fn dl_interference_vanishes_for_orthogonal_precoder() {
        let m = 2;
        let mut truth = ChannelBlock::zeros(1, 1, m, 2, &[0, 1], 0);
        truth.h_mut(0, 0, 0).copy_from_slice(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        truth.h_mut(0, 0, 1).copy_from_slice(&[C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
        let est = est_from(&truth, &[0, 1]);
        let assoc = Association::from_clusters(1, vec![vec![0], vec![0]]);
        let comb = compute_combiners(&est, &assoc, &[0, 1], 1e3, &EnergyFusion).unwrap();
        let dl = dl_mutual_information(&truth, &comb, &[0, 1], 1e3).unwrap();
        // v_2 ∝ h_2 ⊥ h_1, so UE 1's SINR is 1000 * |h_1^H v_1|^2
        let s = dl.sinr(0, 0);
        assert!((s - 1e3).abs() < 1e-6, "{s}");
    }

    #[test]
    fn total_power_equals_active_count() {
        let truth = random_block(2, 3, 4, 2, 17);
        let est = est_from(&truth, &[0, 1, 2, 3]);
        let assoc = Association::from_clusters(2, vec![vec![0], vec![1], vec![0, 1], vec![1]]);
        let comb = compute_combiners(&est, &assoc, &[0, 1, 2, 3], 2.0, &EnergyFusion).unwrap();
        for f in 0..2 {
            let total: f64 = (0..4).map(|j| crate::channel::norm_sqr(comb.vector(f, j))).sum();
            assert!((total - 4.0).abs() < 1e-9);
        }
    }

    #[test]
    fn global_phase_does_not_change_mutual_information() {
        let truth = random_block(2, 3, 3, 1, 19);
        let est = est_from(&truth, &[0, 1, 2]);
        let assoc = Association::from_clusters(2, vec![vec![0, 1], vec![1], vec![0]]);
        let mut comb = compute_combiners(&est, &assoc, &[0, 1, 2], 2.0, &EnergyFusion).unwrap();
        let ul = ul_mutual_information(&truth, &comb, &[0, 1, 2], 2.0).unwrap();
        let dl = dl_mutual_information(&truth, &comb, &[0, 1, 2], 2.0).unwrap();
        let rot = C64::from_polar(1.0, 1.234);
        comb.vector_mut(0, 1).iter_mut().for_each(|z| *z *= rot);
        let ul2 = ul_mutual_information(&truth, &comb, &[0, 1, 2], 2.0).unwrap();
        let dl2 = dl_mutual_information(&truth, &comb, &[0, 1, 2], 2.0).unwrap();
        for j in 0..3 {
            assert!((ul.value[j] - ul2.value[j]).abs() < 1e-12);
            assert!((dl.value[j] - dl2.value[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn ul_sinr_bounded_by_channel_gain() {
        let truth = random_block(2, 4, 1, 1, 23);
        let est = est_from(&truth, &[0]);
        let assoc = Association::from_clusters(2, vec![vec![0, 1]]);
        let comb = compute_combiners(&est, &assoc, &[0], 7.0, &EnergyFusion).unwrap();
        let rec = ul_mutual_information(&truth, &comb, &[0], 7.0).unwrap();
        let gain: f64 = (0..2).map(|l| crate::channel::norm_sqr(truth.h(0, l, 0))).sum();
        let v = comb.dense(0, 0, 2);
        let h: Vec<C64> = (0..2).flat_map(|l| truth.h(0, l, 0).to_vec()).collect();
        let cos2 = dot_conj(&v, &h).norm_sqr() / gain;
        assert!((rec.sinr(0, 0) - 7.0 * gain * cos2).abs() < 1e-9 * rec.sinr(0, 0));
        assert!(rec.sinr(0, 0) <= 7.0 * gain * (1.0 + 1e-12));
    }

    #[test]
    fn mismatched_active_set_is_rejected() {
        let truth = random_block(1, 2, 2, 1, 1);
        let est = est_from(&truth, &[0, 1]);
        let assoc = Association::from_clusters(1, vec![vec![0], vec![0]]);
        let comb = compute_combiners(&est, &assoc, &[0, 1], 1.0, &EnergyFusion).unwrap();
        assert!(ul_mutual_information(&truth, &comb, &[1, 0], 1.0).is_err());
    }

    #[test]
    fn empty_cluster_is_a_contract_violation() {
        let truth = random_block(1, 2, 2, 1, 1);
        let est = est_from(&truth, &[0, 1]);
        let assoc = Association::from_clusters(1, vec![vec![0], vec![]]);
        assert!(matches!(
            compute_combiners(&est, &assoc, &[0, 1], 1.0, &EnergyFusion),
            Err(Error::Contract(_))
        ));
    }

    /// Nominal local SINR of `v` computed from estimates only.
    fn local_sinr(v: &[C64], hs: &[Vec<C64>], k: usize, snr: f64) -> f64 {
        let sig = dot_conj(v, &hs[k]).norm_sqr();
        let intf: f64 = hs.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, h)| dot_conj(v, h).norm_sqr()).sum();
        sig / (crate::channel::norm_sqr(v) / snr + intf)
    }

    #[test]
    fn local_mmse_maximizes_nominal_sinr() {
        let m = 4;
        let snr = 5.0;
        for seed in 0..20 {
            let truth = random_block(1, m, 3, 1, 100 + seed);
            let est = est_from(&truth, &[0, 1, 2]);
            let assoc = Association::from_clusters(1, vec![vec![0]; 3]);
            let comb = compute_combiners(&est, &assoc, &[0, 1, 2], snr, &EnergyFusion).unwrap();
            let hs: Vec<Vec<C64>> = (0..3).map(|k| est.h_hat(0, 0, k).to_vec()).collect();
            for k in 0..3 {
                let v = comb.vector(0, k);
                let achieved = local_sinr(v, &hs, k, snr);
                // closed form optimum h^H B^{-1} h with B = interference + noise
                let mut b = DMatrix::<C64>::from_diagonal_element(m, m, C64::new(1.0 / snr, 0.0));
                for (_, h) in hs.iter().enumerate().filter(|&(j, _)| j != k) {
                    let hv = DVector::from_column_slice(h);
                    b += &hv * hv.adjoint();
                }
                let binv = b.try_inverse().unwrap();
                let hk = DVector::from_column_slice(&hs[k]);
                let optimum = (hk.adjoint() * binv * &hk)[(0, 0)].re;
                assert!((achieved / optimum - 1.0).abs() < 1e-9, "{achieved} vs {optimum}");
                // and no random direction does better
                let mut rng = substream(seed, &[k as u64]);
                for _ in 0..200 {
                    let r: Vec<C64> = (0..m).map(|_| complex_normal(&mut rng, 1.0)).collect();
                    assert!(local_sinr(&r, &hs, k, snr) <= achieved * (1.0 + 1e-9));
                }
            }
        }
    }

    #[test]
    fn end_to_end_with_real_estimates() {
        let m = 4;
        let lss = LargeScaleState::from_parts(2, 3, m, vec![1.0; 6], vec![vec![0, 1, 2]; 6], 10.0);
        let grid = FourierGrid::new(m);
        let truth = sample_channels(&lss, &grid, 2, &[0, 1, 2], 3, 0);
        let assoc = Association::from_clusters(2, vec![vec![0], vec![0, 1], vec![1]]);
        let est = estimate_channels(&truth, &lss, &grid, &assoc, &[0, 1, 2], &[Some(0), Some(1), Some(2)], 3, 3).unwrap();
        let comb = compute_combiners(&est, &assoc, &[0, 1, 2], 10.0, &EnergyFusion).unwrap();
        let rec = ul_mutual_information(&truth, &comb, &[0, 1, 2], 10.0).unwrap();
        assert!(rec.value.iter().all(|&x| x >= 0.0 && x.is_finite()));
        for j in 0..3 {
            let s: Vec<f64> = (0..2).map(|f| rec.sinr(j, f)).collect();
            assert!((rec.value[j] - mutual_information(&s)).abs() < 1e-15);
        }
    }
}
