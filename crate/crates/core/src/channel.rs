//! Block-fading channel realizations and pilot-based estimation.
//!
//! A link's channel is `sqrt(beta * M / |S|) * F_S * nu` where `F_S` holds the
//! columns of the unitary `M`-point DFT matrix selected by the angular support
//! `S` and `nu` is i.i.d. CN(0, 1). Estimates are generated directly at the
//! output of the pilot matched filter followed by projection onto `F_S`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::association::Association;
use crate::error::{Error, Result};
use crate::geometry::LargeScaleState;
use crate::rng::{purpose, substream};

pub type C64 = Complex64;

const ABSENT: usize = usize::MAX;

/// Columns of the unitary DFT matrix, `[F]_{m,n} = exp(-j 2 pi m n / M) / sqrt(M)`.
#[derive(Debug, Clone)]
pub struct FourierGrid {
    antennas: usize,
    // column-major
    entries: Vec<C64>,
}

impl FourierGrid {
    pub fn new(antennas: usize) -> Self {
        let scale = 1.0 / (antennas as f64).sqrt();
        let mut entries = Vec::with_capacity(antennas * antennas);
        for n in 0..antennas {
            for m in 0..antennas {
                // reduce the exponent modulo M before converting to an angle
                let e = (m * n) % antennas;
                let phase = -2.0 * std::f64::consts::PI * e as f64 / antennas as f64;
                entries.push(C64::from_polar(scale, phase));
            }
        }
        FourierGrid { antennas, entries }
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    #[inline]
    pub fn column(&self, n: usize) -> &[C64] {
        &self.entries[n * self.antennas..(n + 1) * self.antennas]
    }

    /// `F_S^H x`
    pub fn analyze(&self, support: &[usize], x: &[C64]) -> Vec<C64> {
        support.iter().map(|&n| dot_conj(self.column(n), x)).collect()
    }

    /// `out = F_S c`
    pub fn synthesize(&self, support: &[usize], coeffs: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
        for (&n, &c) in support.iter().zip(coeffs) {
            for (o, &f) in out.iter_mut().zip(self.column(n)) {
                *o += f * c;
            }
        }
    }

    /// Orthogonal projection onto the span of `F_S`, applied as `F_S (F_S^H x)`.
    pub fn project(&self, support: &[usize], x: &[C64], out: &mut [C64]) {
        let coeffs = self.analyze(support, x);
        self.synthesize(support, &coeffs, out);
    }
}

/// `a^H b`
#[inline]
pub fn dot_conj(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).fold(C64::new(0.0, 0.0), |acc, (x, y)| acc + x.conj() * y)
}

#[inline]
pub fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Draws a CN(0, variance) sample.
#[inline]
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * s, im * s)
}

/// Per-RU M-vectors for a subset of UEs on every resource block of a slot.
#[derive(Debug, Clone)]
pub struct ChannelBlock {
    num_rbs: usize,
    num_rus: usize,
    antennas: usize,
    users: Vec<usize>,
    position: Vec<usize>,
    data: Vec<C64>,
    pub slot: u64,
}

impl ChannelBlock {
    /// All-zero block over `users` (global UE indices below `population`).
    pub fn zeros(
        num_rbs: usize,
        num_rus: usize,
        antennas: usize,
        population: usize,
        users: &[usize],
        slot: u64,
    ) -> Self {
        let mut position = vec![ABSENT; population];
        for (j, &k) in users.iter().enumerate() {
            position[k] = j;
        }
        ChannelBlock {
            num_rbs,
            num_rus,
            antennas,
            users: users.to_vec(),
            position,
            data: vec![C64::new(0.0, 0.0); num_rbs * num_rus * users.len() * antennas],
            slot,
        }
    }

    pub fn num_rbs(&self) -> usize {
        self.num_rbs
    }

    pub fn num_rus(&self) -> usize {
        self.num_rus
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn users(&self) -> &[usize] {
        &self.users
    }

    pub fn contains(&self, k: usize) -> bool {
        self.position.get(k).is_some_and(|&p| p != ABSENT)
    }

    #[inline]
    fn offset(&self, f: usize, l: usize, k: usize) -> usize {
        let j = self.position[k];
        debug_assert!(j != ABSENT, "UE {k} not in channel block");
        ((f * self.num_rus + l) * self.users.len() + j) * self.antennas
    }

    /// Channel of UE `k` at RU `l` on resource block `f`.
    #[inline]
    pub fn h(&self, f: usize, l: usize, k: usize) -> &[C64] {
        let o = self.offset(f, l, k);
        &self.data[o..o + self.antennas]
    }

    #[inline]
    pub fn h_mut(&mut self, f: usize, l: usize, k: usize) -> &mut [C64] {
        let o = self.offset(f, l, k);
        let m = self.antennas;
        &mut self.data[o..o + m]
    }
}

/// Samples fresh channels for `users` in slot `slot`. Each UE draws from its
/// own `(slot, UE)` substream.
pub fn sample_channels(
    lss: &LargeScaleState,
    grid: &FourierGrid,
    num_rbs: usize,
    users: &[usize],
    seed: u64,
    slot: u64,
) -> ChannelBlock {
    let m = lss.antennas;
    let mut block = ChannelBlock::zeros(num_rbs, lss.num_rus, m, lss.num_users, users, slot);
    let mut nu = Vec::with_capacity(m);
    for &k in users {
        let mut rng = substream(seed, &[purpose::CHANNEL, slot, k as u64]);
        for f in 0..num_rbs {
            for l in 0..lss.num_rus {
                let support = lss.support(l, k);
                let scale = (lss.beta(l, k) * m as f64 / support.len() as f64).sqrt();
                nu.clear();
                nu.extend((0..support.len()).map(|_| complex_normal(&mut rng, 1.0) * scale));
                grid.synthesize(support, &nu, block.h_mut(f, l, k));
            }
        }
    }
    block
}

/// Channel estimates held by the RUs: non-zero only where the UE is active
/// and served by the RU.
#[derive(Debug, Clone)]
pub struct EstimatedChannelBlock {
    pub block: ChannelBlock,
    present: Vec<bool>,
}

impl EstimatedChannelBlock {
    #[inline]
    pub fn is_present(&self, l: usize, k: usize) -> bool {
        self.block.contains(k) && self.present[l * self.block.users.len() + self.block.position[k]]
    }

    #[inline]
    pub fn h_hat(&self, f: usize, l: usize, k: usize) -> &[C64] {
        self.block.h(f, l, k)
    }
}

/// Pilot-matched, subspace-projected estimates for every active UE at each
/// serving RU.
///
/// At RU `l` on pilot `p` the matched-filter output is the sum of all active
/// channels on that pilot plus CN(0, 1/(tau_p snr)) noise; UE `k` on pilot
/// `p` obtains its estimate by projecting that output onto its own subspace.
/// `pilots` is indexed by global UE index.
#[allow(clippy::too_many_arguments)]
pub fn estimate_channels(
    truth: &ChannelBlock,
    lss: &LargeScaleState,
    grid: &FourierGrid,
    assoc: &Association,
    active: &[usize],
    pilots: &[Option<usize>],
    tau_p: usize,
    seed: u64,
) -> Result<EstimatedChannelBlock> {
    let m = truth.antennas;
    let noise_var = 1.0 / (tau_p as f64 * lss.snr);
    for &k in active {
        match pilots.get(k).copied().flatten() {
            Some(p) if p < tau_p => {}
            Some(p) => {
                return Err(Error::Contract(format!(
                    "UE {k} has pilot {p} outside [0, {tau_p})"
                )))
            }
            None => return Err(Error::Contract(format!("active UE {k} has no pilot"))),
        }
        if !truth.contains(k) {
            return Err(Error::Contract(format!("no channel sampled for active UE {k}")));
        }
    }

    let mut est = ChannelBlock::zeros(
        truth.num_rbs,
        truth.num_rus,
        m,
        truth.position.len(),
        active,
        truth.slot,
    );
    let mut present = vec![false; truth.num_rus * active.len()];
    let mut is_active = vec![false; truth.position.len()];
    for &k in active {
        is_active[k] = true;
    }

    let mut matched = vec![C64::new(0.0, 0.0); tau_p * m];
    let mut used = vec![false; tau_p];
    for l in 0..truth.num_rus {
        let targets: Vec<usize> = assoc.served[l]
            .iter()
            .copied()
            .filter(|&k| is_active[k])
            .collect();
        if targets.is_empty() {
            continue;
        }
        used.iter_mut().for_each(|u| *u = false);
        for &k in &targets {
            used[pilots[k].unwrap()] = true;
        }
        for (j, &k) in active.iter().enumerate() {
            if assoc.served[l].binary_search(&k).is_ok() {
                present[l * active.len() + j] = true;
            }
        }
        for f in 0..truth.num_rbs {
            matched.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
            for (p, _) in used.iter().enumerate().filter(|(_, &u)| u) {
                let y = &mut matched[p * m..(p + 1) * m];
                let mut rng = substream(
                    seed,
                    &[purpose::PILOT_NOISE, truth.slot, l as u64, p as u64, f as u64],
                );
                if noise_var > 0.0 {
                    for z in y.iter_mut() {
                        *z = complex_normal(&mut rng, noise_var);
                    }
                }
            }
            for &i in active {
                let p = pilots[i].unwrap();
                if !used[p] {
                    continue;
                }
                let y = &mut matched[p * m..(p + 1) * m];
                for (z, &h) in y.iter_mut().zip(truth.h(f, l, i)) {
                    *z += h;
                }
            }
            for &k in &targets {
                let p = pilots[k].unwrap();
                grid.project(
                    lss.support(l, k),
                    &matched[p * m..(p + 1) * m],
                    est.h_mut(f, l, k),
                );
            }
        }
    }
    Ok(EstimatedChannelBlock {
        block: est,
        present,
    })
}
