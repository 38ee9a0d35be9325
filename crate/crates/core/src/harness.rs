//! End-to-end runs and result export.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::scheduler::{Network, Scheduler};
use crate::stats::{geometric_mean, mean_log_utility, Welford};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeRow {
    pub ue_id: usize,
    pub x: f64,
    pub y: f64,
    /// Mean service rate over scheduling slots (bit/s/Hz).
    pub mu_bar: f64,
    /// Throughput (bit/s).
    pub mu_tilde: f64,
    pub activity_frac: f64,
    pub schedulable: bool,
    /// Realized mutual information over all slots (start-up included) where
    /// the UE was active.
    pub mi_mean: f64,
    pub mi_std: f64,
    pub mi_count: u64,
    pub final_queue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotRow {
    pub slot: usize,
    pub sum_mu: f64,
    /// Running geometric mean of throughput over positive UEs (bit/s).
    pub geo_mean: f64,
    /// Running minimum throughput (bit/s).
    pub min_thr: f64,
    pub max_queue: f64,
    pub min_queue: f64,
    /// Running mean log-throughput over positive UEs.
    pub utility: f64,
    pub num_active: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub geo_mean: f64,
    pub zero_count: usize,
    pub min_thr: f64,
    pub sum_thr: f64,
    pub utility: f64,
    /// Slots where the selection solver returned a non-proven incumbent.
    pub suboptimal_slots: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputReport {
    pub config: SimConfig,
    pub users: Vec<UeRow>,
    pub slots: Vec<SlotRow>,
    pub aggregates: Aggregates,
    /// Rate-window contents at the end of the run, oldest first.
    pub windows: Vec<Vec<f64>>,
    /// Conflict graph edges of the fixed pilot assignment.
    pub conflict_edges: Vec<(usize, usize)>,
    pub snr: f64,
    pub wall_time_s: f64,
}

impl ThroughputReport {
    pub fn throughputs(&self) -> Vec<f64> {
        self.users.iter().map(|u| u.mu_tilde).collect()
    }

    /// Throughputs of the UEs that have a serving cluster.
    pub fn schedulable_throughputs(&self) -> Vec<f64> {
        self.users.iter().filter(|u| u.schedulable).map(|u| u.mu_tilde).collect()
    }

    /// Schedulable UE closest to the area center among the first
    /// `users_base` UEs (whose positions do not depend on `num_rbs`).
    pub fn central_ue(&self) -> Option<usize> {
        let c = self.config.area_side / 2.0;
        self.users
            .iter()
            .take(self.config.users_base)
            .filter(|u| u.schedulable)
            .min_by(|a, b| {
                let da = (a.x - c).powi(2) + (a.y - c).powi(2);
                let db = (b.x - c).powi(2) + (b.y - c).powi(2);
                da.total_cmp(&db)
            })
            .map(|u| u.ue_id)
    }

    /// Checks conservation and activity bounds.
    pub fn check_invariants(&self) -> Result<()> {
        let n = self.slots.len() as f64;
        let per_ue: f64 = self.users.iter().map(|u| u.mu_bar * n).sum();
        let per_slot: f64 = self.slots.iter().map(|s| s.sum_mu).sum();
        if (per_ue - per_slot).abs() > 1e-9 * per_slot.abs().max(1.0) {
            return Err(Error::Contract(format!(
                "served totals disagree: {per_ue} over UEs vs {per_slot} over slots"
            )));
        }
        let activity: f64 = self.users.iter().map(|u| u.activity_frac * n).sum();
        if activity > n * self.config.k_act as f64 + 1e-6 {
            return Err(Error::Contract(format!("activity {activity} exceeds slot budget")));
        }
        if self.slots.iter().any(|s| s.min_queue < 0.0) {
            return Err(Error::Contract("negative queue".into()));
        }
        Ok(())
    }
}

/// Runs start-up and scheduling for `config` and summarizes the scheduling
/// slots.
pub fn run_simulation(config: &SimConfig) -> Result<ThroughputReport> {
    let start = Instant::now();
    config.validate()?;
    let net = Network::build(config)?;
    let scale = config.subchannel_bandwidth();
    let snr = net.lss.snr;
    let conflict_edges: Vec<(usize, usize)> = net.static_graph.edges().collect();
    let positions = net.geom.ue_positions.clone();
    let mut sched = Scheduler::new(net);
    let n_users = sched.states.len();

    let mut mi_stats = vec![Welford::new(); n_users];
    for s in 0..config.n_init {
        let outcome = sched.startup_slot(s as u64)?;
        for (&k, &i) in outcome.active.iter().zip(&outcome.realized_mi) {
            mi_stats[k].push(i);
        }
    }
    sched.finish_startup();

    let mut slots = Vec::with_capacity(config.n_slots);
    let mut suboptimal_slots = 0;
    let mut thr = vec![0.0; n_users];
    for round in 0..config.n_slots {
        let slot = (config.n_init + round) as u64;
        let outcome = sched.scheduling_slot(round as u64, slot)?;
        if !outcome.optimal {
            suboptimal_slots += 1;
        }
        for (&k, &i) in outcome.active.iter().zip(&outcome.realized_mi) {
            mi_stats[k].push(i);
        }
        let sum_mu: f64 = outcome.service.iter().sum();
        let elapsed = (round + 1) as f64;
        for (t, s) in thr.iter_mut().zip(&sched.states) {
            *t = s.served_bits / elapsed * scale;
        }
        let queues = sched.states.iter().map(|s| s.queue);
        slots.push(SlotRow {
            slot: round,
            sum_mu,
            geo_mean: geometric_mean(&thr).0,
            min_thr: thr.iter().copied().fold(f64::INFINITY, f64::min),
            max_queue: queues.clone().fold(0.0, f64::max),
            min_queue: queues.fold(f64::INFINITY, f64::min),
            utility: mean_log_utility(&thr),
            num_active: outcome.active.len(),
        });
    }

    let n = config.n_slots as f64;
    let users: Vec<UeRow> = (0..n_users)
        .map(|k| {
            let s = &sched.states[k];
            let mu_bar = if n > 0.0 { s.served_bits / n } else { 0.0 };
            UeRow {
                ue_id: k,
                x: positions[k].x,
                y: positions[k].y,
                mu_bar,
                mu_tilde: mu_bar * scale,
                activity_frac: if n > 0.0 { s.active_count as f64 / n } else { 0.0 },
                schedulable: sched.eligible[k],
                mi_mean: mi_stats[k].mean(),
                mi_std: mi_stats[k].std_dev(),
                mi_count: mi_stats[k].count(),
                final_queue: s.queue,
            }
        })
        .collect();
    let throughputs: Vec<f64> = users.iter().map(|u| u.mu_tilde).collect();
    let (geo_mean, zero_count) = geometric_mean(&throughputs);
    let aggregates = Aggregates {
        geo_mean,
        zero_count,
        min_thr: throughputs.iter().copied().fold(f64::INFINITY, f64::min),
        sum_thr: throughputs.iter().sum(),
        utility: mean_log_utility(&throughputs),
        suboptimal_slots,
    };
    let windows = sched.states.iter().map(|s| s.window.samples().collect()).collect();
    Ok(ThroughputReport {
        config: config.clone(),
        users,
        slots,
        aggregates,
        windows,
        conflict_edges,
        snr,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RunMeta {
    pub config: SimConfig,
    pub code_version: String,
    pub seed: u64,
    pub wall_time_s: f64,
    pub snr: f64,
    pub aggregates: Aggregates,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Writes `users.csv`, `slots.csv` and `meta.json` into directory `dir`,
/// creating it if needed. Returns the written paths.
pub fn export_report(report: &ThroughputReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut users = String::from("ue_id,x,y,mu_bar_bpcu,mu_tilde_bps,activity_frac\n");
    for u in &report.users {
        users.push_str(&format!(
            "{},{},{},{},{},{}\n",
            u.ue_id, u.x, u.y, u.mu_bar, u.mu_tilde, u.activity_frac
        ));
    }
    let mut slots = String::from("slot,sum_mu,geo_mean,min_thr,max_queue\n");
    for s in &report.slots {
        slots.push_str(&format!(
            "{},{},{},{},{}\n",
            s.slot, s.sum_mu, s.geo_mean, s.min_thr, s.max_queue
        ));
    }
    let meta = RunMeta {
        config: report.config.clone(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: report.config.seed,
        wall_time_s: report.wall_time_s,
        snr: report.snr,
        aggregates: report.aggregates.clone(),
    };
    let mut meta_text = serde_json::to_string_pretty(&meta)?;
    meta_text.push('\n');

    let paths = vec![dir.join("users.csv"), dir.join("slots.csv"), dir.join("meta.json")];
    write_file(&paths[0], &users)?;
    write_file(&paths[1], &slots)?;
    write_file(&paths[2], &meta_text)?;
    Ok(paths)
}

/// Writes `windows.csv` (`ue_id,sample_index,value`) into `dir`.
pub fn export_windows(report: &ThroughputReport, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut text = String::from("ue_id,sample_index,value\n");
    for (k, w) in report.windows.iter().enumerate() {
        for (i, v) in w.iter().enumerate() {
            text.push_str(&format!("{k},{i},{v}\n"));
        }
    }
    let path = dir.join("windows.csv");
    write_file(&path, &text)?;
    Ok(path)
}

/// Writes the fixed-pilot conflict graph to `conflicts.txt` in `dir`.
pub fn export_conflicts(report: &ThroughputReport, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut text = String::new();
    for (a, b) in &report.conflict_edges {
        text.push_str(&format!("{a} {b}\n"));
    }
    let path = dir.join("conflicts.txt");
    write_file(&path, &text)?;
    Ok(path)
}
