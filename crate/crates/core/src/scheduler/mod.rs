//! Drift-plus-penalty fairness scheduling and baseline schedulers.
//!
//! Each slot: pick an active set, transmit (fresh channels, estimation,
//! combining, mutual information), realize the service rate against each
//! UE's allocated outage rate, then update queues and rate windows.

mod selection;

pub use selection::{solve_selection, solve_selection_with_budget, Selection, DEFAULT_NODE_BUDGET};

use rand::seq::SliceRandom;

use crate::association::{
    assign_pilots_fixed, build_conflict_graph, form_clusters, reassign_pilots, Association,
    ConflictGraph,
};
use crate::channel::{estimate_channels, sample_channels, FourierGrid};
use crate::config::{Direction, PilotMode, SchedulerKind, SimConfig};
use crate::error::Result;
use crate::geometry::{build_scenario, LargeScaleState, NetworkGeometry};
use crate::phy::{compute_combiners, dl_mutual_information, ul_mutual_information, EnergyFusion};
use crate::ratectl::RateWindow;
use crate::rng::{purpose, substream};

/// Pilot orderings tried by the baselines before residual conflicts are
/// resolved by dropping UEs.
pub const PILOT_RETRIES: u64 = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct UeSchedulerState {
    pub queue: f64,
    pub window: RateWindow,
    /// Sum of realized service rates over scheduling slots.
    pub served_bits: f64,
    pub active_count: u64,
}

impl UeSchedulerState {
    pub fn new(window_len: usize) -> Self {
        UeSchedulerState {
            queue: 0.0,
            window: RateWindow::new(window_len),
            served_bits: 0.0,
            active_count: 0,
        }
    }
}

/// `min(V / Q, A_max)` per UE, `A_max` for an empty queue.
pub fn virtual_arrivals_pf(queues: &[f64], v: f64, a_max: f64) -> Vec<f64> {
    queues
        .iter()
        .map(|&q| if q > 0.0 { (v / q).min(a_max) } else { a_max })
        .collect()
}

/// All `A_max` while the total backlog is below `V`, otherwise all zero.
pub fn virtual_arrivals_hf(queues: &[f64], v: f64, a_max: f64) -> Vec<f64> {
    let total: f64 = queues.iter().sum();
    let a = if total < v { a_max } else { 0.0 };
    vec![a; queues.len()]
}

/// `max(Q - mu, 0) + A`.
pub fn queue_update(queue: f64, service: f64, arrival: f64) -> f64 {
    (queue - service).max(0.0) + arrival
}

/// Delivered rate: the allocated rate scaled by the pilot overhead when the
/// realized mutual information exceeds it, else 0.
pub fn service_rate(pilot_penalty: f64, rate: f64, mutual_info: f64) -> f64 {
    if mutual_info > rate {
        pilot_penalty * rate
    } else {
        0.0
    }
}

/// Top `k_tilde` eligible UEs by product (ties to the smaller index), padded
/// with zero-product eligible UEs in index order. Returned ascending.
pub fn preselect(products: &[f64], k_tilde: usize, eligible: &[bool]) -> Vec<usize> {
    let mut positive: Vec<usize> = (0..products.len())
        .filter(|&k| eligible[k] && products[k] > 0.0)
        .collect();
    positive.sort_by(|&a, &b| products[b].total_cmp(&products[a]).then(a.cmp(&b)));
    positive.truncate(k_tilde);
    if positive.len() < k_tilde {
        let room = k_tilde - positive.len();
        positive.extend(
            (0..products.len())
                .filter(|&k| eligible[k] && !(products[k] > 0.0))
                .take(room),
        );
    }
    positive.sort_unstable();
    positive
}

/// Drops the higher-indexed endpoint of every edge whose endpoints are both
/// still kept, scanning edges in order.
fn drop_conflicts(set: &[usize], graph: &ConflictGraph) -> Vec<usize> {
    let mut kept: Vec<usize> = set.to_vec();
    kept.sort_unstable();
    for (a, b) in graph.edges() {
        let has_a = kept.binary_search(&a).is_ok();
        if let (true, Ok(pos)) = (has_a, kept.binary_search(&b)) {
            kept.remove(pos);
        }
    }
    kept
}

/// Everything fixed for the duration of a run.
#[derive(Debug, Clone)]
pub struct Network {
    pub config: SimConfig,
    pub geom: NetworkGeometry,
    pub lss: LargeScaleState,
    /// Clusters with the start-up (fixed) pilot assignment.
    pub assoc: Association,
    /// Conflict graph of the fixed pilot assignment over all UEs.
    pub static_graph: ConflictGraph,
    pub grid: FourierGrid,
}

impl Network {
    pub fn build(config: &SimConfig) -> Result<Self> {
        config.validate()?;
        let (geom, lss) = build_scenario(config)?;
        let assoc = assign_pilots_fixed(&form_clusters(&lss, config), &lss, config);
        let all: Vec<usize> = (0..assoc.num_users()).collect();
        let static_graph = build_conflict_graph(&assoc, &assoc.pilots, &lss, config.eta_f, &all);
        let grid = FourierGrid::new(config.antennas);
        Ok(Network {
            config: config.clone(),
            geom,
            lss,
            assoc,
            static_graph,
            grid,
        })
    }

    pub fn num_users(&self) -> usize {
        self.assoc.num_users()
    }

    /// Realized mutual information (bit/s/Hz) of each active UE in `slot`, in
    /// the order of `active`.
    pub fn transmit(&self, active: &[usize], pilots: &[Option<usize>], slot: u64) -> Result<Vec<f64>> {
        if active.is_empty() {
            return Ok(Vec::new());
        }
        let cfg = &self.config;
        let truth = sample_channels(&self.lss, &self.grid, cfg.num_rbs, active, cfg.seed, slot);
        let est = estimate_channels(
            &truth, &self.lss, &self.grid, &self.assoc, active, pilots, cfg.tau_p, cfg.seed,
        )?;
        let comb = compute_combiners(&est, &self.assoc, active, self.lss.snr, &EnergyFusion)?;
        let record = match cfg.direction {
            Direction::Ul => ul_mutual_information(&truth, &comb, active, self.lss.snr)?,
            Direction::Dl => dl_mutual_information(&truth, &comb, active, self.lss.snr)?,
        };
        Ok(record.value)
    }

    /// Reassigns pilots to `set`, first in ascending order, then in up to
    /// `PILOT_RETRIES - 1` random orders, keeping the ordering with the fewest
    /// conflicts. Remaining conflicts are resolved by dropping UEs.
    pub fn reassign_with_retry(&self, set: &[usize], slot: u64) -> (Vec<usize>, Vec<Option<usize>>) {
        let mut order: Vec<usize> = set.to_vec();
        order.sort_unstable();
        let (mut pilots, mut graph) = reassign_pilots(&order, &self.assoc, &self.lss, &self.config);
        for attempt in 1..PILOT_RETRIES {
            if graph.is_empty() {
                break;
            }
            let mut rng = substream(self.config.seed, &[purpose::PILOT_ORDER, slot, attempt]);
            order.shuffle(&mut rng);
            let (p, g) = reassign_pilots(&order, &self.assoc, &self.lss, &self.config);
            if g.num_edges() < graph.num_edges() {
                pilots = p;
                graph = g;
            }
        }
        let kept = drop_conflicts(set, &graph);
        (kept, pilots)
    }
}

/// Active set and pilots chosen for a slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotPlan {
    pub active: Vec<usize>,
    pub pilots: Vec<Option<usize>>,
    /// Conflict graph the active set is independent in.
    pub graph: ConflictGraph,
    pub optimal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotOutcome {
    pub slot: u64,
    pub active: Vec<usize>,
    /// Allocated rate per active UE.
    pub rates: Vec<f64>,
    pub realized_mi: Vec<f64>,
    pub outage: Vec<bool>,
    /// Per-UE service rate (0 for inactive UEs).
    pub service: Vec<f64>,
    /// False if the selection solver hit its node budget.
    pub optimal: bool,
}

/// Scheduler state for one run.
#[derive(Debug, Clone)]
pub struct Scheduler {
    pub net: Network,
    pub states: Vec<UeSchedulerState>,
    /// UEs that may be scheduled after start-up.
    pub eligible: Vec<bool>,
    started: bool,
}

impl Scheduler {
    pub fn new(net: Network) -> Self {
        let n = net.num_users();
        let states = vec![UeSchedulerState::new(net.config.window_len); n];
        let eligible = (0..n).map(|k| net.assoc.is_schedulable(k)).collect();
        Scheduler {
            net,
            states,
            eligible,
            started: false,
        }
    }

    fn eligible_list(&self) -> Vec<usize> {
        (0..self.eligible.len()).filter(|&k| self.eligible[k]).collect()
    }

    fn fixed_plan(&self, active: Vec<usize>, optimal: bool) -> SlotPlan {
        SlotPlan {
            active,
            pilots: self.net.assoc.pilots.clone(),
            graph: self.net.static_graph.clone(),
            optimal,
        }
    }

    /// Uniformly random conflict-free set of at most `K_act` eligible UEs.
    pub fn plan_random(&self, slot: u64) -> SlotPlan {
        let cfg = &self.net.config;
        let mut order = self.eligible_list();
        let mut rng = substream(cfg.seed, &[purpose::SELECTION, slot]);
        order.shuffle(&mut rng);
        match cfg.pilot_mode {
            PilotMode::Fixed => {
                let mut active: Vec<usize> = Vec::new();
                for k in order {
                    if active.len() == cfg.k_act {
                        break;
                    }
                    if active.iter().all(|&j| !self.net.static_graph.contains(j, k)) {
                        active.push(k);
                    }
                }
                active.sort_unstable();
                self.fixed_plan(active, true)
            }
            PilotMode::Reassign => {
                order.truncate(cfg.k_act);
                self.retry_plan(&order, slot)
            }
        }
    }

    fn retry_plan(&self, set: &[usize], slot: u64) -> SlotPlan {
        let (active, pilots) = self.net.reassign_with_retry(set, slot);
        let graph = build_conflict_graph(&self.net.assoc, &pilots, &self.net.lss, self.net.config.eta_f, &active);
        SlotPlan {
            active,
            pilots,
            graph,
            optimal: true,
        }
    }

    /// Cyclic window of `K_act` UE indices starting at `round`, with
    /// unschedulable and conflicting later members dropped.
    pub fn plan_round_robin(&self, round: u64, slot: u64) -> SlotPlan {
        let cfg = &self.net.config;
        let n = self.net.num_users();
        let window: Vec<usize> = (0..cfg.k_act.min(n))
            .map(|i| ((round as usize % n) + i) % n)
            .filter(|&k| self.eligible[k])
            .collect();
        match cfg.pilot_mode {
            PilotMode::Fixed => {
                let mut active: Vec<usize> = Vec::new();
                for k in window {
                    if active.iter().all(|&j| !self.net.static_graph.contains(j, k)) {
                        active.push(k);
                    }
                }
                active.sort_unstable();
                self.fixed_plan(active, true)
            }
            PilotMode::Reassign => self.retry_plan(&window, slot),
        }
    }

    /// Weighted selection: fixed pilots solve over every UE with the static
    /// graph; reassignment preselects `K_tilde` UEs, assigns them pilots and
    /// solves on their conflict graph. Zero-weight UEs are never activated.
    fn plan_weighted(&self, weights: &[f64], slot: u64, retry: bool) -> SlotPlan {
        let cfg = &self.net.config;
        let n = self.net.num_users();
        match cfg.pilot_mode {
            PilotMode::Fixed => {
                let forced: Vec<usize> = (0..n).filter(|&k| !self.eligible[k] || !(weights[k] > 0.0)).collect();
                let sel = solve_selection(weights, &self.net.static_graph, cfg.k_act, &forced);
                self.fixed_plan(sel.set, sel.optimal)
            }
            PilotMode::Reassign => {
                let pre = preselect(weights, cfg.k_tilde, &self.eligible);
                let (pilots, graph) = if retry {
                    let (_, pilots) = self.net.reassign_with_retry(&pre, slot);
                    let graph = build_conflict_graph(&self.net.assoc, &pilots, &self.net.lss, cfg.eta_f, &pre);
                    (pilots, graph)
                } else {
                    reassign_pilots(&pre, &self.net.assoc, &self.net.lss, cfg)
                };
                let mut in_pre = vec![false; n];
                pre.iter().for_each(|&k| in_pre[k] = true);
                let forced: Vec<usize> = (0..n).filter(|&k| !in_pre[k] || !(weights[k] > 0.0)).collect();
                let sel = solve_selection(weights, &graph, cfg.k_act, &forced);
                SlotPlan {
                    active: sel.set,
                    pilots,
                    graph,
                    optimal: sel.optimal,
                }
            }
        }
    }

    /// Drift-plus-penalty selection with weights `Q_k * R_bar_k`.
    pub fn plan_dpp(&self, slot: u64) -> SlotPlan {
        let weights: Vec<f64> = self
            .states
            .iter()
            .zip(&self.eligible)
            .map(|(s, &e)| if e { s.queue * s.window.r_bar() } else { 0.0 })
            .collect();
        self.plan_weighted(&weights, slot, false)
    }

    /// Max-sum-rate: drift-plus-penalty selection with all queues at one.
    pub fn plan_max_sum(&self, slot: u64) -> SlotPlan {
        let weights: Vec<f64> = self
            .states
            .iter()
            .zip(&self.eligible)
            .map(|(s, &e)| if e { s.window.r_bar() } else { 0.0 })
            .collect();
        self.plan_weighted(&weights, slot, true)
    }

    fn execute(&self, plan: &SlotPlan, slot: u64) -> Result<SlotOutcome> {
        let mi = self.net.transmit(&plan.active, &plan.pilots, slot)?;
        let penalty = self.net.config.pilot_penalty();
        let mut service = vec![0.0; self.net.num_users()];
        let mut rates = Vec::with_capacity(plan.active.len());
        let mut outage = Vec::with_capacity(plan.active.len());
        for (&k, &i) in plan.active.iter().zip(&mi) {
            let r = self.states[k].window.r_star();
            let mu = service_rate(penalty, r, i);
            service[k] = mu;
            rates.push(r);
            outage.push(!(i > r));
        }
        Ok(SlotOutcome {
            slot,
            active: plan.active.clone(),
            rates,
            realized_mi: mi,
            outage,
            service,
            optimal: plan.optimal,
        })
    }

    fn record_windows(&mut self, outcome: &SlotOutcome) {
        for (&k, &i) in outcome.active.iter().zip(&outcome.realized_mi) {
            self.states[k].window.record_sample(i);
        }
    }

    /// One start-up slot: random selection, windows recorded, no queue or
    /// throughput accounting.
    pub fn startup_slot(&mut self, slot: u64) -> Result<SlotOutcome> {
        let plan = self.plan_random(slot);
        let outcome = self.execute(&plan, slot)?;
        self.record_windows(&outcome);
        Ok(outcome)
    }

    /// Ends the start-up phase: schedulable UEs that were never active get
    /// one sample equal to the smallest sample seen network-wide.
    pub fn finish_startup(&mut self) {
        let floor = self
            .states
            .iter()
            .flat_map(|s| s.window.samples())
            .fold(f64::INFINITY, f64::min);
        let floor = if floor.is_finite() { floor } else { 0.0 };
        for k in 0..self.states.len() {
            if self.eligible[k] && self.states[k].window.is_empty() {
                self.states[k].window.record_sample(floor);
            }
        }
        self.started = true;
    }

    /// Active set for scheduling round `round` (0-based) at global slot
    /// `slot` under the configured scheduler.
    pub fn plan(&self, round: u64, slot: u64) -> SlotPlan {
        match self.net.config.scheduler {
            SchedulerKind::Pf | SchedulerKind::Hf => self.plan_dpp(slot),
            SchedulerKind::Random => self.plan_random(slot),
            SchedulerKind::RoundRobin => self.plan_round_robin(round, slot),
            SchedulerKind::MaxSumRate => self.plan_max_sum(slot),
        }
    }

    /// One scheduling slot. `round` counts scheduling slots from 0; `slot` is
    /// the global slot index keying the random streams.
    pub fn scheduling_slot(&mut self, round: u64, slot: u64) -> Result<SlotOutcome> {
        if !self.started {
            self.finish_startup();
        }
        let plan = self.plan(round, slot);
        self.apply(&plan, slot)
    }

    /// Transmits `plan` and updates queues, counters and windows.
    pub fn apply(&mut self, plan: &SlotPlan, slot: u64) -> Result<SlotOutcome> {
        if !self.started {
            self.finish_startup();
        }
        let cfg = self.net.config.clone();
        let outcome = self.execute(plan, slot)?;

        if cfg.scheduler.is_dpp() {
            let queues: Vec<f64> = (0..self.states.len())
                .filter(|&k| self.eligible[k])
                .map(|k| self.states[k].queue)
                .collect();
            let arrivals = if cfg.scheduler == SchedulerKind::Pf {
                virtual_arrivals_pf(&queues, cfg.v, cfg.a_max)
            } else {
                virtual_arrivals_hf(&queues, cfg.v, cfg.a_max)
            };
            let eligible = self.eligible_list();
            for (&k, &a) in eligible.iter().zip(&arrivals) {
                let s = &mut self.states[k];
                s.queue = queue_update(s.queue, outcome.service[k], a);
            }
        }
        for &k in &outcome.active {
            self.states[k].active_count += 1;
        }
        for (s, &mu) in self.states.iter_mut().zip(&outcome.service) {
            s.served_bits += mu;
        }
        self.record_windows(&outcome);
        Ok(outcome)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pf_arrivals() {
        assert_eq!(virtual_arrivals_pf(&[0.0, 100.0, 50.0], 5000.0, 100.0), vec![100.0, 50.0, 100.0]);
    }

    #[test]
    fn hf_arrivals() {
        assert_eq!(virtual_arrivals_hf(&[2000.0, 2000.0], 5000.0, 100.0), vec![100.0; 2]);
        assert_eq!(virtual_arrivals_hf(&[3000.0, 3000.0], 5000.0, 100.0), vec![0.0; 2]);
        assert_eq!(virtual_arrivals_hf(&[0.0; 3], 5000.0, 100.0), vec![100.0; 3]);
    }

    #[test]
    fn queue_and_service_arithmetic() {
        assert_eq!(queue_update(5.0, 3.0, 2.0), 4.0);
        assert_eq!(queue_update(1.0, 5.0, 0.0), 0.0);
        assert!((service_rate(0.9, 2.0, 2.5) - 1.8).abs() < 1e-15);
        assert_eq!(service_rate(0.9, 2.0, 1.5), 0.0);
        assert_eq!(service_rate(0.9, 2.0, 2.0), 0.0);
    }

    #[test]
    fn preselection() {
        let all = [true; 4];
        assert_eq!(preselect(&[5.0, 4.0, 3.0, 2.0], 2, &all), vec![0, 1]);
        assert_eq!(preselect(&[1.0; 4], 2, &all), vec![0, 1]);
        assert_eq!(preselect(&[1.0; 4], 9, &all), vec![0, 1, 2, 3]);
        assert_eq!(preselect(&[0.0, 0.0, 3.0, 0.0], 2, &all), vec![0, 2]);
        assert_eq!(preselect(&[5.0, 4.0, 3.0], 2, &[false, true, true]), vec![1, 2]);
    }

    #[test]
    fn drop_rule_keeps_lower_index() {
        let g = ConflictGraph::from_edges([(1, 4), (2, 4), (4, 6)]);
        assert_eq!(drop_conflicts(&[1, 2, 4, 6], &g), vec![1, 2, 6]);
    }
}
