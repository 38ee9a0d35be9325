//! Monte-Carlo simulation and fairness scheduling for user-centric cell-free
//! massive MIMO networks.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: torus topology, pathloss/shadowing, LOS draws, angular
//!   supports and transmit-SNR calibration.
//! - [`channel`]: per-slot correlated channel sampling and pilot-based
//!   estimation with contamination.
//! - [`phy`]: local MMSE combining, cluster fusion, UL/DL SINR and
//!   instantaneous mutual information.
//! - [`association`]: user-centric clusters, pilot assignment and the
//!   pilot-contamination conflict graph.
//! - [`ratectl`]: sliding-window mutual-information statistics and outage
//!   rate selection.
//! - [`scheduler`]: drift-plus-penalty fairness scheduling, the conflict
//!   constrained selection solver and baseline schedulers.
//! - [`harness`]: end-to-end runs, throughput reports and file export.

pub mod association;
pub mod channel;
pub mod config;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod oracle;
pub mod phy;
pub mod ratectl;
pub mod rng;
pub mod scheduler;
pub mod selftest;
pub mod stats;

pub use config::{Direction, PilotMode, SchedulerKind, SimConfig};
pub use error::{Error, Result};
pub use harness::{run_simulation, ThroughputReport};
