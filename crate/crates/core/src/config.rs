//! Simulation configuration.
//!
//! Config files are flat `key = value` text, one entry per line, `#` starts a
//! comment. Keys are the field names of [`SimConfig`]. Lengths are in meters,
//! bandwidths in Hz, the carrier frequency in GHz and all thresholds linear.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerKind {
    /// Drift-plus-penalty with proportional-fair utility.
    Pf,
    /// Drift-plus-penalty with hard-fair (max-min) utility.
    Hf,
    Random,
    RoundRobin,
    MaxSumRate,
}

impl SchedulerKind {
    pub fn is_dpp(self) -> bool {
        matches!(self, SchedulerKind::Pf | SchedulerKind::Hf)
    }
}

impl FromStr for SchedulerKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pf" | "pfs" => Ok(SchedulerKind::Pf),
            "hf" | "hfs" => Ok(SchedulerKind::Hf),
            "random" => Ok(SchedulerKind::Random),
            "rr" | "round_robin" => Ok(SchedulerKind::RoundRobin),
            "maxsum" | "max_sum_rate" => Ok(SchedulerKind::MaxSumRate),
            other => Err(format!("unknown scheduler '{other}'")),
        }
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchedulerKind::Pf => "pf",
            SchedulerKind::Hf => "hf",
            SchedulerKind::Random => "random",
            SchedulerKind::RoundRobin => "rr",
            SchedulerKind::MaxSumRate => "maxsum",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PilotMode {
    /// Pilots assigned once to every UE; static conflict graph.
    Fixed,
    /// Pilots reassigned each slot to the preselected UEs.
    Reassign,
}

impl FromStr for PilotMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fixed" => Ok(PilotMode::Fixed),
            "reassign" => Ok(PilotMode::Reassign),
            other => Err(format!("unknown pilot mode '{other}'")),
        }
    }
}

impl fmt::Display for PilotMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PilotMode::Fixed => "fixed",
            PilotMode::Reassign => "reassign",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Ul,
    Dl,
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ul" | "uplink" => Ok(Direction::Ul),
            "dl" | "downlink" => Ok(Direction::Dl),
            other => Err(format!("unknown direction '{other}'")),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Ul => "ul",
            Direction::Dl => "dl",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Side of the square torus area (m).
    pub area_side: f64,
    /// Number of RUs.
    pub num_rus: usize,
    /// RU grid columns (x axis); `grid_cols * grid_rows` must equal `num_rus`.
    pub grid_cols: usize,
    pub grid_rows: usize,
    /// Antennas per RU.
    pub antennas: usize,
    /// UEs per subchannel at one resource block. The simulated population is
    /// `num_rbs * users_base`.
    pub users_base: usize,
    /// Maximum number of simultaneously active UEs.
    pub k_act: usize,
    /// Preselection size for pilot reassignment.
    pub k_tilde: usize,
    /// Pilot dimension in symbols.
    pub tau_p: usize,
    /// Symbols per resource block.
    pub block_len: usize,
    /// Resource blocks per subchannel.
    pub num_rbs: usize,
    /// Bandwidth of one resource block (Hz).
    pub rb_bandwidth: f64,
    /// Association SNR threshold (linear).
    pub eta: f64,
    pub cluster_max: usize,
    /// Subspace non-orthogonality threshold (Frobenius norm).
    pub eta_f: f64,
    /// Angular spread of the scattering ring (rad).
    pub angular_spread: f64,
    /// Drift-plus-penalty weight.
    pub v: f64,
    /// Maximum virtual arrival (bit/s/Hz).
    pub a_max: f64,
    /// Mutual-information samples kept per UE.
    pub window_len: usize,
    /// Start-up slots before scheduling begins.
    pub n_init: usize,
    pub carrier_ghz: f64,
    pub bs_height: f64,
    pub ue_height: f64,
    pub seed: u64,
    pub scheduler: SchedulerKind,
    pub pilot_mode: PilotMode,
    pub direction: Direction,
    /// Scheduling slots after start-up.
    pub n_slots: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            area_side: 200.0,
            num_rus: 20,
            grid_cols: 4,
            grid_rows: 5,
            antennas: 10,
            users_base: 120,
            k_act: 70,
            k_tilde: 80,
            tau_p: 20,
            block_len: 200,
            num_rbs: 1,
            rb_bandwidth: 720e3,
            eta: 1.0,
            cluster_max: 7,
            eta_f: 0.0,
            angular_spread: std::f64::consts::PI / 8.0,
            v: 5000.0,
            a_max: 100.0,
            window_len: 100,
            n_init: 500,
            carrier_ghz: 3.5,
            bs_height: 10.0,
            ue_height: 1.5,
            seed: 1,
            scheduler: SchedulerKind::Pf,
            pilot_mode: PilotMode::Reassign,
            direction: Direction::Ul,
            n_slots: 2000,
        }
    }
}

impl SimConfig {
    /// Number of UEs sharing the simulated subchannel.
    pub fn num_users(&self) -> usize {
        self.num_rbs * self.users_base
    }

    /// Fraction of each block left for data after the pilots.
    pub fn pilot_penalty(&self) -> f64 {
        1.0 - self.tau_p as f64 / self.block_len as f64
    }

    /// Subchannel bandwidth in Hz.
    pub fn subchannel_bandwidth(&self) -> f64 {
        self.num_rbs as f64 * self.rb_bandwidth
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if !(self.area_side > 0.0) {
            return fail(format!("area_side must be positive, got {}", self.area_side));
        }
        if self.num_rus == 0 {
            return fail("num_rus must be at least 1".into());
        }
        if self.grid_cols * self.grid_rows != self.num_rus {
            return fail(format!(
                "num_rus = {} does not match a {}x{} grid",
                self.num_rus, self.grid_cols, self.grid_rows
            ));
        }
        if self.antennas == 0 {
            return fail("antennas must be at least 1".into());
        }
        if self.num_rbs == 0 {
            return fail("num_rbs must be at least 1".into());
        }
        let k = self.num_users();
        if !(self.k_act <= self.k_tilde && self.k_tilde <= k) {
            return fail(format!(
                "need k_act <= k_tilde <= users ({} <= {} <= {})",
                self.k_act, self.k_tilde, k
            ));
        }
        if self.tau_p == 0 || self.tau_p >= self.block_len {
            return fail(format!(
                "need 0 < tau_p < block_len, got tau_p = {}, block_len = {}",
                self.tau_p, self.block_len
            ));
        }
        if self.cluster_max == 0 {
            return fail("cluster_max must be at least 1".into());
        }
        if !(self.eta_f >= 0.0) {
            return fail(format!("eta_f must be nonnegative, got {}", self.eta_f));
        }
        if !(self.eta > 0.0) {
            return fail(format!("eta must be positive, got {}", self.eta));
        }
        if !(self.v > 0.0) {
            return fail(format!("v must be positive, got {}", self.v));
        }
        if !(self.a_max > 0.0) {
            return fail(format!("a_max must be positive, got {}", self.a_max));
        }
        if self.window_len == 0 {
            return fail("window_len must be at least 1".into());
        }
        if !(self.angular_spread > 0.0) {
            return fail("angular_spread must be positive".into());
        }
        if !(self.carrier_ghz > 0.0) || !(self.rb_bandwidth > 0.0) {
            return fail("carrier_ghz and rb_bandwidth must be positive".into());
        }
        if !(self.bs_height > 0.0) || !(self.ue_height > 0.0) {
            return fail("antenna heights must be positive".into());
        }
        Ok(())
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn parse<T: FromStr>(key: &str, value: &str) -> std::result::Result<T, String>
        where
            T::Err: fmt::Display,
        {
            value
                .parse::<T>()
                .map_err(|e| format!("bad value '{value}' for {key}: {e}"))
        }

        match key {
            "area_side" => self.area_side = parse(key, value)?,
            "num_rus" => self.num_rus = parse(key, value)?,
            "grid_cols" => self.grid_cols = parse(key, value)?,
            "grid_rows" => self.grid_rows = parse(key, value)?,
            "antennas" => self.antennas = parse(key, value)?,
            "users_base" => self.users_base = parse(key, value)?,
            "k_act" => self.k_act = parse(key, value)?,
            "k_tilde" => self.k_tilde = parse(key, value)?,
            "tau_p" => self.tau_p = parse(key, value)?,
            "block_len" => self.block_len = parse(key, value)?,
            "num_rbs" => self.num_rbs = parse(key, value)?,
            "rb_bandwidth" => self.rb_bandwidth = parse(key, value)?,
            "eta" => self.eta = parse(key, value)?,
            "cluster_max" => self.cluster_max = parse(key, value)?,
            "eta_f" => self.eta_f = parse(key, value)?,
            "angular_spread" => self.angular_spread = parse(key, value)?,
            "v" => self.v = parse(key, value)?,
            "a_max" => self.a_max = parse(key, value)?,
            "window_len" => self.window_len = parse(key, value)?,
            "n_init" => self.n_init = parse(key, value)?,
            "carrier_ghz" => self.carrier_ghz = parse(key, value)?,
            "bs_height" => self.bs_height = parse(key, value)?,
            "ue_height" => self.ue_height = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "scheduler" => self.scheduler = parse(key, value)?,
            "pilot_mode" => self.pilot_mode = parse(key, value)?,
            "direction" => self.direction = parse(key, value)?,
            "n_slots" => self.n_slots = parse(key, value)?,
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    /// Parses config text on top of the defaults.
    pub fn parse_str(text: &str, origin: &Path) -> Result<Self> {
        let mut cfg = SimConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::ConfigParse {
                path: origin.to_path_buf(),
                line: i + 1,
                msg,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected 'key = value', got '{line}'")))?;
            cfg.set(key.trim(), value.trim()).map_err(err)?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_str(&text, path)
    }

    /// Renders the config in the file format accepted by [`SimConfig::parse_str`].
    pub fn to_config_text(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let mut out = String::new();
        if let serde_json::Value::Object(map) = value {
            for (k, v) in map {
                let v = match v {
                    serde_json::Value::String(s) => s,
                    other => other.to_string(),
                };
                out.push_str(&format!("{k} = {v}\n"));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = SimConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.num_users(), 120);
        assert!((cfg.pilot_penalty() - 0.9).abs() < 1e-15);
    }

    #[test]
    fn users_scale_with_rbs() {
        let mut cfg = SimConfig::default();
        for (f, k) in [(1, 120), (5, 600), (10, 1200)] {
            cfg.num_rbs = f;
            assert_eq!(cfg.num_users(), k);
        }
    }

    #[test]
    fn parse_overrides_and_comments() {
        let text = "# test\nnum_rbs = 5\nscheduler = hf  # hard fair\n\npilot_mode=fixed\nv = 50\n";
        let cfg = SimConfig::parse_str(text, Path::new("t.cfg")).unwrap();
        assert_eq!(cfg.num_rbs, 5);
        assert_eq!(cfg.scheduler, SchedulerKind::Hf);
        assert_eq!(cfg.pilot_mode, PilotMode::Fixed);
        assert_eq!(cfg.v, 50.0);
        assert_eq!(cfg.k_act, 70);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let err = SimConfig::parse_str("k_act = 3\nbogus = 1\n", Path::new("x.cfg")).unwrap_err();
        match err {
            Error::ConfigParse { line, msg, .. } => {
                assert_eq!(line, 2);
                assert!(msg.contains("bogus"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(SimConfig::parse_str("k_act: 3", Path::new("x.cfg")).is_err());
        assert!(SimConfig::parse_str("k_act = many", Path::new("x.cfg")).is_err());
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = SimConfig::default();
        cfg.scheduler = SchedulerKind::RoundRobin;
        cfg.direction = Direction::Dl;
        cfg.angular_spread = 0.3;
        let back = SimConfig::parse_str(&cfg.to_config_text(), Path::new("rt")).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn validation_rejects_bad_values() {
        let bad: Vec<Box<dyn Fn(&mut SimConfig)>> = vec![
            Box::new(|c| c.num_rus = 21),
            Box::new(|c| c.k_act = 90),
            Box::new(|c| c.k_tilde = 500),
            Box::new(|c| c.tau_p = 200),
            Box::new(|c| c.v = 0.0),
            Box::new(|c| c.a_max = -1.0),
            Box::new(|c| c.cluster_max = 0),
            Box::new(|c| c.eta_f = -0.1),
            Box::new(|c| c.num_rbs = 0),
        ];
        for mutate in bad {
            let mut cfg = SimConfig::default();
            mutate(&mut cfg);
            assert!(matches!(cfg.validate(), Err(Error::Config(_))), "{cfg:?}");
        }
    }
}
