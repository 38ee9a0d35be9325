use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use cellfree_sched::harness::{export_conflicts, export_report, export_windows, run_simulation};
use cellfree_sched::selftest;
use cellfree_sched::{Direction, PilotMode, SchedulerKind, SimConfig};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(version, about = "Cell-free massive MIMO fairness scheduling simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and export the results.
    Simulate {
        /// Config file (`key = value` lines). Defaults are used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        scheduler: Option<SchedulerKind>,
        #[arg(long)]
        pilot_mode: Option<PilotMode>,
        #[arg(long)]
        direction: Option<Direction>,
        #[arg(long)]
        slots: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also write the final rate windows.
        #[arg(long)]
        dump_windows: bool,
        /// Also write the fixed-pilot conflict graph.
        #[arg(long)]
        dump_conflicts: bool,
    },
    /// Run the oracle suites.
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn run(cli: Cli) -> cellfree_sched::Result<()> {
    match cli.command {
        Command::Simulate {
            config,
            scheduler,
            pilot_mode,
            direction,
            slots,
            seed,
            out,
            dump_windows,
            dump_conflicts,
        } => {
            let mut cfg = match config {
                Some(path) => SimConfig::from_file(&path)?,
                None => SimConfig::default(),
            };
            if let Some(s) = scheduler {
                cfg.scheduler = s;
            }
            if let Some(p) = pilot_mode {
                cfg.pilot_mode = p;
            }
            if let Some(d) = direction {
                cfg.direction = d;
            }
            if let Some(n) = slots {
                cfg.n_slots = n;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let report = run_simulation(&cfg)?;
            report.check_invariants()?;
            let mut written = export_report(&report, &out)?;
            if dump_windows {
                written.push(export_windows(&report, &out)?);
            }
            if dump_conflicts {
                written.push(export_conflicts(&report, &out)?);
            }
            let a = &report.aggregates;
            let mut out = std::io::stdout().lock();
            // a closed pipe downstream is not an error of the run
            let _ = writeln!(
                out,
                "{} {} {}: geo mean {:.4e} b/s ({} zero), min {:.4e} b/s, {:.1}s",
                cfg.scheduler, cfg.pilot_mode, cfg.direction, a.geo_mean, a.zero_count, a.min_thr, report.wall_time_s
            );
            for p in written {
                let _ = writeln!(out, "wrote {}", p.display());
            }
            Ok(())
        }
        Command::Selftest { seed } => {
            let results = selftest::run_all(seed);
            let mut failed = 0;
            for r in &results {
                println!(
                    "{} {}: {} instances, {} mismatches",
                    if r.passed() { "PASS" } else { "FAIL" },
                    r.name,
                    r.instances,
                    r.mismatches
                );
                failed += usize::from(!r.passed());
            }
            if failed > 0 {
                Err(cellfree_sched::Error::Contract(format!("{failed} oracle suite(s) failed")))
            } else {
                Ok(())
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
