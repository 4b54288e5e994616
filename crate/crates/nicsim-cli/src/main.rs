//! `nicsim` — scenario runner, sweep driver, and oracle checker for the
//! NIC interrupt-moderation simulator.
//!
//! Exit codes: 0 success (including a passing check), 1 validation or
//! usage errors and failed checks, 2 I/O errors.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use nicsim_core::error::{Error, Result};
use nicsim_core::metrics::{export_csv, fmt_frac, interrupt_ratio};
use nicsim_core::nic::{QueueConfig, QueueId};
use nicsim_core::reference::{check_against_engine, random_trace};
use nicsim_core::scenario::{load_scenario, run_scenario, run_sweep, SweepGrid, SweepRow};
use nicsim_core::traffic::load_trace;

#[derive(Parser)]
#[command(
    name = "nicsim",
    version,
    about = "Deterministic simulator of NIC interrupt moderation under a fixed-priority RTOS"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and export its results.
    Run(RunArgs),
    /// Run a label x rate sweep grid over a base scenario.
    Sweep(SweepArgs),
    /// Replay a single-queue trace through the engine and the brute-force
    /// reference model and compare the interrupt sequences.
    Check(CheckArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario JSON file.
    #[arg(long, value_name = "FILE")]
    scenario: PathBuf,
    /// Output directory for timeseries.csv, jobs.csv, summary.csv, run.json.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Override the scenario's seed.
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
    /// Write into a non-empty output directory.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Base scenario JSON file; each cell applies its label and flood rate.
    #[arg(long, value_name = "FILE")]
    scenario: PathBuf,
    /// "paper" or "<label>,<label>@<rate>,<rate>" (e.g. "nomod,d3200@0,5000").
    #[arg(long, value_name = "GRID", default_value = "paper")]
    grid: String,
    /// Output directory; cells land in <out>/<label>/<rate>/.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Override the scenario's seed.
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
    /// Worker threads for parallel cells (default: all cores).
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
    /// Write into a non-empty output directory.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct CheckArgs {
    /// Generate a random sorted trace with this many packets.
    #[arg(long, value_name = "N", conflicts_with = "trace")]
    packets: Option<usize>,
    /// Replay arrival times from a trace CSV (ports are ignored; the
    /// check drives a single queue).
    #[arg(long, value_name = "FILE")]
    trace: Option<PathBuf>,
    /// Seed for the generated trace.
    #[arg(long, value_name = "SEED", default_value_t = 0)]
    seed: u64,
    /// Absolute timer window in microseconds (0 = immediate mode).
    #[arg(long, value_name = "US", default_value_t = 0)]
    abs: u64,
    /// Per-packet timer in microseconds.
    #[arg(long, value_name = "US", default_value_t = 0)]
    pkt: u64,
    /// Counter threshold (fire at this occupancy).
    #[arg(long, value_name = "N", default_value_t = 0)]
    threshold: usize,
    /// Queue capacity.
    #[arg(long, value_name = "N", default_value_t = 64)]
    capacity: usize,
}

/// Refuse to scribble over existing results unless --force.
fn ensure_out_dir(path: &Path, force: bool) -> Result<()> {
    if path.exists() {
        if !path.is_dir() {
            return Err(Error::validation(format!(
                "output path {} exists and is not a directory",
                path.display()
            )));
        }
        let mut entries = std::fs::read_dir(path).map_err(|e| Error::io(path, e))?;
        if entries.next().is_some() && !force {
            return Err(Error::validation(format!(
                "output directory {} is not empty (pass --force to write anyway)",
                path.display()
            )));
        }
    }
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn cmd_run(args: &RunArgs) -> Result<i32> {
    let mut scenario = load_scenario(&args.scenario)?;
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    ensure_out_dir(&args.out, args.force)?;
    let stats = run_scenario(&scenario)?;
    export_csv(&stats, &scenario.to_value(), &args.out)?;
    let ratio = interrupt_ratio(&stats.queues)
        .map(fmt_frac)
        .unwrap_or_else(|| "n/a".to_string());
    let jobs_completed: u64 = stats.tasks.iter().map(|t| t.jobs_completed).sum();
    println!(
        "run: label={} seed={} horizon_us={} packets={} interrupts={} interrupt_ratio={} \
         jobs_completed={} out={}",
        stats.label,
        stats.seed,
        stats.horizon_us,
        stats.total_packets(),
        stats.total_interrupts(),
        ratio,
        jobs_completed,
        args.out.display()
    );
    Ok(0)
}

fn sweep_row_line(row: &SweepRow) -> String {
    let ratio = row
        .interrupt_ratio
        .map(fmt_frac)
        .unwrap_or_else(|| "n/a".to_string());
    let share = row.deadline_share[0]
        .map(fmt_frac)
        .unwrap_or_else(|| "n/a".to_string());
    format!(
        "sweep: label={} rate_pps={} packets={} interrupts={} interrupt_ratio={} \
         critical_added_preemption_us={} deadline_share_g5={}",
        row.label,
        row.rate_pps,
        row.packets,
        row.interrupts,
        ratio,
        row.critical_added_preemption_us,
        share
    )
}

fn cmd_sweep(args: &SweepArgs) -> Result<i32> {
    let mut scenario = load_scenario(&args.scenario)?;
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    let grid = SweepGrid::parse(&args.grid)?;
    ensure_out_dir(&args.out, args.force)?;
    let outcome = run_sweep(&scenario, &grid, &args.out, args.jobs)?;
    for row in &outcome.rows {
        println!("{}", sweep_row_line(row));
    }
    println!(
        "sweep: {} cells -> {}",
        outcome.rows.len(),
        args.out.join("sweep.csv").display()
    );
    Ok(0)
}

fn cmd_check(args: &CheckArgs) -> Result<i32> {
    let arrivals: Vec<u64> = match (&args.trace, args.packets) {
        (Some(path), None) => load_trace(path)?
            .iter()
            .map(|row| row.arrival_time_us)
            .collect(),
        (None, Some(n)) => random_trace(n, args.seed),
        (None, None) | (Some(_), Some(_)) => {
            return Err(Error::validation(
                "check needs exactly one of --packets <N> or --trace <FILE>",
            ))
        }
    };
    let config = QueueConfig {
        queue_id: QueueId(0),
        capacity: args.capacity,
        absolute_timer_us: args.abs,
        packet_timer_us: args.pkt,
        counter_threshold: args.threshold,
        owner_priority: 1,
    };
    config.validate()?;
    let report = check_against_engine(&config, &arrivals)?;
    if report.passed() {
        println!(
            "check: PASS ({} packets, {} interrupts, engine matches reference)",
            report.packets, report.interrupts
        );
        Ok(0)
    } else {
        println!(
            "check: FAIL ({} packets): {}",
            report.packets,
            report.divergence.as_deref().unwrap_or("unknown divergence")
        );
        Ok(1)
    }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Check(args) => cmd_check(args),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            // clap routes help/version to stdout and errors to stderr.
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let code = match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    };
    std::process::exit(code);
}
