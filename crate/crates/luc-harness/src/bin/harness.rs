//! Verification harness entry point.
//!
//! Two modes:
//!
//! - `harness --explore --procs N --ops-per-proc K --budget B` runs the
//!   deterministic simulator: exhaustive interleaving enumeration while the
//!   budget allows, then seeded random schedules, with structural probes,
//!   agreement replay, and a linearizability search on every schedule.
//! - `harness --stress --object X --threads N --ops M --check` runs real
//!   threads against the runtime, records a timestamped history, and (with
//!   `--check`) validates it.
//!
//! Exit status is 0 exactly when every enabled check passed.

use clap::Parser;
use luc::process::Sabotage;
use luc::ObjectKind;
use luc_harness::{history, sim, stress};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "harness",
    about = "Schedule exploration and stress checking for the universal runtime"
)]
struct Args {
    /// Explore interleavings of a small simulated universe.
    #[arg(long)]
    explore: bool,

    /// Run a real-thread workload and record its history.
    #[arg(long)]
    stress: bool,

    /// Object under test: counter, stack, queue, or set.
    #[arg(long, default_value = "counter")]
    object: ObjectKind,

    /// Simulated processes (explore mode).
    #[arg(long, default_value_t = 2)]
    procs: usize,

    /// Operations each simulated process performs (explore mode).
    #[arg(long = "ops-per-proc", default_value_t = 1)]
    ops_per_proc: usize,

    /// Total schedule budget: exhaustive enumeration first, the remainder
    /// random (explore mode).
    #[arg(long, default_value_t = 1_000_000)]
    budget: usize,

    /// Arm a deliberate defect: skip-flush-guard or read-current-slot
    /// (explore mode; the run is then expected to fail).
    #[arg(long)]
    sabotage: Option<String>,

    /// Worker threads (stress mode).
    #[arg(long, default_value_t = 4)]
    threads: usize,

    /// Operations per thread (stress mode).
    #[arg(long, default_value_t = 1000)]
    ops: usize,

    /// Validate the recorded history and agreement trace (stress mode).
    #[arg(long)]
    check: bool,

    /// Write the recorded history to this file (stress mode).
    #[arg(long)]
    history_out: Option<PathBuf>,

    /// Node budget for the exhaustive linearizability search.
    #[arg(long, default_value_t = 500_000)]
    search_budget: usize,

    /// Seed for workload generation and random schedules.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_sabotage(s: &str) -> Result<Sabotage, String> {
    match s {
        "skip-flush-guard" => Ok(Sabotage {
            skip_flush_seq_guard: true,
            ..Sabotage::default()
        }),
        "read-current-slot" => Ok(Sabotage {
            read_current_slot: true,
            ..Sabotage::default()
        }),
        other => Err(format!(
            "unknown sabotage {other:?} (expected skip-flush-guard or read-current-slot)"
        )),
    }
}

fn run_explore(args: &Args) -> Result<bool, String> {
    let scripts: Vec<Vec<(&'static str, Vec<luc::Value>)>> = (0..args.procs)
        .map(|pid| {
            let mut stream = luc::workload::OpStream::new(args.object, pid, args.seed);
            (0..args.ops_per_proc)
                .map(|_| {
                    let req = stream.next_request();
                    (req.opcode, req.args.clone())
                })
                .collect()
        })
        .collect();
    let sabotage = match &args.sabotage {
        Some(s) => parse_sabotage(s)?,
        None => Sabotage::default(),
    };
    let cfg = sim::SimConfig::new(args.object.build(), scripts).with_sabotage(sabotage);
    let opts = sim::ExploreOptions {
        budget: args.budget,
        seed: args.seed,
        ..sim::ExploreOptions::default()
    };
    println!(
        "explore: object={} procs={} ops-per-proc={} budget={} seed={}",
        args.object, args.procs, args.ops_per_proc, args.budget, args.seed
    );
    let report = sim::explore(&cfg, &opts);
    print!("{}", report.render());
    Ok(report.passed())
}

fn run_stress(args: &Args) -> Result<bool, String> {
    let cfg = stress::StressConfig {
        object: args.object,
        threads: args.threads,
        ops_per_thread: args.ops,
        seed: args.seed,
    };
    let report = stress::run(cfg);
    let total = args.threads * args.ops;
    println!(
        "stress: object={} threads={} ops-per-thread={} total={} elapsed={:.3}s ({:.0} ops/s)",
        args.object,
        args.threads,
        args.ops,
        total,
        report.elapsed.as_secs_f64(),
        total as f64 / report.elapsed.as_secs_f64().max(1e-9),
    );
    if let Some(path) = &args.history_out {
        std::fs::write(path, history::write_history(&report.history))
            .map_err(|e| format!("writing {}: {e}", path.display()))?;
        println!("history: {} events -> {}", report.history.len(), path.display());
    }
    if args.check {
        let checks = stress::check(&report, args.search_budget);
        print!("{}", checks.render());
        Ok(checks.passed())
    } else {
        Ok(true)
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let outcome = match (args.explore, args.stress) {
        (true, false) => run_explore(&args),
        (false, true) => run_stress(&args),
        _ => Err("pass exactly one of --explore or --stress".into()),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(msg) => {
            eprintln!("harness: {msg}");
            ExitCode::from(2)
        }
    }
}
