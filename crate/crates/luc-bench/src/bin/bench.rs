//! Access-counting benchmark CLI.
//!
//! Example:
//!   bench --variant luc --object counter --threads 4 --ops 10000 \
//!         --mix inc=3,read=1 --think-us uniform:5:20 --seed 7 \
//!         --count-steps --csv out.csv

use clap::Parser;
use luc::client::Variant;
use luc::workload::Mix;
use luc::ObjectKind;
use luc_bench::{emit_csv, fit_affine, BenchConfig, BenchResult, ThinkTime, YieldAt};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "bench",
    about = "Measure per-operation shared-memory accesses across variants"
)]
struct Args {
    /// Implementation to measure: luc, lock, or casretry.
    #[arg(long, default_value = "luc")]
    variant: Variant,

    /// Object under test: counter, stack, queue, or set.
    #[arg(long, default_value = "counter")]
    object: ObjectKind,

    /// Number of OS threads (= processes).
    #[arg(long, default_value_t = 2)]
    threads: usize,

    /// Operations per thread.
    #[arg(long, default_value_t = 1000)]
    ops: usize,

    /// Operation mix as op=weight,op=weight (defaults to an object-specific
    /// mix).
    #[arg(long)]
    mix: Option<String>,

    /// Think time between ops, in microseconds: none, const:X, uniform:A:B,
    /// or exp:M.
    #[arg(long = "think-us", default_value = "none")]
    think_us: ThinkTime,

    /// Base RNG seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Record per-operation shared-access deltas.
    #[arg(long)]
    count_steps: bool,

    /// Write per-operation CSV rows to this path.
    #[arg(long)]
    csv: Option<PathBuf>,

    /// Probability of an OS yield per matching shared access, to raise
    /// interval contention on machines with few cores (runtime variant
    /// only).
    #[arg(long, default_value_t = 0.0)]
    yield_prob: f64,

    /// Where yields may fire: any shared access, or only the announce-side
    /// accesses (parks whole requests, so batch sizes grow with the
    /// probability).
    #[arg(long, default_value = "any")]
    yield_at: YieldAt,

    /// Consecutive yields per triggered preemption.
    #[arg(long, default_value_t = 1)]
    yield_burst: u32,

    /// Cap on simultaneously parked threads (default: no cap). With
    /// --yield-at announce this pins the batch size runners encounter.
    #[arg(long)]
    park_cap: Option<u32>,

    /// Park duration for announce-side parking, microseconds.
    #[arg(long, default_value_t = 100)]
    park_us: u64,
}

fn summarize(result: &BenchResult, requested: Variant, count_steps: bool) {
    println!(
        "bench: variant={} (requested {}) object={} n={} ops={} elapsed={:.3}s throughput={:.0} op/s",
        result.effective,
        requested,
        result.object,
        result.n,
        result.total_ops(),
        result.elapsed.as_secs_f64(),
        result.throughput()
    );
    let ks = result.measured_k();
    let k_max = ks.iter().copied().max().unwrap_or(0);
    let k_mean = if ks.is_empty() {
        0.0
    } else {
        ks.iter().sum::<usize>() as f64 / ks.len() as f64
    };
    println!("contention: k_max={k_max} k_mean={k_mean:.2} w_bound={}", result.w_bound);
    if count_steps {
        println!(
            "accesses: max={} mean={:.1}",
            result.max_accesses(),
            result.mean_accesses()
        );
        // Within one run n is fixed, so the access model collapses to an
        // affine function of k*w; report that fit when k actually varies.
        if k_max > ks.iter().copied().min().unwrap_or(0) {
            let xs: Vec<f64> = ks.iter().map(|&k| (k * result.w_bound) as f64).collect();
            let ys: Vec<f64> = result.samples.iter().map(|s| s.accesses as f64).collect();
            let (slope, intercept, r2) = fit_affine(&xs, &ys);
            println!(
                "fit: accesses ~= {slope:.3}*(k*w) + {intercept:.1}   (r2={r2:.3})"
            );
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mix = match &args.mix {
        Some(s) => match Mix::parse(s, args.object) {
            Ok(m) => Some(m),
            Err(e) => {
                eprintln!("bench: {e}");
                return ExitCode::from(2);
            }
        },
        None => None,
    };
    let cfg = BenchConfig {
        variant: args.variant,
        object: args.object,
        threads: args.threads,
        ops: args.ops,
        mix,
        think: args.think_us,
        seed: args.seed,
        count_steps: args.count_steps,
        yield_prob: args.yield_prob,
        yield_at: args.yield_at,
        yield_burst: args.yield_burst,
        park_cap: args.park_cap,
        park_us: args.park_us,
    };
    let result = luc_bench::run_bench(&cfg);
    summarize(&result, args.variant, args.count_steps);
    if let Some(path) = &args.csv {
        if let Err(e) = std::fs::write(path, emit_csv(&result)) {
            eprintln!("bench: writing {}: {e}", path.display());
            return ExitCode::from(2);
        }
        println!("csv: wrote {} rows to {}", result.total_ops(), path.display());
    }
    ExitCode::SUCCESS
}
