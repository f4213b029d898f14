//! Acceptance gate: six end-to-end criteria covering agreement, small-scale
//! linearizability, exhaustive interleaving probes, the access-bound model,
//! negative controls, and the LL/SC layer. Each criterion is one test that
//! prints a single `criterion N ...: PASS` line (visible with
//! `--nocapture`); tolerances are pinned as constants next to each test.

use luc::client::{build_fleet, Variant};
use luc::llsc::VersionedCell;
use luc::objmodel::{Counter, Queue};
use luc::workload::Mix;
use luc::{ObjectKind, Sabotage, Value};
use luc_bench::{
    fit_affine, fit_plane, measured_k, run_bench, BenchConfig, BenchResult, ThinkTime, YieldAt,
};
use luc_harness::checker::{check_linearizable, CheckOutcome};
use luc_harness::oracle::replay_phases;
use luc_harness::sim::{explore, ExploreOptions, SimConfig};
use luc_harness::stress::{self, StressConfig};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Barrier};
use std::time::Instant;

/// Criterion 1 — exactly-once and agreement. For n in {1,2,4,8} and 20
/// seeds each, every run's `inc` returns must form a permutation of
/// 0..m-1 and a trailing read must see exactly m. 80 runs x 1280 ops
/// = 102,400 increments (>= 10^5). Zero tolerance, < 30 s.
#[test]
fn criterion_1_exactly_once_and_agreement() {
    const OPS_PER_RUN: usize = 1280;
    const SEEDS: u64 = 20;
    const TIME_BUDGET_S: u64 = 30;

    let t0 = Instant::now();
    let mut total_ops = 0usize;
    for &n in &[1usize, 2, 4, 8] {
        let per_thread = OPS_PER_RUN / n;
        for seed in 0..SEEDS {
            let (fleet, effective) = build_fleet(Variant::Luc, ObjectKind::Counter, n);
            assert_eq!(effective, Variant::Luc);
            let mut clients = fleet.clients;
            let mut returns: Vec<i64> = Vec::with_capacity(OPS_PER_RUN);
            let mut lanes: Vec<(Box<dyn luc::client::Client>, Vec<i64>)> = Vec::new();
            std::thread::scope(|scope| {
                let mut joins = Vec::new();
                for mut client in clients.drain(..) {
                    joins.push(scope.spawn(move || {
                        let mut got = Vec::with_capacity(per_thread);
                        for _ in 0..per_thread {
                            match client.apply("inc", &[]) {
                                Value::Int(v) => got.push(v),
                                other => panic!("inc returned {other:?}"),
                            }
                        }
                        (client, got)
                    }));
                }
                for j in joins {
                    lanes.push(j.join().expect("worker panicked"));
                }
            });
            let mut first = lanes.remove(0);
            returns.extend(first.1.iter());
            for lane in &lanes {
                returns.extend(lane.1.iter());
            }
            let m = (per_thread * n) as i64;
            returns.sort_unstable();
            let expected: Vec<i64> = (0..m).collect();
            assert_eq!(
                returns, expected,
                "n={n} seed={seed}: inc returns are not a permutation of 0..{m}"
            );
            assert_eq!(
                first.0.apply("read", &[]),
                Value::Int(m),
                "n={n} seed={seed}: final counter value is not the op count"
            );
            total_ops += m as usize;
        }
    }
    let elapsed = t0.elapsed();
    assert!(total_ops >= 100_000, "only {total_ops} ops executed");
    assert!(
        elapsed.as_secs() < TIME_BUDGET_S,
        "criterion 1 exceeded its {TIME_BUDGET_S}s budget: {elapsed:?}"
    );
    println!(
        "criterion 1 (exactly-once & agreement): PASS — {total_ops} increments over 80 runs, \
         all permutations and final values exact, {elapsed:.2?}"
    );
}

/// Criterion 2 — linearizability at small scale. 1,000 histories per
/// object (counter, stack, queue, set), each <= 20 events, recorded from
/// the real multi-threaded runtime; all must check linearizable with a
/// full witness and replay exactly against the phase oracle. Zero
/// tolerance, < 5 min.
#[test]
fn criterion_2_linearizability_small_scale() {
    const HISTORIES_PER_OBJECT: u64 = 1000;
    const SEARCH_BUDGET: usize = 500_000;
    const TIME_BUDGET_S: u64 = 300;

    let t0 = Instant::now();
    let mut checked = 0usize;
    for kind in ObjectKind::ALL {
        for seed in 0..HISTORIES_PER_OBJECT {
            // Rotate shapes; every one stays within 20 events.
            let (threads, ops) = [(2, 5), (3, 3), (4, 2)][(seed % 3) as usize];
            let report = stress::run(StressConfig {
                object: kind,
                threads,
                ops_per_thread: ops,
                seed: seed * 31 + kind as u64,
            });
            assert!(
                report.history.len() <= 20,
                "{kind} seed {seed}: {} events", report.history.len()
            );
            let initial = kind.build().reference();
            match check_linearizable(&report.history, initial, SEARCH_BUDGET) {
                Ok(CheckOutcome::Linearizable { .. }) => {}
                other => panic!("{kind} seed {seed}: checker says {other:?}"),
            }
            replay_phases(&report.phases, kind.build().reference())
                .unwrap_or_else(|e| panic!("{kind} seed {seed}: phase oracle: {e}"));
            checked += 1;
        }
    }
    let elapsed = t0.elapsed();
    assert!(
        elapsed.as_secs() < TIME_BUDGET_S,
        "criterion 2 exceeded its {TIME_BUDGET_S}s budget: {elapsed:?}"
    );
    println!(
        "criterion 2 (linearizability, small scale): PASS — {checked} histories across 4 objects \
         all linearizable and oracle-exact, {elapsed:.2?}"
    );
}

/// The six structural probes criterion 3 quantifies over. The explorer
/// runs a superset; these six must be present and clean.
const CRITERION_3_PROBES: [&str; 6] = [
    "toggle-parity",
    "seq-increment",
    "item-stamp-bound",
    "attempt-publications",
    "write-set-determinism",
    "exactly-once",
];

fn explore_clean(cfg: &SimConfig, budget: usize, seed: u64) -> (usize, bool) {
    let opts = ExploreOptions {
        budget,
        seed,
        ..ExploreOptions::default()
    };
    let report = explore(cfg, &opts);
    let six_clean = report
        .violations
        .iter()
        .all(|v| !CRITERION_3_PROBES.contains(&v.probe.as_str()));
    if !report.passed() {
        panic!(
            "explorer found violations:\n{}",
            report.render()
        );
    }
    (report.schedules_checked, six_clean)
}

/// Criterion 3 — exhaustive interleaving probes. n=2, one op per process,
/// on the counter and on a 2-element queue; every schedule within the
/// budget must satisfy all six structural probes. Zero counterexamples,
/// < 10 min.
#[test]
fn criterion_3_interleaving_probes() {
    const BUDGET: usize = 150_000;
    const TIME_BUDGET_S: u64 = 600;

    let t0 = Instant::now();
    let counter_cfg = SimConfig::new(
        Arc::new(Counter::new()),
        vec![vec![("inc", vec![])], vec![("inc", vec![])]],
    );
    let (counter_scheds, six_c) = explore_clean(&counter_cfg, BUDGET, 0xACCE);

    let queue_cfg = SimConfig::new(
        Arc::new(Queue::new(vec![1, 2])),
        vec![
            vec![("enqueue", vec![Value::Int(3)])],
            vec![("dequeue", vec![])],
        ],
    );
    let (queue_scheds, six_q) = explore_clean(&queue_cfg, BUDGET, 0xACCF);

    assert!(six_c && six_q);
    let elapsed = t0.elapsed();
    assert!(
        elapsed.as_secs() < TIME_BUDGET_S,
        "criterion 3 exceeded its {TIME_BUDGET_S}s budget: {elapsed:?}"
    );
    println!(
        "criterion 3 (interleaving probes): PASS — counter {counter_scheds} + queue {queue_scheds} \
         schedules, six probes clean, {elapsed:.2?}"
    );
}

/// One calibration/fresh battery run for criterion 4.
struct Regime {
    object: ObjectKind,
    threads: usize,
    ops: usize,
    mix: Option<&'static str>,
    think: ThinkTime,
    park_cap: Option<u32>,
}

impl Regime {
    fn run(&self, seed: u64) -> BenchResult {
        let mix = self.mix.map(|m| Mix::parse(m, self.object).expect("valid mix"));
        run_bench(&BenchConfig {
            variant: Variant::Luc,
            object: self.object,
            threads: self.threads,
            ops: self.ops,
            mix,
            think: self.think,
            seed,
            count_steps: true,
            yield_prob: if self.park_cap.is_some() { 1.0 } else { 0.0 },
            yield_at: YieldAt::Announce,
            yield_burst: 1,
            park_cap: self.park_cap,
            park_us: 150,
        })
    }
}

/// A run's sweep point: its costliest op, paired with that op's own
/// measured contention. Pairing the max with the rung's median k instead
/// would mismatch them — the costliest op is often one where scheduler
/// preemption grew the batch past the parking cap, and its own k reflects
/// that, keeping such ops on the model line. Many ops tie at a cap's
/// plateau cost; interval contention only ever over-approximates batch
/// size, so the tightest honest k for that cost is the smallest among the
/// tied ops.
fn rung_point(result: &BenchResult) -> (f64, f64) {
    let ks = measured_k(&result.samples, result.n);
    let mut best = (0u64, usize::MAX);
    for (s, k) in result.samples.iter().zip(ks) {
        if s.accesses > best.0 || (s.accesses == best.0 && k < best.1) {
            best = (s.accesses, k);
        }
    }
    ((best.1 * result.w_bound) as f64, best.0 as f64)
}

fn per_op_points(result: &BenchResult, into: &mut Vec<(f64, f64, f64)>) {
    let ks = measured_k(&result.samples, result.n);
    for (s, k) in result.samples.iter().zip(ks) {
        into.push((
            result.n as f64,
            (k * result.w_bound) as f64,
            s.accesses as f64,
        ));
    }
}

/// Criterion 4 — step-bound model. An n-sweep (counter, heavy think time,
/// k ~= 1) and a k*w-sweep (queue, announce-parking ladder) must each fit
/// an affine model with R^2 >= 0.9; the k*w slope must be stable within 2x
/// across two independent sweeps; and after fitting envelope constants
/// C1, C2, C3 on a calibration battery, every op of a fresh battery obeys
/// accesses <= (C1*n + C2*k*w + C3) * 1.25. < 5 min.
#[test]
fn criterion_4_step_bound_model() {
    const MIN_R2: f64 = 0.9;
    const SLOPE_STABILITY: f64 = 2.0;
    const ENVELOPE_SLACK: f64 = 1.25;
    const TIME_BUDGET_S: u64 = 300;

    let t0 = Instant::now();

    // --- n-sweep: counter at k ~= 1, max accesses affine in n. ---
    let n_regimes: Vec<Regime> = [1usize, 2, 4, 8]
        .iter()
        .map(|&n| Regime {
            object: ObjectKind::Counter,
            threads: n,
            ops: 300,
            mix: Some("inc=1"),
            think: ThinkTime::Const(300),
            park_cap: None,
        })
        .collect();
    let mut calibration: Vec<(f64, f64, f64)> = Vec::new();
    let mut n_points = Vec::new();
    for regime in &n_regimes {
        let result = regime.run(0xA11CE);
        n_points.push((regime.threads as f64, result.max_accesses() as f64));
        per_op_points(&result, &mut calibration);
    }
    let (n_slope, _, n_r2) = fit_affine(
        &n_points.iter().map(|p| p.0).collect::<Vec<_>>(),
        &n_points.iter().map(|p| p.1).collect::<Vec<_>>(),
    );
    assert!(
        n_r2 >= MIN_R2,
        "n-sweep affine fit r2 = {n_r2:.3} < {MIN_R2} (points {n_points:?})"
    );
    assert!(n_slope > 0.0, "n-sweep slope {n_slope:.3} is not positive");

    // --- k*w-sweep: queue ladder via announce-parking, twice. ---
    let kw_regimes: Vec<Regime> = (0u32..8)
        .map(|cap| Regime {
            object: ObjectKind::Queue,
            threads: 8,
            ops: 500,
            mix: None,
            think: ThinkTime::Const(150),
            park_cap: Some(cap),
        })
        .collect();
    let mut kw_slopes = Vec::new();
    let mut kw_r2s = Vec::new();
    for (sweep, seed) in [(0, 0xBEEF1u64), (1, 0xBEEF2u64)] {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for regime in &kw_regimes {
            for salt in [0u64, 0x55AA] {
                let result = regime.run(seed ^ salt);
                let (x, y) = rung_point(&result);
                xs.push(x);
                ys.push(y);
                if sweep == 0 {
                    per_op_points(&result, &mut calibration);
                }
            }
        }
        let (slope, _, r2) = fit_affine(&xs, &ys);
        let points: Vec<(f64, f64)> = xs.iter().copied().zip(ys.iter().copied()).collect();
        assert!(
            r2 >= MIN_R2,
            "k*w-sweep {sweep} affine fit r2 = {r2:.3} < {MIN_R2}; points {points:?}"
        );
        kw_slopes.push(slope);
        kw_r2s.push(r2);
    }
    let slope_ratio = (kw_slopes[0] / kw_slopes[1]).max(kw_slopes[1] / kw_slopes[0]);
    assert!(
        kw_slopes.iter().all(|s| *s > 0.0) && slope_ratio <= SLOPE_STABILITY,
        "k*w slopes {kw_slopes:?} unstable (ratio {slope_ratio:.2})"
    );

    // --- coverage runs for the envelope: set and stack under contention. ---
    let coverage: Vec<Regime> = vec![
        Regime {
            object: ObjectKind::SortedSet,
            threads: 8,
            ops: 400,
            mix: Some("insert=1,remove=1"),
            think: ThinkTime::Const(150),
            park_cap: Some(7),
        },
        Regime {
            object: ObjectKind::SortedSet,
            threads: 8,
            ops: 400,
            mix: None,
            think: ThinkTime::Const(300),
            park_cap: None,
        },
        Regime {
            object: ObjectKind::Stack,
            threads: 8,
            ops: 400,
            mix: None,
            think: ThinkTime::Const(150),
            park_cap: Some(7),
        },
    ];
    // Per-op maxima are extreme statistics, and the sorted set's
    // full-batch cost in particular has a wide ceiling; calibrate its
    // regimes across three seeds so the fitted envelope sees the tail.
    for regime in &coverage {
        for salt in [0u64, 1, 2] {
            per_op_points(&regime.run(0xC0FFEE ^ salt), &mut calibration);
        }
    }

    // --- envelope fit: least squares, clamped nonnegative, intercept
    // raised until every calibration point sits under the bound. ---
    let x1: Vec<f64> = calibration.iter().map(|p| p.0).collect();
    let x2: Vec<f64> = calibration.iter().map(|p| p.1).collect();
    let ys: Vec<f64> = calibration.iter().map(|p| p.2).collect();
    let (c1, c2, c3) = fit_plane(&x1, &x2, &ys).expect("calibration battery spans n and k*w");
    let (c1, c2) = (c1.max(0.0), c2.max(0.0));
    let worst = calibration
        .iter()
        .map(|(n, kw, y)| y - (c1 * n + c2 * kw + c3))
        .fold(f64::MIN, f64::max);
    let c3 = c3 + worst.max(0.0);

    // --- fresh battery: same regimes, new seeds; every op under bound. ---
    let mut fresh_ops = 0usize;
    for (regime, seed) in n_regimes
        .iter()
        .map(|r| (r, 0xF00D1u64))
        .chain(kw_regimes.iter().map(|r| (r, 0xF00D2u64)))
        .chain(coverage.iter().map(|r| (r, 0xF00D3u64)))
    {
        let result = regime.run(seed);
        let ks = measured_k(&result.samples, result.n);
        for (s, k) in result.samples.iter().zip(ks) {
            let bound = (c1 * result.n as f64 + c2 * (k * result.w_bound) as f64 + c3)
                * ENVELOPE_SLACK;
            assert!(
                (s.accesses as f64) <= bound,
                "{} n={} k={k} w={}: op cost {} exceeds envelope {:.0} \
                 (C1={c1:.2} C2={c2:.3} C3={c3:.0})",
                result.object,
                result.n,
                result.w_bound,
                s.accesses,
                bound
            );
            fresh_ops += 1;
        }
    }

    let elapsed = t0.elapsed();
    assert!(
        elapsed.as_secs() < TIME_BUDGET_S,
        "criterion 4 exceeded its {TIME_BUDGET_S}s budget: {elapsed:?}"
    );
    println!(
        "criterion 4 (step-bound model): PASS — n-sweep r2={n_r2:.3}, k*w r2={:.3}/{:.3}, \
         slope ratio {slope_ratio:.2}, envelope C1={c1:.2} C2={c2:.3} C3={c3:.0} over {} \
         calibration ops, held by {fresh_ops} fresh ops with 25% slack, {elapsed:.2?}",
        kw_r2s[0], kw_r2s[1], calibration.len()
    );
}

/// Criterion 5 — negative controls. Disabling the flush stamp guard, or
/// serving same-phase reads from the current slot, must each make the
/// criterion 2-3 machinery report at least one violation; otherwise those
/// checks would be vacuous.
#[test]
fn criterion_5_negative_controls() {
    const BUDGET: usize = 20_000;

    let t0 = Instant::now();
    let mut caught = Vec::new();
    for (name, sabotage) in [
        (
            "skip-flush-seq-guard",
            Sabotage {
                skip_flush_seq_guard: true,
                ..Sabotage::default()
            },
        ),
        (
            "read-current-slot",
            Sabotage {
                read_current_slot: true,
                ..Sabotage::default()
            },
        ),
    ] {
        let cfg = SimConfig::new(
            Arc::new(Counter::new()),
            vec![vec![("inc", vec![])], vec![("inc", vec![])]],
        )
        .with_sabotage(sabotage);
        let opts = ExploreOptions {
            budget: BUDGET,
            seed: 1,
            ..ExploreOptions::default()
        };
        let report = explore(&cfg, &opts);
        assert!(
            !report.violations.is_empty(),
            "sabotage {name} slipped through {} schedules undetected",
            report.schedules_checked
        );
        let probes: Vec<&str> = {
            let mut p: Vec<&str> = report.violations.iter().map(|v| v.probe.as_str()).collect();
            p.sort_unstable();
            p.dedup();
            p
        };
        caught.push(format!("{name} -> {}", probes.join("+")));
    }
    println!(
        "criterion 5 (negative controls): PASS — {} , {:.2?}",
        caught.join("; "),
        t0.elapsed()
    );
}

/// Criterion 6 — LL/SC layer properties under real concurrency. 10^4
/// barrier-aligned trials of 4 threads: all LL the cell (sharing one tag),
/// then a randomized subset races SC on that tag. Every trial must have
/// exactly one winner, losers and bystanders must see VL fail afterwards,
/// and the tag must advance by exactly one per trial. < 30 s.
#[test]
fn criterion_6_llsc_properties() {
    const TRIALS: usize = 10_000;
    const RACERS: usize = 4;
    const TIME_BUDGET_S: u64 = 30;

    let t0 = Instant::now();
    let cell = VersionedCell::new(0u64);
    let barrier = Barrier::new(RACERS);
    let round_wins = AtomicUsize::new(0);
    let bad_rounds = AtomicUsize::new(0);
    let vl_errors = AtomicUsize::new(0);
    let tag_errors = AtomicUsize::new(0);

    std::thread::scope(|scope| {
        for racer in 0..RACERS {
            let cell = &cell;
            let barrier = &barrier;
            let round_wins = &round_wins;
            let bad_rounds = &bad_rounds;
            let vl_errors = &vl_errors;
            let tag_errors = &tag_errors;
            scope.spawn(move || {
                let mut rng = 0x9E37_79B9u64 ^ (racer as u64) << 17 | 1;
                for trial in 0..TRIALS {
                    barrier.wait();
                    let snap = cell.ll();
                    barrier.wait();
                    // Past this barrier every racer holds a snapshot of the
                    // same tag (no SC can run until all have LL'd), so the
                    // SCs below genuinely race on one tag.
                    rng ^= rng << 13;
                    rng ^= rng >> 7;
                    rng ^= rng << 17;
                    // Racer 0 always competes so every trial has a
                    // contender; the rest join at random.
                    if racer == 0 || rng % 4 != 0 {
                        if cell.sc(snap.tag, (racer * TRIALS + trial) as u64) {
                            round_wins.fetch_add(1, Ordering::Relaxed);
                        } else if cell.vl(snap.tag) {
                            // My SC lost, so someone advanced the tag; VL
                            // on the stale tag must fail.
                            vl_errors.fetch_add(1, Ordering::Relaxed);
                        }
                    }
                    barrier.wait();
                    if cell.vl(snap.tag) {
                        // The round's winner invalidated every snapshot.
                        vl_errors.fetch_add(1, Ordering::Relaxed);
                    }
                    if racer == 0 {
                        if round_wins.swap(0, Ordering::Relaxed) != 1 {
                            bad_rounds.fetch_add(1, Ordering::Relaxed);
                        }
                        if cell.tag() != (trial + 1) as u64 {
                            tag_errors.fetch_add(1, Ordering::Relaxed);
                        }
                    }
                }
            });
        }
    });

    assert_eq!(
        bad_rounds.load(Ordering::Relaxed),
        0,
        "some trial did not have exactly one SC winner"
    );
    assert_eq!(
        vl_errors.load(Ordering::Relaxed),
        0,
        "VL succeeded on a tag an SC had already invalidated"
    );
    assert_eq!(
        tag_errors.load(Ordering::Relaxed),
        0,
        "tag did not advance by exactly one per trial"
    );
    assert_eq!(
        cell.tag(),
        TRIALS as u64,
        "final tag disagrees with one step per trial"
    );

    // Deterministic VL semantics on a fresh cell.
    let fresh = VersionedCell::new(7u64);
    let snap = fresh.ll();
    assert!(fresh.vl(snap.tag), "undisturbed VL failed");
    assert!(fresh.sc(snap.tag, 8), "uncontended SC failed");
    assert!(!fresh.vl(snap.tag), "VL succeeded after an intervening SC");
    assert!(!fresh.sc(snap.tag, 9), "second SC on one tag succeeded");

    let elapsed = t0.elapsed();
    assert!(
        elapsed.as_secs() < TIME_BUDGET_S,
        "criterion 6 exceeded its {TIME_BUDGET_S}s budget: {elapsed:?}"
    );
    println!(
        "criterion 6 (LL/SC layer): PASS — {TRIALS} same-tag races, exactly one winner each, \
         tag advanced once per trial, VL exact, {elapsed:.2?}"
    );
}
