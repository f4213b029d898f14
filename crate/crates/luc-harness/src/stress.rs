//! Real-thread stress runs.
//!
//! Spawns one OS thread per process against a traced universe, records a
//! timestamped invocation/response history (a global atomic counter stamps
//! each event; merging lanes by stamp yields a total order consistent with
//! real time), and gathers the runtime's published agreement trace. The
//! check stage then ties the two together: the agreement order must replay
//! correctly on the reference object *and* stand as a real-time-respecting
//! witness for the observed history — a linearizability proof that stays
//! linear in history size. Small histories additionally get the independent
//! exhaustive search.

use crate::checker::{self, CheckOutcome};
use crate::history::{well_formed, HistoryEvent};
use crate::oracle;
use luc::mediator::PhaseTrace;
use luc::{ObjectKind, Universe};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

#[derive(Clone, Copy, Debug)]
pub struct StressConfig {
    pub object: ObjectKind,
    pub threads: usize,
    pub ops_per_thread: usize,
    pub seed: u64,
}

pub struct StressReport {
    pub config: StressConfig,
    pub history: Vec<HistoryEvent>,
    pub phases: Vec<PhaseTrace>,
    pub elapsed: Duration,
}

/// Run the configured workload on real threads and collect its evidence.
pub fn run(cfg: StressConfig) -> StressReport {
    assert!(cfg.threads >= 1, "need at least one thread");
    let universe = Universe::builder(cfg.threads, cfg.object.build())
        .tracing(true)
        .build();
    let stamp = AtomicU64::new(0);
    let started = Instant::now();

    let lanes: Vec<Vec<(u64, HistoryEvent)>> = std::thread::scope(|s| {
        let universe = &universe;
        let stamp = &stamp;
        let handles: Vec<_> = (0..cfg.threads)
            .map(|pid| {
                s.spawn(move || {
                    let mut process = universe.process(pid);
                    let mut stream = luc::workload::OpStream::new(cfg.object, pid, cfg.seed);
                    let mut lane = Vec::with_capacity(cfg.ops_per_thread * 2);
                    for _ in 0..cfg.ops_per_thread {
                        let req = stream.next_request();
                        let inv = HistoryEvent::Inv {
                            pid,
                            opcode: req.opcode.to_string(),
                            args: req.args.clone(),
                        };
                        lane.push((stamp.fetch_add(1, Ordering::SeqCst), inv));
                        let value = process
                            .apply(req)
                            .expect("the real world never interrupts");
                        let res = HistoryEvent::Res { pid, value };
                        lane.push((stamp.fetch_add(1, Ordering::SeqCst), res));
                    }
                    lane
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("stress worker panicked"))
            .collect()
    });
    let elapsed = started.elapsed();

    let mut stamped: Vec<(u64, HistoryEvent)> = lanes.into_iter().flatten().collect();
    stamped.sort_by_key(|&(t, _)| t);
    StressReport {
        config: cfg,
        history: stamped.into_iter().map(|(_, e)| e).collect(),
        phases: universe.phase_traces(),
        elapsed,
    }
}

/// One named check with its verdict and a short explanation.
pub struct CheckLine {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

pub struct CheckReport {
    pub lines: Vec<CheckLine>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.passed)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for l in &self.lines {
            let verdict = if l.passed { "pass" } else { "FAIL" };
            out.push_str(&format!("check {:<22} {verdict}  {}\n", l.name, l.detail));
        }
        out
    }
}

/// Validate a stress report. `search_budget` bounds the exhaustive search
/// used on histories small enough for it.
pub fn check(report: &StressReport, search_budget: usize) -> CheckReport {
    let mut lines = Vec::new();
    let object = report.config.object;
    let total_ops = report.config.threads * report.config.ops_per_thread;

    match well_formed(&report.history) {
        Ok(()) => {
            let complete = report.history.len() == total_ops * 2;
            lines.push(CheckLine {
                name: "well-formed",
                passed: complete,
                detail: if complete {
                    format!("{total_ops} operations, all completed")
                } else {
                    format!(
                        "expected {} events, recorded {}",
                        total_ops * 2,
                        report.history.len()
                    )
                },
            });
        }
        Err(e) => lines.push(CheckLine {
            name: "well-formed",
            passed: false,
            detail: e,
        }),
    }

    match oracle::replay_phases(&report.phases, object.build().reference()) {
        Ok(()) => lines.push(CheckLine {
            name: "agreement-replay",
            passed: true,
            detail: format!("{} phases replay on the reference", report.phases.len()),
        }),
        Err(e) => lines.push(CheckLine {
            name: "agreement-replay",
            passed: false,
            detail: e,
        }),
    }

    let order = oracle::phase_order(&report.phases);
    match checker::verify_witness(&report.history, object.build().reference(), &order) {
        Ok(()) => lines.push(CheckLine {
            name: "witness-real-time",
            passed: true,
            detail: "agreement order linearizes the observed history".into(),
        }),
        Err(e) => lines.push(CheckLine {
            name: "witness-real-time",
            passed: false,
            detail: e,
        }),
    }

    if total_ops <= checker::MAX_SEARCH_OPS {
        let line = match checker::check_linearizable(
            &report.history,
            object.build().reference(),
            search_budget,
        ) {
            Ok(CheckOutcome::Linearizable { .. }) => CheckLine {
                name: "search",
                passed: true,
                detail: "independent search found a witness".into(),
            },
            Ok(CheckOutcome::NotLinearizable { violating_prefix }) => CheckLine {
                name: "search",
                passed: false,
                detail: format!(
                    "no linearization exists; minimal violating prefix has {} operations",
                    violating_prefix.len()
                ),
            },
            Ok(CheckOutcome::SearchExhausted { nodes }) => CheckLine {
                name: "search",
                passed: true,
                detail: format!(
                    "inconclusive after {nodes} nodes (witness verification above is the proof)"
                ),
            },
            Err(e) => CheckLine {
                name: "search",
                passed: false,
                detail: e,
            },
        };
        lines.push(line);
    }

    CheckReport { lines }
}

#[cfg(test)]
mod tests {
    use super::*;
    use luc::Value;

    #[test]
    fn small_counter_stress_passes_all_checks() {
        let report = run(StressConfig {
            object: ObjectKind::Counter,
            threads: 3,
            ops_per_thread: 20,
            seed: 11,
        });
        let checks = check(&report, 500_000);
        assert!(checks.passed(), "{}", checks.render());
        assert_eq!(report.history.len(), 120);
    }

    #[test]
    fn every_object_survives_a_two_thread_stress() {
        for kind in ObjectKind::ALL {
            let report = run(StressConfig {
                object: kind,
                threads: 2,
                ops_per_thread: 25,
                seed: 5,
            });
            let checks = check(&report, 500_000);
            assert!(checks.passed(), "{kind}:\n{}", checks.render());
        }
    }

    #[test]
    fn corrupted_result_fails_witness_and_search() {
        let mut report = run(StressConfig {
            object: ObjectKind::Counter,
            threads: 2,
            ops_per_thread: 5,
            seed: 2,
        });
        // Doctor one response value; every downstream check must notice.
        let slot = report
            .history
            .iter_mut()
            .find_map(|e| match e {
                HistoryEvent::Res { value, .. } => Some(value),
                _ => None,
            })
            .expect("some response exists");
        *slot = Value::Int(999_999);
        let checks = check(&report, 500_000);
        assert!(!checks.passed());
        let failed: Vec<&str> = checks
            .lines
            .iter()
            .filter(|l| !l.passed)
            .map(|l| l.name)
            .collect();
        assert!(failed.contains(&"witness-real-time"), "{failed:?}");
        assert!(failed.contains(&"search"), "{failed:?}");
    }
}
