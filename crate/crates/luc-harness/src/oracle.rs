//! Agreement-trace oracle.
//!
//! When tracing is enabled the runtime publishes, for every successful state
//! installation, the batch of requests that phase applied and the return
//! value it assigned each one. That stream is a claim about the agreed
//! sequential order; this module replays it against the reference object and
//! checks it is internally coherent:
//!
//! - phase sequence numbers run 1, 2, 3, … with no gap or repeat,
//! - within a batch, process ids are strictly ascending,
//! - every request is applied in a batch exactly once, under its owner's id,
//! - replaying the flattened order on the reference reproduces every
//!   recorded return value.

use luc::mediator::PhaseTrace;
use luc::objmodel::ReferenceObject;
use luc::ProcId;
use std::collections::HashSet;
use std::sync::Arc;

/// Flatten phase batches into the agreed per-operation process order. Feed
/// this to [`crate::checker::verify_witness`] to tie the agreement order to
/// a recorded invocation/response history.
pub fn phase_order(phases: &[PhaseTrace]) -> Vec<ProcId> {
    phases
        .iter()
        .flat_map(|p| p.batch.iter().map(|(pid, _, _)| *pid))
        .collect()
}

/// Replay every published phase against a fresh reference object.
pub fn replay_phases(
    phases: &[PhaseTrace],
    initial: Box<dyn ReferenceObject>,
) -> Result<(), String> {
    let mut reference = initial;
    let mut seen: HashSet<usize> = HashSet::new();
    for (i, phase) in phases.iter().enumerate() {
        let want_seq = i as u64 + 1;
        if phase.seq != want_seq {
            return Err(format!(
                "phase {i} published sequence {} (expected {want_seq})",
                phase.seq
            ));
        }
        // Shape first (ordering, ownership, once-only), then semantics, so
        // a structurally broken batch is reported as such even when its
        // values also happen to be wrong.
        let mut last_pid: Option<ProcId> = None;
        for (pid, req, _) in &phase.batch {
            if let Some(prev) = last_pid {
                if *pid <= prev {
                    return Err(format!(
                        "phase {}: batch pids not strictly ascending ({prev} then {pid})",
                        phase.seq
                    ));
                }
            }
            last_pid = Some(*pid);
            if req.owner != *pid {
                return Err(format!(
                    "phase {}: request {req} owned by {} applied under pid {pid}",
                    phase.seq, req.owner
                ));
            }
            let key = Arc::as_ptr(req) as usize;
            if !seen.insert(key) {
                return Err(format!(
                    "request {req} of pid {pid} applied in more than one phase \
                     (again in phase {})",
                    phase.seq
                ));
            }
        }
        for (pid, req, rv) in &phase.batch {
            let got = reference.apply(req.opcode, &req.args);
            if got != *rv {
                return Err(format!(
                    "phase {}: pid {pid} request {req} returned {rv}, reference says {got}",
                    phase.seq
                ));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use luc::objmodel::RequestDescriptor;
    use luc::{ObjectKind, Value};

    fn req(opcode: &'static str, args: Vec<Value>, owner: ProcId) -> Arc<RequestDescriptor> {
        Arc::new(RequestDescriptor::new(opcode, args, owner))
    }

    fn counter_phases() -> Vec<PhaseTrace> {
        let a = req("inc", vec![], 0);
        let b = req("inc", vec![], 1);
        let c = req("read", vec![], 0);
        vec![
            PhaseTrace {
                seq: 1,
                publisher: 0,
                batch: vec![(0, a, Value::Int(0)), (1, b, Value::Int(1))],
            },
            PhaseTrace {
                seq: 2,
                publisher: 1,
                batch: vec![(0, c, Value::Int(2))],
            },
        ]
    }

    #[test]
    fn coherent_counter_trace_replays() {
        let phases = counter_phases();
        assert!(replay_phases(&phases, ObjectKind::Counter.build().reference()).is_ok());
        assert_eq!(phase_order(&phases), vec![0, 1, 0]);
    }

    #[test]
    fn wrong_return_value_is_caught() {
        let mut phases = counter_phases();
        phases[1].batch[0].2 = Value::Int(9);
        let err = replay_phases(&phases, ObjectKind::Counter.build().reference()).unwrap_err();
        assert!(err.contains("reference says 2"), "{err}");
    }

    #[test]
    fn duplicate_application_is_caught() {
        let mut phases = counter_phases();
        let dup = phases[0].batch[0].1.clone(); // owned by pid 0
        phases.push(PhaseTrace {
            seq: 3,
            publisher: 0,
            batch: vec![(0, dup, Value::Int(3))],
        });
        let err = replay_phases(&phases, ObjectKind::Counter.build().reference()).unwrap_err();
        assert!(err.contains("more than one phase"), "{err}");
    }

    #[test]
    fn sequence_gaps_and_batch_order_are_caught() {
        let mut phases = counter_phases();
        phases[1].seq = 3;
        assert!(replay_phases(&phases, ObjectKind::Counter.build().reference()).is_err());

        let mut phases = counter_phases();
        phases[0].batch.swap(0, 1);
        let err = replay_phases(&phases, ObjectKind::Counter.build().reference()).unwrap_err();
        assert!(err.contains("ascending"), "{err}");
    }

    #[test]
    fn owner_mismatch_is_caught() {
        let mut phases = counter_phases();
        phases[0].batch[1].0 = 1;
        phases[0].batch[1].1 = req("inc", vec![], 0); // owned by 0, applied as 1
        let err = replay_phases(&phases, ObjectKind::Counter.build().reference()).unwrap_err();
        assert!(err.contains("owned by"), "{err}");
    }
}
