//! Structural probes over simulator traces.
//!
//! Each probe states an invariant the runtime must maintain on *every*
//! schedule; the explorer runs all of them on every completed schedule.
//! They check the mechanism itself (toggling, stamping, agreement), not just
//! the end-to-end semantics, so a defect surfaces even on schedules where
//! the final history happens to look fine.

use crate::sim::{ScheduleRun, SimAccess};
use luc::mediator::ItemId;
use luc::objmodel::RequestDescriptor;
use luc::state::{ItemRecord, StateRecord};
use luc::{Marker, ProcId, Value};
use std::collections::HashMap;
use std::sync::Arc;

pub const STRUCTURAL_PROBES: [&str; 9] = [
    "toggle-parity",
    "seq-increment",
    "item-stamp-bound",
    "item-stamp-monotone",
    "attempt-publications",
    "write-set-determinism",
    "exactly-once",
    "rvals-stability",
    "quiescent-agreement",
];

/// Collects at most one failure per probe, so a single broken invariant does
/// not flood the report.
struct Failures {
    out: Vec<(&'static str, String)>,
}

impl Failures {
    fn new() -> Failures {
        Failures { out: Vec::new() }
    }

    fn record(&mut self, probe: &'static str, message: String) {
        if !self.out.iter().any(|(p, _)| *p == probe) {
            self.out.push((probe, message));
        }
    }
}

/// Run every structural probe over a completed (quiescent) schedule.
pub fn run_probes(
    run: &ScheduleRun,
    scripts: &[Vec<Arc<RequestDescriptor>>],
) -> Vec<(&'static str, String)> {
    debug_assert!(run.is_quiescent(), "probes expect a completed schedule");
    let mut f = Failures::new();
    let n = run.world.layout.n;

    toggle_parity(run, n, &mut f);
    let published = publications(run);
    seq_increment(run, &published, &mut f);
    item_stamps(run, &mut f);
    attempt_publications(run, &mut f);
    write_set_determinism(run, n, &mut f);
    exactly_once(run, scripts, &mut f);
    rvals_stability(n, &published, &mut f);
    quiescent_agreement(run, &published, &mut f);

    f.out
}

/// Every fetch&add on the toggle register must target the owner's word with
/// the owner's bit, alternating direction with its operation parity, and the
/// final register must equal each owner's operation-count parity.
fn toggle_parity(run: &ScheduleRun, n: usize, f: &mut Failures) {
    let mut count = vec![0usize; n];
    for ev in &run.trace {
        if let SimAccess::FadToggle { word, delta } = ev.access {
            let pid = ev.pid;
            let bit = pid % 64;
            if word != pid / 64 {
                f.record(
                    "toggle-parity",
                    format!("pid {pid} added to toggle word {word}, its bit lives in word {}", pid / 64),
                );
                return;
            }
            let expect = if count[pid] % 2 == 0 {
                1u64 << bit
            } else {
                (1u64 << bit).wrapping_neg()
            };
            if delta != expect {
                f.record(
                    "toggle-parity",
                    format!(
                        "pid {pid} op {}: toggle delta {delta:#x}, expected {expect:#x}",
                        count[pid]
                    ),
                );
                return;
            }
            count[pid] += 1;
        }
    }
    for pid in 0..n {
        if count[pid] != run.runs[pid].op_index {
            f.record(
                "toggle-parity",
                format!(
                    "pid {pid} completed {} ops but flipped its toggle {} times",
                    run.runs[pid].op_index, count[pid]
                ),
            );
            return;
        }
        let bit = (run.world.toggles[pid / 64] >> (pid % 64)) & 1;
        if bit != (count[pid] % 2) as u64 {
            f.record(
                "toggle-parity",
                format!("pid {pid}: final toggle bit {bit} disagrees with op-count parity"),
            );
            return;
        }
    }
}

/// The agreement records installed by successful publications, in order.
fn publications(run: &ScheduleRun) -> Vec<Arc<StateRecord>> {
    run.trace
        .iter()
        .filter_map(|ev| match &ev.access {
            SimAccess::ScState { ok: true, new, .. } => Some(Arc::clone(new)),
            _ => None,
        })
        .collect()
}

/// The phase counter increments by exactly one per publication.
fn seq_increment(run: &ScheduleRun, published: &[Arc<StateRecord>], f: &mut Failures) {
    for (i, s) in published.iter().enumerate() {
        let want = i as u64 + 1;
        if s.seq != want {
            f.record(
                "seq-increment",
                format!("publication {i} installed seq {}, expected {want}", s.seq),
            );
            return;
        }
    }
    for (i, p) in run.world.phases.iter().enumerate() {
        if p.seq != i as u64 + 1 {
            f.record(
                "seq-increment",
                format!("phase trace {i} carries seq {}, expected {}", p.seq, i + 1),
            );
            return;
        }
    }
}

/// Successful item stores stamp at most one phase ahead of the agreement
/// record, and stamps on any one cell strictly increase.
fn item_stamps(run: &ScheduleRun, f: &mut Failures) {
    for ev in &run.trace {
        if let SimAccess::ScItem {
            item,
            ok: true,
            prior_seq,
            new,
            s_seq_at,
            ..
        } = &ev.access
        {
            if new.seq > s_seq_at + 1 {
                f.record(
                    "item-stamp-bound",
                    format!(
                        "cell {item:?} stamped {} while the agreement record is at {s_seq_at}",
                        new.seq
                    ),
                );
            }
            if *prior_seq >= new.seq {
                f.record(
                    "item-stamp-monotone",
                    format!(
                        "cell {item:?} restamped {} over prior stamp {prior_seq}",
                        new.seq
                    ),
                );
            }
        }
    }
}

/// Within every completed attempt window, at least two publications happen
/// globally — the attempt's own, or those of the peers that invalidated it.
fn attempt_publications(run: &ScheduleRun, f: &mut Failures) {
    let mut pubs = 0usize;
    let mut open: HashMap<ProcId, usize> = HashMap::new();
    for ev in &run.trace {
        match &ev.access {
            SimAccess::ScState { ok: true, .. } => pubs += 1,
            SimAccess::Marker(Marker::AttemptStart) => {
                open.insert(ev.pid, pubs);
            }
            SimAccess::Marker(Marker::AttemptEnd) => {
                let at_start = open
                    .remove(&ev.pid)
                    .expect("attempt end without a matching start");
                if pubs - at_start < 2 {
                    f.record(
                        "attempt-publications",
                        format!(
                            "pid {} finished an attempt spanning only {} publication(s)",
                            ev.pid,
                            pubs - at_start
                        ),
                    );
                    return;
                }
            }
            _ => {}
        }
    }
    if !open.is_empty() {
        f.record(
            "attempt-publications",
            "attempt window left open at quiescence".into(),
        );
    }
}

/// Helpers of one phase working from the same snapshot must attempt
/// bit-identical item records, and must walk their flush guards over the
/// same cells in the same order (shorter walks are prefixes of longer ones).
fn write_set_determinism(run: &ScheduleRun, n: usize, f: &mut Failures) {
    type IterKey = (u64, u64); // (snapshot tag, target phase)
    let mut cur: Vec<Option<IterKey>> = vec![None; n];
    // Index into `guard_walks[key]` of the pid's current flush instance.
    let mut flushing: Vec<Option<usize>> = vec![None; n];
    let mut sc_writes: HashMap<IterKey, HashMap<ItemId, ItemRecord>> = HashMap::new();
    let mut guard_walks: HashMap<IterKey, Vec<Vec<ItemId>>> = HashMap::new();

    for ev in &run.trace {
        let pid = ev.pid;
        match &ev.access {
            SimAccess::Marker(Marker::IterStart { snap_tag, target_seq }) => {
                cur[pid] = Some((*snap_tag, *target_seq));
                flushing[pid] = None;
            }
            SimAccess::Marker(Marker::FlushStart) => {
                let key = cur[pid].expect("flush outside an iteration");
                let walks = guard_walks.entry(key).or_default();
                walks.push(Vec::new());
                flushing[pid] = Some(walks.len() - 1);
            }
            SimAccess::Marker(Marker::IterEnd { .. }) => {
                cur[pid] = None;
                flushing[pid] = None;
            }
            SimAccess::LlItem { item, .. } => {
                if let (Some(key), Some(i)) = (cur[pid], flushing[pid]) {
                    guard_walks.get_mut(&key).unwrap()[i].push(*item);
                }
            }
            SimAccess::ScItem { item, new, .. } => {
                if let (Some(key), Some(_)) = (cur[pid], flushing[pid]) {
                    match sc_writes.entry(key).or_default().entry(*item) {
                        std::collections::hash_map::Entry::Occupied(e) => {
                            if e.get() != new {
                                f.record(
                                    "write-set-determinism",
                                    format!(
                                        "phase {} helpers attempted different records for cell {item:?}: {:?} vs {new:?}",
                                        key.1,
                                        e.get()
                                    ),
                                );
                                return;
                            }
                        }
                        std::collections::hash_map::Entry::Vacant(slot) => {
                            slot.insert(*new);
                        }
                    }
                }
            }
            _ => {}
        }
    }

    for (key, walks) in &guard_walks {
        let longest = walks.iter().max_by_key(|w| w.len()).unwrap();
        for w in walks {
            if w[..] != longest[..w.len()] {
                f.record(
                    "write-set-determinism",
                    format!(
                        "phase {} flush guards walked different cell orders: {w:?} vs {longest:?}",
                        key.1
                    ),
                );
                return;
            }
        }
    }
}

/// Every completed operation appears in exactly one published batch, owned
/// by its process, and its recorded return value matches what the batch
/// agreed on. Identity is the announced request allocation itself.
fn exactly_once(
    run: &ScheduleRun,
    scripts: &[Vec<Arc<RequestDescriptor>>],
    f: &mut Failures,
) {
    let mut applied: HashMap<usize, Vec<(u64, ProcId, Value)>> = HashMap::new();
    for phase in &run.world.phases {
        for (q, req, rv) in &phase.batch {
            applied
                .entry(Arc::as_ptr(req) as usize)
                .or_default()
                .push((phase.seq, *q, *rv));
        }
    }
    for (pid, script) in scripts.iter().enumerate() {
        for (k, req) in script.iter().enumerate().take(run.runs[pid].op_index) {
            let hits = applied.remove(&(Arc::as_ptr(req) as usize)).unwrap_or_default();
            if hits.len() != 1 {
                f.record(
                    "exactly-once",
                    format!(
                        "pid {pid} op {k} ({req}) applied in {} phases: {:?}",
                        hits.len(),
                        hits.iter().map(|(s, _, _)| *s).collect::<Vec<_>>()
                    ),
                );
                return;
            }
            let (seq, q, rv) = hits[0];
            if q != pid {
                f.record(
                    "exactly-once",
                    format!("pid {pid} op {k} applied under pid {q} in phase {seq}"),
                );
                return;
            }
            if rv != run.runs[pid].results[k] {
                f.record(
                    "exactly-once",
                    format!(
                        "pid {pid} op {k} returned {} but phase {seq} agreed on {rv}",
                        run.runs[pid].results[k]
                    ),
                );
                return;
            }
        }
    }
    if !applied.is_empty() {
        f.record(
            "exactly-once",
            format!("{} batch entries match no completed operation", applied.len()),
        );
    }
}

/// A publication may change a process's return value only when it applies
/// that process's request, and each record's pre-phase vector must equal its
/// predecessor's applied vector.
fn rvals_stability(n: usize, published: &[Arc<StateRecord>], f: &mut Failures) {
    // The simulator's sentinel is always node 0; this probe never compares
    // var_list anyway.
    let initial = Arc::new(StateRecord::initial(n, luc::mediator::NodeId(0)));
    let mut prev = &initial;
    for (i, next) in published.iter().enumerate() {
        if next.papplied != prev.applied {
            f.record(
                "rvals-stability",
                format!("publication {i}: pre-phase vector does not chain from its predecessor"),
            );
            return;
        }
        for q in 0..n {
            // The batch a record executed is its *predecessor's* pending
            // set; the record's own parity difference is the batch it
            // promises to its successor.
            let in_batch = prev.is_pending(q);
            if !in_batch && next.rvals[q] != prev.rvals[q] {
                f.record(
                    "rvals-stability",
                    format!(
                        "publication {i} changed rvals[{q}] from {} to {} without applying pid {q}",
                        prev.rvals[q], next.rvals[q]
                    ),
                );
                return;
            }
        }
        prev = next;
    }
}

/// At quiescence the agreement record has caught up with the toggle register
/// (no promised batch left dangling) and the phase counter equals the number
/// of publications.
fn quiescent_agreement(run: &ScheduleRun, published: &[Arc<StateRecord>], f: &mut Failures) {
    let s = &run.world.s;
    for (w, &reg) in run.world.toggles.iter().enumerate() {
        if s.applied.word(w) != reg {
            f.record(
                "quiescent-agreement",
                format!(
                    "toggle word {w} is {reg:#x} but the applied vector holds {:#x}",
                    s.applied.word(w)
                ),
            );
            return;
        }
        if s.papplied.word(w) != reg {
            f.record(
                "quiescent-agreement",
                format!(
                    "final record still promises a batch: toggle word {w} is {reg:#x}, \
                     pre-phase vector holds {:#x}",
                    s.papplied.word(w)
                ),
            );
            return;
        }
    }
    if s.seq != published.len() as u64 {
        f.record(
            "quiescent-agreement",
            format!("{} publications but final seq is {}", published.len(), s.seq),
        );
    }
    if run.world.phases.len() != published.len() {
        f.record(
            "quiescent-agreement",
            format!(
                "{} publications but {} phase traces",
                published.len(),
                run.world.phases.len()
            ),
        );
    }
}
