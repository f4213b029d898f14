//! The per-process runtime algorithm.
//!
//! An operation is applied by: announce the request, flip the owner's bit in
//! the shared toggle register (add on even ops, subtract on odd ops, so the
//! bit flips without carries), then run two helping attempts and read the
//! return value published for this process.
//!
//! Each attempt runs two iterations. An iteration snapshots the agreement
//! record with load-link and reads the toggle words in ascending order. The
//! batch it simulates is fixed by the snapshot alone: process `q` is pending
//! exactly when the snapshot's `applied`/`papplied` parity bits for `q`
//! differ. The freshly read toggles become the successor record's `applied`
//! vector, so a newly announced request is first *promised* by one phase
//! (its flipped bit enters `applied`) and *executed* by the next (the bit
//! now differs from `papplied`). This two-step keeps every helper of a phase
//! simulating the identical batch regardless of how toggle flips interleave.
//!
//! Simulated variable accesses are buffered in a directory; reads that miss
//! the directory load-link the backing cell and pick a slot by comparing the
//! cell's stamp against the phase being built (equal: the pre-phase slot;
//! older: the current slot; newer: the whole batch is obsolete). If the
//! snapshot still validates after simulation, the directory is flushed —
//! each entry store-conditionally advances its cell, guarded by a freshness
//! check — and the iteration tries to publish the successor record. Helpers
//! of the same phase flush identical records, so it does not matter whose
//! store-conditional lands.

use crate::bits::{BitWords, WORD_BITS};
use crate::mediator::{
    Ctl, Interrupt, ItemId, Marker, Mediator, NodeId, ObjectFault, PhaseTrace,
};
use crate::objmodel::{AccessContext, RequestDescriptor, SequentialObject};
use crate::state::{ItemRecord, StateRecord};
use crate::value::{Handle, ProcId, Value, Var};
use std::sync::Arc;

/// Deliberate defects, compiled in but switched off by default. The
/// harness's negative controls enable them to prove the checker and probes
/// can actually fail.
#[derive(Clone, Copy, Default, Debug)]
pub struct Sabotage {
    /// Flush directory entries without re-checking the cell's stamp first,
    /// so a helper can re-advance a cell its phase already stamped.
    pub skip_flush_seq_guard: bool,
    /// Serve same-phase directory misses from the cell's current slot
    /// instead of its pre-phase slot, so a lagging helper sees its peers'
    /// writes mid-batch.
    pub read_current_slot: bool,
}

/// One directory entry: a variable touched by the batch simulation, the cell
/// backing it, the load-link evidence from first contact, and the simulated
/// value.
#[derive(Clone, Copy)]
struct DirEntry {
    var: Var,
    item: ItemId,
    snap_tag: u64,
    snap: ItemRecord,
    local: Value,
}

fn fresh_node<M: Mediator>(med: &mut M) -> NodeId {
    let item = med.alloc_item();
    med.alloc_node(Some(item))
}

/// A process participating in one universe. Generic over the mediator so the
/// same algorithm runs against real shared memory and against the harness's
/// simulated world.
pub struct Process<M: Mediator> {
    med: M,
    object: Arc<dyn SequentialObject>,
    sabotage: Sabotage,
    ops_started: u64,
    dir: Vec<DirEntry>,
}

impl<M: Mediator> Process<M> {
    pub fn new(med: M, object: Arc<dyn SequentialObject>, sabotage: Sabotage) -> Self {
        Process {
            med,
            object,
            sabotage,
            ops_started: 0,
            dir: Vec::new(),
        }
    }

    pub fn pid(&self) -> ProcId {
        self.med.pid()
    }

    pub fn mediator(&self) -> &M {
        &self.med
    }

    /// Apply one operation and return its result.
    pub fn apply(&mut self, req: Arc<RequestDescriptor>) -> Ctl<Value> {
        let k = self.ops_started;
        self.ops_started += 1;
        self.apply_nth(req, k)
    }

    /// Re-entrant form: `op_index` fixes the toggle direction, letting the
    /// simulator re-execute an operation from scratch.
    pub fn apply_nth(&mut self, req: Arc<RequestDescriptor>, op_index: u64) -> Ctl<Value> {
        let pid = self.med.pid();
        debug_assert_eq!(req.owner, pid, "request applied by the wrong process");
        // One spare list node per operation; if no allocation contends for
        // it, it is simply never linked.
        let mut spare = fresh_node(&mut self.med);
        self.med.announce_store(req)?;
        let bit = pid % WORD_BITS;
        let delta = if op_index % 2 == 0 {
            1u64 << bit
        } else {
            (1u64 << bit).wrapping_neg()
        };
        self.med.fad_toggle(pid / WORD_BITS, delta)?;
        self.attempt(&mut spare)?;
        self.attempt(&mut spare)?;
        Ok(self.med.read_state()?.rvals[pid])
    }

    fn attempt(&mut self, spare: &mut NodeId) -> Ctl<()> {
        let layout = self.med.layout();
        let n = layout.n;
        let toggle_words = layout.toggle_words;
        let tracing = layout.tracing;
        let pid = self.med.pid();
        let object = Arc::clone(&self.object);

        self.med.marker(Marker::AttemptStart);
        for _ in 0..2 {
            self.dir.clear();
            let ls = self.med.ll_state()?;
            let snap_tag = ls.tag;
            let state = ls.payload;
            let target_seq = state.seq + 1;
            self.med.marker(Marker::IterStart {
                snap_tag,
                target_seq,
            });

            let mut lact = BitWords::zeroed(n);
            for w in 0..toggle_words {
                lact.set_word(w, self.med.read_toggle_word(w)?);
            }

            let mut rvals = state.rvals.to_vec();
            let mut batch: Vec<(ProcId, Arc<RequestDescriptor>, Value)> = Vec::new();

            let mut ctx = AttemptCtx {
                med: &mut self.med,
                dir: &mut self.dir,
                spare,
                ltop: state.var_list,
                ordinal: 0,
                target_seq,
                accesses: 0,
                bound: object.access_bound(),
                sabotage: self.sabotage,
            };

            let mut obsolete = false;
            for q in 0..n {
                // The batch is fixed by the snapshot itself: q is pending
                // when the snapshot's parity bits differ. The fresh toggle
                // read (lact) never selects this phase's batch — it becomes
                // the successor record's applied vector, scheduling newly
                // announced requests for the *next* phase. Helpers of one
                // phase therefore always simulate identical batches.
                if !state.is_pending(q) {
                    continue;
                }
                let req = ctx.med.announce_read(q)?;
                ctx.accesses = 0;
                match object.dispatch(&req, &mut ctx) {
                    Ok(rv) => {
                        rvals[q] = rv;
                        if tracing {
                            batch.push((q, req, rv));
                        }
                    }
                    Err(Interrupt::Obsolete) => {
                        obsolete = true;
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }

            // An obsolete batch still validates (and necessarily fails),
            // keeping the iteration's access pattern uniform.
            let valid = ctx.med.vl_state(snap_tag)?;
            if obsolete || !valid {
                self.med.marker(Marker::IterEnd { published: false });
                continue;
            }

            ctx.flush()?;

            let sentinel = ctx.med.alloc_node(None);
            let new_state = StateRecord {
                seq: target_seq,
                papplied: state.applied.clone(),
                applied: lact,
                rvals: rvals.into_boxed_slice(),
                var_list: sentinel,
            };
            let published = ctx.med.sc_state(snap_tag, new_state)?;
            if published && tracing {
                ctx.med.marker(Marker::Published(PhaseTrace {
                    seq: target_seq,
                    publisher: pid,
                    batch,
                }));
            }
            self.med.marker(Marker::IterEnd { published });
        }
        self.med.marker(Marker::AttemptEnd);
        Ok(())
    }
}

/// Simulation context for one iteration: the directory plus the cursor into
/// the shared new-variable list.
struct AttemptCtx<'a, M: Mediator> {
    med: &'a mut M,
    dir: &'a mut Vec<DirEntry>,
    spare: &'a mut NodeId,
    ltop: NodeId,
    ordinal: u32,
    target_seq: u64,
    accesses: usize,
    bound: usize,
    sabotage: Sabotage,
}

impl<M: Mediator> AttemptCtx<'_, M> {
    fn tick(&mut self) {
        self.accesses += 1;
        assert!(
            self.accesses <= self.bound,
            "operation exceeded its declared access bound of {}",
            self.bound
        );
    }

    fn resolve(&mut self, var: Var) -> Ctl<ItemId> {
        match var {
            Var::Named(name) => Ok(self
                .med
                .layout()
                .root(name)
                .unwrap_or_else(|| panic!("object referenced undeclared root {name:?}"))),
            Var::Dyn(h) => self
                .med
                .resolve_handle(h)
                .ok_or(Interrupt::Fault(ObjectFault::UnknownVariable(h))),
        }
    }

    /// Directory lookup, loading the backing cell on a miss. Returns the
    /// entry's index.
    fn load_entry(&mut self, var: Var) -> Ctl<usize> {
        if let Some(i) = self.dir.iter().position(|e| e.var == var) {
            return Ok(i);
        }
        let item = self.resolve(var)?;
        let snap = self.med.ll_item(item)?;
        let rec = snap.payload;
        let fetched = if self.target_seq == rec.seq {
            // A helper of this very phase already flushed the cell; the
            // value the batch must see is the displaced pre-phase slot.
            if self.sabotage.read_current_slot {
                rec.current()
            } else {
                rec.previous()
            }
        } else if self.target_seq > rec.seq {
            rec.current()
        } else {
            return Err(Interrupt::Obsolete);
        };
        self.dir.push(DirEntry {
            var,
            item,
            snap_tag: snap.tag,
            snap: rec,
            local: fetched,
        });
        Ok(self.dir.len() - 1)
    }

    /// Write every directory entry back to shared memory, in insertion
    /// order. The store-conditional is conditioned on the tag load-linked
    /// during simulation, and guarded by a freshness read: a cell stamped by
    /// this phase is already done (peers write identical records), one
    /// stamped by a later phase dooms the whole snapshot.
    fn flush(&mut self) -> Ctl<()> {
        self.med.marker(Marker::FlushStart);
        for i in 0..self.dir.len() {
            let e = self.dir[i];
            if !self.sabotage.skip_flush_seq_guard {
                let cur = self.med.ll_item(e.item)?;
                if cur.payload.seq > self.target_seq {
                    break;
                }
                if cur.payload.seq == self.target_seq {
                    continue;
                }
            }
            let fresh = e.snap.advanced(e.local, self.target_seq);
            let _ = self.med.sc_item(e.item, e.snap_tag, fresh)?;
        }
        Ok(())
    }
}

impl<M: Mediator> AccessContext for AttemptCtx<'_, M> {
    fn read(&mut self, var: Var) -> Ctl<Value> {
        self.tick();
        let i = self.load_entry(var)?;
        Ok(self.dir[i].local)
    }

    fn write(&mut self, var: Var, v: Value) -> Ctl<()> {
        self.tick();
        let i = self.load_entry(var)?;
        self.dir[i].local = v;
        Ok(())
    }

    fn alloc(&mut self) -> Ctl<Handle> {
        self.tick();
        // Extend the shared list by one node if it ends at the cursor; win
        // or lose, everyone then follows the same link, so helpers of one
        // phase agree on every allocation.
        let won = self.med.cas_link(self.ltop, *self.spare)?;
        if won {
            *self.spare = fresh_node(self.med);
        }
        let next = self
            .med
            .read_link(self.ltop)?
            .expect("list node must be linked after a CAS on it");
        self.ltop = next;
        self.ordinal += 1;
        let h = Handle::new(self.target_seq, self.ordinal);
        let item = self.med.node_item(next);
        self.med.bind_handle(h, item);
        self.dir.push(DirEntry {
            var: Var::Dyn(h),
            item,
            snap_tag: 0,
            snap: ItemRecord::fresh(),
            local: Value::Nil,
        });
        Ok(h)
    }
}
