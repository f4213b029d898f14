//! The shared records the runtime agrees on: the per-object agreement record
//! and the double-buffered item records.

use crate::bits::{words_for, BitWords};
use crate::mediator::NodeId;
use crate::value::{ProcId, Value};

/// The agreement record (the payload of the `S` cell).
///
/// `applied`/`papplied` are one announce-parity bit per process: a process is
/// pending exactly when the two bits differ. `seq` is the phase counter,
/// `var_list` the head (sentinel) of the list where the *next* phase's
/// allocations are agreed, and `rvals[q]` the return value of process `q`'s
/// most recently applied request.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct StateRecord {
    pub applied: BitWords,
    pub papplied: BitWords,
    pub seq: u64,
    pub var_list: NodeId,
    pub rvals: Box<[Value]>,
}

impl StateRecord {
    pub fn initial(n: usize, sentinel: NodeId) -> Self {
        let words = words_for(n);
        StateRecord {
            applied: BitWords::zeroed(words),
            papplied: BitWords::zeroed(words),
            seq: 0,
            var_list: sentinel,
            rvals: vec![Value::Nil; n].into_boxed_slice(),
        }
    }

    pub fn is_pending(&self, q: ProcId) -> bool {
        self.applied.get(q) != self.papplied.get(q)
    }

    /// Processes whose announced request has been agreed but not yet applied.
    pub fn pending_set(&self, n: usize) -> Vec<ProcId> {
        (0..n).filter(|&q| self.is_pending(q)).collect()
    }
}

/// A double-buffered shared variable record.
///
/// `val[toggle]` is the current value and `val[1 - toggle]` the value from
/// just before the phase stamped in `seq`; helpers that arrive after a peer
/// already flushed their phase read the old slot to keep simulating the batch
/// from its pre-phase state.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct ItemRecord {
    pub val: [Value; 2],
    pub toggle: u8,
    pub seq: u64,
}

impl ItemRecord {
    /// The record of a batch-allocated variable before any write reaches it.
    pub fn fresh() -> Self {
        ItemRecord {
            val: [Value::Nil, Value::Nil],
            toggle: 0,
            seq: 0,
        }
    }

    /// A setup-time variable holding `v` from the start.
    pub fn initial(v: Value) -> Self {
        ItemRecord {
            val: [v, Value::Nil],
            toggle: 0,
            seq: 0,
        }
    }

    pub fn current(&self) -> Value {
        self.val[self.toggle as usize]
    }

    pub fn previous(&self) -> Value {
        self.val[1 - self.toggle as usize]
    }

    /// The record a flush installs over `self` when stamping phase `seq`
    /// with new value `v`: the toggle flips to the slot now holding `v`, and
    /// the other slot keeps what was current, preserving the pre-phase value.
    pub fn advanced(&self, v: Value, seq: u64) -> ItemRecord {
        if self.toggle == 0 {
            ItemRecord {
                val: [self.val[0], v],
                toggle: 1,
                seq,
            }
        } else {
            ItemRecord {
                val: [v, self.val[1]],
                toggle: 0,
                seq,
            }
        }
    }
}
