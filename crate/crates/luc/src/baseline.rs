//! Hand-written lock-free baselines for the benchmark: a CAS-retry counter
//! and a Treiber stack. Unlike the universal runtime they are not wait-free
//! — a loser retries — which is exactly the contrast the benchmark exists to
//! measure.

use crossbeam::epoch::{self, Atomic, Owned, Shared};
use std::sync::atomic::{AtomicI64, Ordering::SeqCst};

/// Fetch-and-increment by CAS retry. `inc` reports how many shared accesses
/// (loads + CAS attempts) the operation used.
pub struct CasCounter {
    v: AtomicI64,
}

impl CasCounter {
    #[allow(clippy::new_without_default)]
    pub fn new() -> Self {
        CasCounter {
            v: AtomicI64::new(0),
        }
    }

    pub fn inc(&self, accesses: &mut u64) -> i64 {
        loop {
            *accesses += 1;
            let c = self.v.load(SeqCst);
            *accesses += 1;
            if self
                .v
                .compare_exchange(c, c + 1, SeqCst, SeqCst)
                .is_ok()
            {
                return c;
            }
        }
    }

    pub fn read(&self, accesses: &mut u64) -> i64 {
        *accesses += 1;
        self.v.load(SeqCst)
    }
}

struct TNode {
    v: i64,
    next: Atomic<TNode>,
}

/// Classic Treiber stack with epoch-based reclamation.
pub struct TreiberStack {
    head: Atomic<TNode>,
}

impl TreiberStack {
    #[allow(clippy::new_without_default)]
    pub fn new() -> Self {
        TreiberStack {
            head: Atomic::null(),
        }
    }

    pub fn push(&self, v: i64, accesses: &mut u64) {
        let guard = epoch::pin();
        let mut node = Owned::new(TNode {
            v,
            next: Atomic::null(),
        });
        loop {
            *accesses += 1;
            let head = self.head.load(SeqCst, &guard);
            node.next.store(head, SeqCst);
            *accesses += 1;
            match self.head.compare_exchange(head, node, SeqCst, SeqCst, &guard) {
                Ok(_) => return,
                Err(e) => node = e.new,
            }
        }
    }

    pub fn pop(&self, accesses: &mut u64) -> Option<i64> {
        let guard = epoch::pin();
        loop {
            *accesses += 1;
            let head = self.head.load(SeqCst, &guard);
            let h = unsafe { head.as_ref() }?;
            *accesses += 1;
            let next = h.next.load(SeqCst, &guard);
            *accesses += 1;
            if self
                .head
                .compare_exchange(head, next, SeqCst, SeqCst, &guard)
                .is_ok()
            {
                let v = h.v;
                unsafe { guard.defer_destroy(head) };
                return Some(v);
            }
        }
    }
}

impl Drop for TreiberStack {
    fn drop(&mut self) {
        unsafe {
            let guard = epoch::unprotected();
            let mut sh: Shared<'_, TNode> = self.head.load(SeqCst, guard);
            while !sh.is_null() {
                let owned = sh.into_owned();
                sh = owned.next.load(SeqCst, guard);
                drop(owned);
            }
        }
    }
}
