//! Sequential object model.
//!
//! An object is deterministic sequential code written against an abstract
//! variable store: named root variables fixed at construction plus
//! dynamically allocated cells addressed by [`Handle`]. The runtime simulates
//! that code under its agreement protocol; the verification harness and the
//! lock/CAS baselines reuse the in-memory [`ReferenceObject`] as oracle and
//! as protected state.
//!
//! Allocation returns single cells. Linked structures take two consecutive
//! cells per node — a value cell and a link cell — relying on the guarantee
//! that back-to-back allocations within one operation yield adjacent handles
//! (see [`alloc_pair`]).

use crate::mediator::{Ctl, Interrupt, ObjectFault};
use crate::value::{Handle, ProcId, Value, Var};
use std::fmt;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::str::FromStr;
use std::sync::Arc;

mod counter;
mod queue;
mod sortedset;
mod stack;

pub use counter::Counter;
pub use queue::Queue;
pub use sortedset::SortedSet;
pub use stack::Stack;

/// An announced operation. Immutable once stored in an announce slot; helpers
/// share one allocation via `Arc`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RequestDescriptor {
    pub opcode: &'static str,
    pub args: Vec<Value>,
    pub owner: ProcId,
}

impl RequestDescriptor {
    pub fn new(opcode: &'static str, args: Vec<Value>, owner: ProcId) -> Self {
        RequestDescriptor {
            opcode,
            args,
            owner,
        }
    }

    /// Positional argument accessor; object code calls it only for arities
    /// its opcode table promises, so absence is a workload bug.
    pub fn arg(&self, i: usize) -> Value {
        *self
            .args
            .get(i)
            .unwrap_or_else(|| panic!("{}: missing argument {i}", self.opcode))
    }
}

impl fmt::Display for RequestDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.opcode)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

/// Variable store the object sees while an operation runs. Every call is one
/// shared access in the operation's access budget.
pub trait AccessContext {
    fn read(&mut self, var: Var) -> Ctl<Value>;
    fn write(&mut self, var: Var, v: Value) -> Ctl<()>;
    /// Allocate a fresh cell (initially [`Value::Nil`]).
    fn alloc(&mut self) -> Ctl<Handle>;
}

/// Variable store during initial construction, before any concurrency.
pub trait SetupContext {
    fn alloc(&mut self) -> Handle;
    fn write(&mut self, var: Var, v: Value);
}

/// Allocate a two-cell node: returns the value cell, whose successor
/// `h.offset(1)` is the link cell.
pub fn alloc_pair(ctx: &mut dyn AccessContext) -> Ctl<Handle> {
    let hv = ctx.alloc()?;
    let hn = ctx.alloc()?;
    debug_assert_eq!(hn, hv.offset(1), "paired cells must be adjacent");
    Ok(hv)
}

/// Two-cell allocation at setup time.
pub fn setup_pair(s: &mut dyn SetupContext) -> Handle {
    let hv = s.alloc();
    let hn = s.alloc();
    debug_assert_eq!(hn, hv.offset(1), "paired cells must be adjacent");
    hv
}

pub fn want_int(v: Value) -> Ctl<i64> {
    v.as_int().ok_or(Interrupt::Fault(ObjectFault::ValueShape {
        expected: "int",
        got: v,
    }))
}

pub fn want_handle(v: Value) -> Ctl<Handle> {
    v.as_handle()
        .ok_or(Interrupt::Fault(ObjectFault::ValueShape {
            expected: "handle",
            got: v,
        }))
}

/// A link cell holds either a handle or nil.
pub fn want_link(v: Value) -> Ctl<Option<Handle>> {
    match v {
        Value::Nil => Ok(None),
        Value::Handle(h) => Ok(Some(h)),
        other => Err(Interrupt::Fault(ObjectFault::ValueShape {
            expected: "handle or nil",
            got: other,
        })),
    }
}

/// Deterministic sequential object code.
pub trait SequentialObject: Send + Sync {
    fn name(&self) -> &'static str;
    /// Named root variables, allocated before `setup` runs.
    fn roots(&self) -> &'static [&'static str];
    /// Write the initial state.
    fn setup(&self, s: &mut dyn SetupContext);
    /// Run one operation. Determinism contract: identical store contents and
    /// request yield identical access sequences and result.
    fn dispatch(&self, req: &RequestDescriptor, ctx: &mut dyn AccessContext) -> Ctl<Value>;
    /// Upper bound on shared accesses (reads + writes + allocations) any
    /// single operation performs.
    fn access_bound(&self) -> usize;
    /// Supported opcodes.
    fn opcodes(&self) -> &'static [&'static str];
    /// Fresh in-memory oracle holding the same initial state.
    fn reference(&self) -> Box<dyn ReferenceObject>;
}

/// In-memory twin of a sequential object: same operations, same results,
/// plain Rust state. Drives the linearizability checker and serves as the
/// protected state of the lock baseline.
pub trait ReferenceObject: Send {
    fn apply(&mut self, opcode: &str, args: &[Value]) -> Value;
    /// Hash of the abstract state, for memoizing checker search nodes.
    fn fingerprint(&self) -> u64;
    fn boxed_clone(&self) -> Box<dyn ReferenceObject>;
}

pub(crate) fn hash_one<T: Hash>(t: &T) -> u64 {
    let mut h = DefaultHasher::new();
    t.hash(&mut h);
    h.finish()
}

/// Object selector shared by the CLIs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObjectKind {
    Counter,
    Stack,
    Queue,
    SortedSet,
}

impl ObjectKind {
    pub const ALL: [ObjectKind; 4] = [
        ObjectKind::Counter,
        ObjectKind::Stack,
        ObjectKind::Queue,
        ObjectKind::SortedSet,
    ];

    /// Construct with default parameters (empty queue, set over keys 0..16).
    pub fn build(self) -> Arc<dyn SequentialObject> {
        match self {
            ObjectKind::Counter => Arc::new(Counter::new()),
            ObjectKind::Stack => Arc::new(Stack::new()),
            ObjectKind::Queue => Arc::new(Queue::new(Vec::new())),
            ObjectKind::SortedSet => Arc::new(SortedSet::new(16)),
        }
    }
}

impl fmt::Display for ObjectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ObjectKind::Counter => "counter",
            ObjectKind::Stack => "stack",
            ObjectKind::Queue => "queue",
            ObjectKind::SortedSet => "set",
        };
        f.write_str(s)
    }
}

impl FromStr for ObjectKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "counter" => Ok(ObjectKind::Counter),
            "stack" => Ok(ObjectKind::Stack),
            "queue" => Ok(ObjectKind::Queue),
            "set" | "sortedset" => Ok(ObjectKind::SortedSet),
            other => Err(format!(
                "unknown object {other:?} (expected counter, stack, queue, or set)"
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    /// Plain in-memory variable store: lets object code run directly, with
    /// access counting, for oracle tests against the references.
    struct TestCtx {
        cells: HashMap<Var, Value>,
        next_ordinal: u32,
        accesses: usize,
    }

    impl TestCtx {
        fn new(obj: &dyn SequentialObject) -> Self {
            let mut ctx = TestCtx {
                cells: HashMap::new(),
                next_ordinal: 0,
                accesses: 0,
            };
            for root in obj.roots() {
                ctx.cells.insert(Var::Named(root), Value::Nil);
            }
            obj.setup(&mut ctx);
            ctx
        }

        fn apply(&mut self, obj: &dyn SequentialObject, req: &RequestDescriptor) -> Value {
            self.accesses = 0;
            let out = obj.dispatch(req, self).expect("sequential run cannot be interrupted");
            assert!(
                self.accesses <= obj.access_bound(),
                "{req} took {} accesses, over the declared bound {}",
                self.accesses,
                obj.access_bound()
            );
            out
        }
    }

    impl AccessContext for TestCtx {
        fn read(&mut self, var: Var) -> Ctl<Value> {
            self.accesses += 1;
            Ok(*self
                .cells
                .get(&var)
                .unwrap_or_else(|| panic!("read of unallocated {var:?}")))
        }

        fn write(&mut self, var: Var, v: Value) -> Ctl<()> {
            self.accesses += 1;
            assert!(self.cells.contains_key(&var), "write to unallocated {var:?}");
            self.cells.insert(var, v);
            Ok(())
        }

        fn alloc(&mut self) -> Ctl<Handle> {
            self.accesses += 1;
            Ok(SetupContext::alloc(self))
        }
    }

    impl SetupContext for TestCtx {
        fn alloc(&mut self) -> Handle {
            let h = Handle::new(1, self.next_ordinal);
            self.next_ordinal += 1;
            self.cells.insert(Var::Dyn(h), Value::Nil);
            h
        }

        fn write(&mut self, var: Var, v: Value) {
            assert!(self.cells.contains_key(&var), "write to unallocated {var:?}");
            self.cells.insert(var, v);
        }
    }

    fn random_request(obj: &dyn SequentialObject, rng: &mut ChaCha8Rng) -> RequestDescriptor {
        let opcode = *obj.opcodes().choose(rng).unwrap();
        let args = match opcode {
            "inc" | "read" | "pop" | "dequeue" => Vec::new(),
            // Keys straddle the set's 0..16 domain to exercise rejection.
            "insert" | "remove" | "contains" => vec![Value::Int(rng.random_range(-2..20))],
            "push" | "enqueue" => vec![Value::Int(rng.random_range(-100..100))],
            other => panic!("no argument rule for {other}"),
        };
        RequestDescriptor::new(opcode, args, 0)
    }

    /// Object code over a plain store agrees with its reference on long
    /// random runs, within the declared access bound.
    #[test]
    fn objects_agree_with_references() {
        for kind in ObjectKind::ALL {
            let obj = kind.build();
            let mut ctx = TestCtx::new(obj.as_ref());
            let mut oracle = obj.reference();
            let mut rng = ChaCha8Rng::seed_from_u64(0x0b1ec7 ^ kind as u64);
            for step in 0..4000 {
                let req = random_request(obj.as_ref(), &mut rng);
                let got = ctx.apply(obj.as_ref(), &req);
                let want = oracle.apply(req.opcode, &req.args);
                assert_eq!(got, want, "{kind} step {step}: {req} diverged");
            }
        }
    }

    /// Queue prefill is visible in FIFO order ahead of later enqueues.
    #[test]
    fn queue_prefill_dequeues_first() {
        let obj = Queue::new(vec![1, 2]);
        let mut ctx = TestCtx::new(&obj);
        let enq = RequestDescriptor::new("enqueue", vec![Value::Int(9)], 0);
        let deq = RequestDescriptor::new("dequeue", Vec::new(), 0);
        assert_eq!(ctx.apply(&obj, &enq), Value::Nil);
        assert_eq!(ctx.apply(&obj, &deq), Value::Int(1));
        assert_eq!(ctx.apply(&obj, &deq), Value::Int(2));
        assert_eq!(ctx.apply(&obj, &deq), Value::Int(9));
        assert_eq!(ctx.apply(&obj, &deq), Value::Nil);
    }

    /// The set rejects keys outside its domain so its traversal bound holds.
    #[test]
    fn set_rejects_out_of_domain_inserts() {
        let obj = SortedSet::new(4);
        let mut ctx = TestCtx::new(&obj);
        let ins = |k| RequestDescriptor::new("insert", vec![Value::Int(k)], 0);
        let has = |k| RequestDescriptor::new("contains", vec![Value::Int(k)], 0);
        assert_eq!(ctx.apply(&obj, &ins(3)), Value::Int(1));
        assert_eq!(ctx.apply(&obj, &ins(4)), Value::Int(-1));
        assert_eq!(ctx.apply(&obj, &ins(-1)), Value::Int(-1));
        assert_eq!(ctx.apply(&obj, &has(3)), Value::Int(1));
        assert_eq!(ctx.apply(&obj, &has(4)), Value::Int(0));
    }

    /// Reference fingerprints separate distinct states and match on equal
    /// ones, as the checker's memo table requires.
    #[test]
    fn reference_fingerprints_track_state() {
        for kind in ObjectKind::ALL {
            let obj = kind.build();
            let mut a = obj.reference();
            let b = obj.reference();
            assert_eq!(a.fingerprint(), b.fingerprint(), "{kind}: fresh twins");
            let mutating = match kind {
                ObjectKind::Counter => ("inc", Vec::new()),
                ObjectKind::Stack => ("push", vec![Value::Int(5)]),
                ObjectKind::Queue => ("enqueue", vec![Value::Int(5)]),
                ObjectKind::SortedSet => ("insert", vec![Value::Int(5)]),
            };
            a.apply(mutating.0, &mutating.1);
            assert_ne!(a.fingerprint(), b.fingerprint(), "{kind}: after mutation");
            let mut c = obj.reference();
            c.apply(mutating.0, &mutating.1);
            assert_eq!(a.fingerprint(), c.fingerprint(), "{kind}: same history");
        }
    }

    #[test]
    fn object_kind_parses() {
        for kind in ObjectKind::ALL {
            assert_eq!(kind.to_string().parse::<ObjectKind>().unwrap(), kind);
        }
        assert!("widget".parse::<ObjectKind>().is_err());
    }
}
