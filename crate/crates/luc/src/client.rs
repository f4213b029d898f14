//! Uniform client interface over the three benchmark variants: the
//! universal runtime, a global lock around the reference object, and
//! hand-written CAS-retry structures where one exists.

use crate::baseline::{CasCounter, TreiberStack};
use crate::mediator::{AccessHook, AccessKind};
use crate::objmodel::{ObjectKind, ReferenceObject, RequestDescriptor, SequentialObject};
use crate::process::{Process, Sabotage};
use crate::universe::{RealMediator, Universe};
use crate::value::{ProcId, Value};
use crossbeam::utils::CachePadded;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

/// One per-thread handle applying operations against some implementation.
pub trait Client: Send {
    fn apply(&mut self, opcode: &'static str, args: &[Value]) -> Value;
    /// Shared-memory traffic this client has generated, in words (runtime
    /// variant) or primitive accesses (baselines).
    fn accesses(&self) -> u64;
}

/// Per-process access tally fed by the universe's instrumentation hook.
pub struct StepCounter {
    per: Box<[CachePadded<AtomicU64>]>,
}

impl StepCounter {
    pub fn new(n: usize) -> Arc<Self> {
        Arc::new(StepCounter {
            per: (0..n).map(|_| CachePadded::new(AtomicU64::new(0))).collect(),
        })
    }

    pub fn total(&self) -> u64 {
        self.per.iter().map(|c| c.load(Ordering::Relaxed)).sum()
    }

    pub fn of(&self, pid: ProcId) -> u64 {
        self.per[pid].load(Ordering::Relaxed)
    }
}

impl AccessHook for StepCounter {
    fn on_access(&self, pid: ProcId, _kind: AccessKind, words: u32) {
        self.per[pid].fetch_add(words as u64, Ordering::Relaxed);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    Luc,
    Lock,
    CasRetry,
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::Luc => "luc",
            Variant::Lock => "lock",
            Variant::CasRetry => "casretry",
        })
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "luc" => Ok(Variant::Luc),
            "lock" => Ok(Variant::Lock),
            "casretry" => Ok(Variant::CasRetry),
            other => Err(format!(
                "unknown variant {other:?} (expected luc, lock, or casretry)"
            )),
        }
    }
}

struct LucClient {
    process: Process<RealMediator>,
    pid: ProcId,
    counter: Arc<StepCounter>,
}

impl Client for LucClient {
    fn apply(&mut self, opcode: &'static str, args: &[Value]) -> Value {
        let req = Arc::new(RequestDescriptor::new(opcode, args.to_vec(), self.pid));
        self.process
            .apply(req)
            .expect("the real world never interrupts")
    }

    fn accesses(&self) -> u64 {
        self.counter.of(self.pid)
    }
}

struct LockClient {
    shared: Arc<Mutex<Box<dyn ReferenceObject>>>,
    accesses: u64,
}

impl Client for LockClient {
    fn apply(&mut self, opcode: &'static str, args: &[Value]) -> Value {
        // Charged as two shared accesses: acquire and release. The protected
        // operation itself is local.
        self.accesses += 2;
        self.shared.lock().unwrap().apply(opcode, args)
    }

    fn accesses(&self) -> u64 {
        self.accesses
    }
}

struct CasCounterClient {
    shared: Arc<CasCounter>,
    accesses: u64,
}

impl Client for CasCounterClient {
    fn apply(&mut self, opcode: &'static str, _args: &[Value]) -> Value {
        Value::Int(match opcode {
            "inc" => self.shared.inc(&mut self.accesses),
            "read" => self.shared.read(&mut self.accesses),
            other => panic!("cas counter: unknown opcode {other}"),
        })
    }

    fn accesses(&self) -> u64 {
        self.accesses
    }
}

struct TreiberClient {
    shared: Arc<TreiberStack>,
    accesses: u64,
}

impl Client for TreiberClient {
    fn apply(&mut self, opcode: &'static str, args: &[Value]) -> Value {
        match opcode {
            "push" => {
                self.shared
                    .push(args[0].as_int().expect("push takes an int"), &mut self.accesses);
                Value::Nil
            }
            "pop" => self
                .shared
                .pop(&mut self.accesses)
                .map_or(Value::Nil, Value::Int),
            other => panic!("treiber stack: unknown opcode {other}"),
        }
    }

    fn accesses(&self) -> u64 {
        self.accesses
    }
}

/// A constructed fleet of clients, one per process, plus whatever shared
/// state backs them (kept alive here).
pub struct Fleet {
    pub clients: Vec<Box<dyn Client>>,
    /// The universe behind `luc` clients, for post-run inspection.
    pub universe: Option<Universe>,
    pub counter: Option<Arc<StepCounter>>,
}

/// Fans one access event out to both hooks.
struct TeeHook(Arc<dyn AccessHook>, Arc<dyn AccessHook>);

impl AccessHook for TeeHook {
    fn on_access(&self, pid: ProcId, kind: AccessKind, words: u32) {
        self.0.on_access(pid, kind, words);
        self.1.on_access(pid, kind, words);
    }
}

/// Build `n` clients of the given variant over the given object. CAS-retry
/// exists only for counter and stack; other objects fall back to the lock
/// baseline (reported by the returned effective variant).
pub fn build_fleet(variant: Variant, kind: ObjectKind, n: usize) -> (Fleet, Variant) {
    build_fleet_hooked(variant, kind, n, None)
}

/// [`build_fleet`] with an extra access hook installed on the runtime
/// variant alongside its step counter (baselines count internally and have
/// no hook path).
pub fn build_fleet_hooked(
    variant: Variant,
    kind: ObjectKind,
    n: usize,
    extra: Option<Arc<dyn AccessHook>>,
) -> (Fleet, Variant) {
    let object: Arc<dyn SequentialObject> = kind.build();
    match variant {
        Variant::Luc => {
            let counter = StepCounter::new(n);
            let hook: Arc<dyn AccessHook> = match extra {
                Some(extra) => Arc::new(TeeHook(counter.clone(), extra)),
                None => counter.clone(),
            };
            let u = Universe::builder(n, object)
                .hook(hook)
                .sabotage(Sabotage::default())
                .build();
            let clients = (0..n)
                .map(|pid| {
                    Box::new(LucClient {
                        process: u.process(pid),
                        pid,
                        counter: counter.clone(),
                    }) as Box<dyn Client>
                })
                .collect();
            (
                Fleet {
                    clients,
                    universe: Some(u),
                    counter: Some(counter),
                },
                Variant::Luc,
            )
        }
        Variant::Lock => {
            let shared = Arc::new(Mutex::new(object.reference()));
            let clients = (0..n)
                .map(|_| {
                    Box::new(LockClient {
                        shared: shared.clone(),
                        accesses: 0,
                    }) as Box<dyn Client>
                })
                .collect();
            (
                Fleet {
                    clients,
                    universe: None,
                    counter: None,
                },
                Variant::Lock,
            )
        }
        Variant::CasRetry => match kind {
            ObjectKind::Counter => {
                let shared = Arc::new(CasCounter::new());
                let clients = (0..n)
                    .map(|_| {
                        Box::new(CasCounterClient {
                            shared: shared.clone(),
                            accesses: 0,
                        }) as Box<dyn Client>
                    })
                    .collect();
                (
                    Fleet {
                        clients,
                        universe: None,
                        counter: None,
                    },
                    Variant::CasRetry,
                )
            }
            ObjectKind::Stack => {
                let shared = Arc::new(TreiberStack::new());
                let clients = (0..n)
                    .map(|_| {
                        Box::new(TreiberClient {
                            shared: shared.clone(),
                            accesses: 0,
                        }) as Box<dyn Client>
                    })
                    .collect();
                (
                    Fleet {
                        clients,
                        universe: None,
                        counter: None,
                    },
                    Variant::CasRetry,
                )
            }
            // No bespoke CAS structure for these; measure the lock instead.
            ObjectKind::Queue | ObjectKind::SortedSet => build_fleet(Variant::Lock, kind, n),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_variant_counts_correctly() {
        for variant in [Variant::Luc, Variant::Lock, Variant::CasRetry] {
            let (mut fleet, _) = build_fleet(variant, ObjectKind::Counter, 2);
            let mut outs = Vec::new();
            for round in 0..10 {
                for c in fleet.clients.iter_mut() {
                    outs.push(c.apply("inc", &[]).as_int().unwrap());
                    assert!(c.accesses() > 0, "{variant} round {round}: no accesses counted");
                }
            }
            outs.sort_unstable();
            assert_eq!(outs, (0..20).collect::<Vec<_>>(), "{variant}");
        }
    }

    #[test]
    fn casretry_falls_back_to_lock_for_queue() {
        let (_, effective) = build_fleet(Variant::CasRetry, ObjectKind::Queue, 2);
        assert_eq!(effective, Variant::Lock);
    }
}
