//! A wait-free universal construction.
//!
//! `luc` lifts a deterministic sequential object (expressed against a mediated
//! access interface) into a linearizable, wait-free concurrent object. Instead
//! of copying the whole object per operation, processes agree on a batch of
//! pending requests per phase, simulate the batch locally through a private
//! directory, and then flush the batch's writes directly into shared
//! double-buffered cells guarded by sequence stamps. Every shared update goes
//! through LL/SC cells emulated over CAS with monotone tags.
//!
//! The crate is organized so the same algorithm drives two worlds:
//!
//! * [`universe::Universe`] — the real runtime over atomics, used by threads;
//! * any single-threaded simulator implementing [`mediator::Mediator`]
//!   (the verification harness ships one) for deterministic schedule
//!   exploration.

pub mod baseline;
pub mod bits;
pub mod client;
pub mod llsc;
pub mod mediator;
pub mod objmodel;
pub mod process;
pub mod slab;
pub mod state;
pub mod universe;
pub mod value;
pub mod workload;

pub use mediator::{AccessHook, AccessKind, Ctl, Interrupt, Layout, Marker, PhaseTrace};
pub use objmodel::{ObjectKind, RequestDescriptor, SequentialObject};
pub use process::{Process, Sabotage};
pub use universe::Universe;
pub use value::{Handle, ProcId, Value, Var};
