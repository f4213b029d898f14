//! Verification harness for the `luc` runtime.
//!
//! Three independent oracles cooperate here:
//!
//! * [`sim`] — a deterministic single-threaded replica of the runtime in
//!   which every shared-memory access is an explicit scheduling point.
//!   An explorer enumerates interleavings (bounded depth-first search plus
//!   seeded random schedules) and [`probes`] check structural invariants of
//!   every execution trace.
//! * [`checker`] — a linearizability checker for recorded concurrent
//!   histories, searching for a witness order against a sequential
//!   reference object.
//! * [`oracle`] — a phase-replay oracle that validates the runtime's own
//!   agreement metadata (which operations were applied in which phase, and
//!   what they returned) against a sequential replay.
//!
//! [`stress`] drives the real multi-threaded runtime and records histories
//! in the text format defined in [`history`], so the same checkers apply to
//! both simulated and real executions.

pub mod checker;
pub mod history;
pub mod oracle;
pub mod probes;
pub mod sim;
pub mod stress;
