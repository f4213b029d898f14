//! Values stored in shared variables: tagged scalars plus opaque handles.

use std::fmt;
use std::str::FromStr;

/// Process identifier, `0..n`.
pub type ProcId = usize;

/// Identity of a dynamically allocated variable.
///
/// A handle packs the phase that allocated the variable with the variable's
/// ordinal inside that phase's batch. Every helper of a phase simulates the
/// same batch against the same snapshot, so all of them compute the same
/// handle for the same allocation — values written by different helpers are
/// bit-identical. Consecutive allocations within one request get consecutive
/// ordinals, which lets an object reference a multi-cell node (value cell,
/// next cell) through a single handle via [`Handle::offset`].
///
/// Handles are resolved to concrete item cells through the universe's
/// allocation registry.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Handle(u64);

impl Handle {
    pub fn new(phase: u64, ordinal: u32) -> Self {
        debug_assert!(phase < (1 << 32), "phase counter exceeded 2^32");
        Handle(phase << 32 | u64::from(ordinal))
    }

    pub fn phase(self) -> u64 {
        self.0 >> 32
    }

    pub fn ordinal(self) -> u32 {
        self.0 as u32
    }

    /// The handle allocated `k` calls after this one in the same request.
    pub fn offset(self, k: u32) -> Handle {
        Handle::new(self.phase(), self.ordinal() + k)
    }
}

impl fmt::Debug for Handle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "h{}.{}", self.phase(), self.ordinal())
    }
}

impl fmt::Display for Handle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "h{}.{}", self.phase(), self.ordinal())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Value {
    /// The bottom value, written ⊥ in histories as `nil`.
    Nil,
    Int(i64),
    Handle(Handle),
}

impl Value {
    pub fn is_nil(self) -> bool {
        matches!(self, Value::Nil)
    }

    pub fn as_int(self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(i),
            _ => None,
        }
    }

    pub fn as_handle(self) -> Option<Handle> {
        match self {
            Value::Handle(h) => Some(h),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Nil => write!(f, "nil"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Handle(h) => write!(f, "{h}"),
        }
    }
}

impl FromStr for Value {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "nil" {
            return Ok(Value::Nil);
        }
        if let Some(rest) = s.strip_prefix('h') {
            if let Some((p, o)) = rest.split_once('.') {
                let phase: u64 = p.parse().map_err(|_| format!("bad handle: {s}"))?;
                let ordinal: u32 = o.parse().map_err(|_| format!("bad handle: {s}"))?;
                return Ok(Value::Handle(Handle::new(phase, ordinal)));
            }
        }
        s.parse::<i64>()
            .map(Value::Int)
            .map_err(|_| format!("bad value: {s}"))
    }
}

/// A variable name as seen by sequential object code: either one of the
/// object's named roots or a dynamically allocated variable.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Var {
    Named(&'static str),
    Dyn(Handle),
}

impl From<Handle> for Var {
    fn from(h: Handle) -> Var {
        Var::Dyn(h)
    }
}
