//! The mediation boundary between the runtime algorithm and shared memory.
//!
//! [`crate::process::Process`] is written once against [`Mediator`]. The real
//! universe implements it with atomics; the verification harness implements
//! it with a single-threaded simulated world whose step machine treats every
//! shared access as one yield point. Methods returning [`Ctl`] are shared
//! accesses; the remaining methods are local effects (the moral equivalent of
//! malloc) that the simulator logs for deterministic replay but never pauses
//! on.
//!
//! Access costs are accounted in transferred machine words: a load-link or
//! store-conditional of the agreement record moves a record of `O(n)` words,
//! while item, toggle, link, and announce operations move a constant few.
//! This matches how the construction's step bound is stated — the `n` term
//! comes from record-sized reads, the `k·w` term from per-request item
//! traffic.

use crate::bits::words_for;
use crate::llsc::Snapshot;
use crate::objmodel::RequestDescriptor;
use crate::state::{ItemRecord, StateRecord};
use crate::value::{Handle, ProcId, Value};
use std::fmt;
use std::sync::Arc;

/// Index of an item cell in the universe's item slab.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct ItemId(pub u32);

/// Index of a new-variable list node in the universe's node slab.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct NodeId(pub u32);

/// Why the runtime algorithm stopped before producing a value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Interrupt {
    /// The batch being simulated is stale: a read met a record stamped by a
    /// later phase. Control falls through to the validate step, which
    /// necessarily fails, and the next iteration restarts from a fresh
    /// snapshot.
    Obsolete,
    /// Simulator only: the step machine suspended this process at a yield
    /// point. Never observed in the real runtime.
    Pause,
    /// The sequential object broke its contract.
    Fault(ObjectFault),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ObjectFault {
    /// A handle that is not bound in the allocation registry was dereferenced.
    UnknownVariable(Handle),
    /// Object code required a handle (or an integer) where the stored value
    /// has a different shape.
    ValueShape { expected: &'static str, got: Value },
}

impl fmt::Display for ObjectFault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObjectFault::UnknownVariable(h) => write!(f, "dangling handle {h}"),
            ObjectFault::ValueShape { expected, got } => {
                write!(f, "expected {expected}, got {got}")
            }
        }
    }
}

pub type Ctl<T> = Result<T, Interrupt>;

/// One shared-memory primitive, the unit of instrumentation and of
/// step-machine scheduling.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum AccessKind {
    LlState,
    VlState,
    ScState,
    /// Plain read of the current agreement record (return-value fetch).
    ReadState,
    LlItem,
    ScItem,
    /// CAS on a list node's next link.
    CasLink,
    /// Read of a list node's next link.
    ReadLink,
    ReadToggleWord,
    FadToggle,
    AnnounceStore,
    AnnounceRead,
}

/// One published phase: who published it and the batch it applied, in
/// process-id order.
#[derive(Clone, Debug)]
pub struct PhaseTrace {
    pub seq: u64,
    pub publisher: ProcId,
    pub batch: Vec<(ProcId, Arc<RequestDescriptor>, Value)>,
}

/// Structural breadcrumbs the algorithm drops for the harness. The real
/// runtime forwards only `Published` (to the phase-trace sink); the simulator
/// logs all of them so probes can reconstruct attempt and iteration
/// boundaries.
#[derive(Clone, Debug)]
pub enum Marker {
    AttemptStart,
    IterStart { snap_tag: u64, target_seq: u64 },
    FlushStart,
    IterEnd { published: bool },
    AttemptEnd,
    Published(PhaseTrace),
}

/// Instrumentation callback invoked on every shared access with its word
/// cost.
pub trait AccessHook: Send + Sync {
    fn on_access(&self, pid: ProcId, kind: AccessKind, words: u32);
}

/// Static geometry of a universe.
#[derive(Clone, Debug)]
pub struct Layout {
    pub n: usize,
    pub toggle_words: usize,
    /// Word cost of moving one agreement record: the two parity vectors, the
    /// return-value array, the phase counter, and the list head.
    pub state_words: u32,
    /// Whether publications carry phase traces (harness on, bench off).
    pub tracing: bool,
    roots: Vec<(&'static str, ItemId)>,
}

impl Layout {
    pub fn new(n: usize, tracing: bool) -> Self {
        assert!(n >= 1, "a universe needs at least one process");
        let tw = words_for(n);
        Layout {
            n,
            toggle_words: tw,
            state_words: (2 * tw + n + 2) as u32,
            tracing,
            roots: Vec::new(),
        }
    }

    /// Register a root variable's backing cell; called once per root during
    /// world construction.
    pub fn add_root(&mut self, name: &'static str, item: ItemId) {
        debug_assert!(self.root(name).is_none(), "duplicate root {name}");
        self.roots.push((name, item));
    }

    pub fn root(&self, name: &str) -> Option<ItemId> {
        self.roots
            .iter()
            .find(|(r, _)| *r == name)
            .map(|&(_, item)| item)
    }

    pub fn roots(&self) -> &[(&'static str, ItemId)] {
        &self.roots
    }
}

/// Word cost of one item record (two value slots, toggle, stamp).
pub const ITEM_WORDS: u32 = 4;

/// Shared-memory interface the runtime algorithm is written against.
pub trait Mediator {
    fn pid(&self) -> ProcId;
    fn layout(&self) -> &Layout;

    // Agreement record.
    fn ll_state(&mut self) -> Ctl<Snapshot<Arc<StateRecord>>>;
    fn vl_state(&mut self, tag: u64) -> Ctl<bool>;
    fn sc_state(&mut self, tag: u64, new: StateRecord) -> Ctl<bool>;
    fn read_state(&mut self) -> Ctl<Arc<StateRecord>>;

    // Announcements and the toggle register.
    fn announce_store(&mut self, req: Arc<RequestDescriptor>) -> Ctl<()>;
    fn announce_read(&mut self, q: ProcId) -> Ctl<Arc<RequestDescriptor>>;
    fn fad_toggle(&mut self, word: usize, delta: u64) -> Ctl<()>;
    fn read_toggle_word(&mut self, word: usize) -> Ctl<u64>;

    // Item cells.
    fn ll_item(&mut self, item: ItemId) -> Ctl<Snapshot<ItemRecord>>;
    fn sc_item(&mut self, item: ItemId, tag: u64, new: ItemRecord) -> Ctl<bool>;

    // New-variable list links.
    fn cas_link(&mut self, node: NodeId, new: NodeId) -> Ctl<bool>;
    fn read_link(&mut self, node: NodeId) -> Ctl<Option<NodeId>>;

    // Local effects.
    fn alloc_item(&mut self) -> ItemId;
    fn alloc_node(&mut self, item: Option<ItemId>) -> NodeId;
    fn node_item(&self, node: NodeId) -> ItemId;
    fn bind_handle(&mut self, h: Handle, item: ItemId);
    fn resolve_handle(&mut self, h: Handle) -> Option<ItemId>;
    fn marker(&mut self, m: Marker);
}
