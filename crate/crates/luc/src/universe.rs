//! The real shared-memory world: one agreement record, announce slots, the
//! toggle register, and append-only slabs of item cells and list nodes,
//! shared by up to `n` OS threads each driving one [`Process`].

use crate::llsc::{cas_word, Snapshot, VersionedCell};
use crate::mediator::{
    AccessHook, AccessKind, Ctl, ItemId, Layout, Marker, Mediator, NodeId, PhaseTrace, ITEM_WORDS,
};
use crate::objmodel::{RequestDescriptor, SequentialObject, SetupContext};
use crate::process::{Process, Sabotage};
use crate::slab::Slab;
use crate::state::{ItemRecord, StateRecord};
use crate::value::{Handle, ProcId, Value, Var};
use dashmap::DashMap;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

struct NodeSlot {
    /// The fresh cell this node carries; sentinels carry none.
    item: Option<ItemId>,
    /// Successor, encoded as `id + 1` with 0 for "none".
    next: AtomicU64,
}

struct UInner {
    layout: Layout,
    object: Arc<dyn SequentialObject>,
    sabotage: Sabotage,
    s: VersionedCell<Arc<StateRecord>>,
    toggles: Box<[AtomicU64]>,
    announce: Box<[VersionedCell<Option<Arc<RequestDescriptor>>>]>,
    items: Slab<VersionedCell<ItemRecord>>,
    nodes: Slab<NodeSlot>,
    registry: DashMap<Handle, ItemId>,
    hook: Option<Arc<dyn AccessHook>>,
    phases: Mutex<Vec<PhaseTrace>>,
    claimed: Box<[AtomicBool]>,
}

pub struct UniverseBuilder {
    object: Arc<dyn SequentialObject>,
    n: usize,
    sabotage: Sabotage,
    tracing: bool,
    hook: Option<Arc<dyn AccessHook>>,
}

impl UniverseBuilder {
    pub fn new(n: usize, object: Arc<dyn SequentialObject>) -> Self {
        UniverseBuilder {
            object,
            n,
            sabotage: Sabotage::default(),
            tracing: false,
            hook: None,
        }
    }

    /// Record every published phase (who published, which requests, which
    /// results). Costs an allocation per phase; leave off for benchmarks.
    pub fn tracing(mut self, on: bool) -> Self {
        self.tracing = on;
        self
    }

    pub fn sabotage(mut self, s: Sabotage) -> Self {
        self.sabotage = s;
        self
    }

    pub fn hook(mut self, hook: Arc<dyn AccessHook>) -> Self {
        self.hook = Some(hook);
        self
    }

    pub fn build(self) -> Universe {
        let n = self.n;
        let mut layout = Layout::new(n, self.tracing);
        let items = Slab::new(1 << 16, 1 << 12);
        let nodes = Slab::new(1 << 16, 1 << 12);
        let registry = DashMap::new();

        for name in self.object.roots() {
            let id = ItemId(items.push(VersionedCell::new(ItemRecord::fresh())) as u32);
            layout.add_root(name, id);
        }
        {
            let mut setup = RealSetup {
                layout: &layout,
                items: &items,
                registry: &registry,
                ordinal: 0,
            };
            self.object.setup(&mut setup);
        }

        let sentinel = NodeId(nodes.push(NodeSlot {
            item: None,
            next: AtomicU64::new(0),
        }) as u32);
        let s = VersionedCell::new(Arc::new(StateRecord::initial(n, sentinel)));
        let toggles = (0..layout.toggle_words)
            .map(|_| AtomicU64::new(0))
            .collect();
        let announce = (0..n).map(|_| VersionedCell::new(None)).collect();
        let claimed = (0..n).map(|_| AtomicBool::new(false)).collect();

        Universe {
            inner: Arc::new(UInner {
                layout,
                object: self.object,
                sabotage: self.sabotage,
                s,
                toggles,
                announce,
                items,
                nodes,
                registry,
                hook: self.hook,
                phases: Mutex::new(Vec::new()),
                claimed,
            }),
        }
    }
}

/// Setup-time variable store: plain single-threaded writes, handles minted
/// in phase 0.
struct RealSetup<'a> {
    layout: &'a Layout,
    items: &'a Slab<VersionedCell<ItemRecord>>,
    registry: &'a DashMap<Handle, ItemId>,
    ordinal: u32,
}

impl RealSetup<'_> {
    fn cell(&self, var: Var) -> &VersionedCell<ItemRecord> {
        let id = match var {
            Var::Named(name) => self
                .layout
                .root(name)
                .unwrap_or_else(|| panic!("setup wrote undeclared root {name:?}")),
            Var::Dyn(h) => *self
                .registry
                .get(&h)
                .unwrap_or_else(|| panic!("setup wrote unallocated {h}")),
        };
        self.items.get(id.0 as usize)
    }
}

impl SetupContext for RealSetup<'_> {
    fn alloc(&mut self) -> Handle {
        let id = ItemId(self.items.push(VersionedCell::new(ItemRecord::fresh())) as u32);
        self.ordinal += 1;
        let h = Handle::new(0, self.ordinal);
        self.registry.insert(h, id);
        h
    }

    fn write(&mut self, var: Var, v: Value) {
        self.cell(var).store(ItemRecord::initial(v));
    }
}

/// Handle to one shared world; clone freely, one [`Process`] per id.
#[derive(Clone)]
pub struct Universe {
    inner: Arc<UInner>,
}

impl Universe {
    pub fn builder(n: usize, object: Arc<dyn SequentialObject>) -> UniverseBuilder {
        UniverseBuilder::new(n, object)
    }

    pub fn new(n: usize, object: Arc<dyn SequentialObject>) -> Universe {
        UniverseBuilder::new(n, object).build()
    }

    pub fn layout(&self) -> &Layout {
        &self.inner.layout
    }

    pub fn object(&self) -> &Arc<dyn SequentialObject> {
        &self.inner.object
    }

    /// Claim process id `pid`. Panics if claimed twice — each id is one
    /// logical thread of execution.
    pub fn process(&self, pid: ProcId) -> Process<RealMediator> {
        assert!(pid < self.inner.layout.n, "pid {pid} out of range");
        assert!(
            !self.inner.claimed[pid].swap(true, Ordering::SeqCst),
            "pid {pid} claimed twice"
        );
        Process::new(
            RealMediator {
                u: Arc::clone(&self.inner),
                pid,
            },
            Arc::clone(&self.inner.object),
            self.inner.sabotage,
        )
    }

    /// The current agreement record (for tests and probes; plain read).
    pub fn current_state(&self) -> Arc<StateRecord> {
        self.inner.s.read()
    }

    /// Quiescent read of a root variable's live value.
    pub fn read_root(&self, name: &str) -> Value {
        let id = self
            .inner
            .layout
            .root(name)
            .unwrap_or_else(|| panic!("no root named {name:?}"));
        self.inner.items.get(id.0 as usize).read().current()
    }

    /// Quiescent read of any variable, following handles.
    pub fn read_var(&self, var: Var) -> Value {
        let id = match var {
            Var::Named(name) => self
                .inner
                .layout
                .root(name)
                .unwrap_or_else(|| panic!("no root named {name:?}")),
            Var::Dyn(h) => *self
                .inner
                .registry
                .get(&h)
                .unwrap_or_else(|| panic!("unbound handle {h}")),
        };
        self.inner.items.get(id.0 as usize).read().current()
    }

    /// Phases published so far (tracing builds only), in phase order.
    /// Publishers append after their store-conditional lands, so arrival
    /// order can differ from phase order; sequence numbers are unique and
    /// reconstruct it.
    pub fn phase_traces(&self) -> Vec<PhaseTrace> {
        let mut phases = self.inner.phases.lock().unwrap().clone();
        phases.sort_by_key(|p| p.seq);
        phases
    }
}

/// [`Mediator`] over the real world: every shared access goes straight to an
/// atomic and then ticks the hook with its word cost (the hook observes
/// completed accesses, so a hook that parks the thread leaves the access
/// visible to peers while parked).
pub struct RealMediator {
    u: Arc<UInner>,
    pid: ProcId,
}

impl RealMediator {
    fn tick(&self, kind: AccessKind, words: u32) {
        if let Some(h) = &self.u.hook {
            h.on_access(self.pid, kind, words);
        }
    }
}

impl Mediator for RealMediator {
    fn pid(&self) -> ProcId {
        self.pid
    }

    fn layout(&self) -> &Layout {
        &self.u.layout
    }

    fn ll_state(&mut self) -> Ctl<Snapshot<Arc<StateRecord>>> {
        let snap = self.u.s.ll();
        self.tick(AccessKind::LlState, self.u.layout.state_words);
        Ok(snap)
    }

    fn vl_state(&mut self, tag: u64) -> Ctl<bool> {
        let ok = self.u.s.vl(tag);
        self.tick(AccessKind::VlState, 1);
        Ok(ok)
    }

    fn sc_state(&mut self, tag: u64, new: StateRecord) -> Ctl<bool> {
        let ok = self.u.s.sc(tag, Arc::new(new));
        self.tick(AccessKind::ScState, self.u.layout.state_words);
        Ok(ok)
    }

    fn read_state(&mut self) -> Ctl<Arc<StateRecord>> {
        let s = self.u.s.read();
        self.tick(AccessKind::ReadState, self.u.layout.state_words);
        Ok(s)
    }

    fn announce_store(&mut self, req: Arc<RequestDescriptor>) -> Ctl<()> {
        self.u.announce[self.pid].store(Some(req));
        self.tick(AccessKind::AnnounceStore, 1);
        Ok(())
    }

    fn announce_read(&mut self, q: ProcId) -> Ctl<Arc<RequestDescriptor>> {
        let req = self.u.announce[q]
            .read()
            .expect("a process with a flipped toggle bit has announced");
        self.tick(AccessKind::AnnounceRead, 1);
        Ok(req)
    }

    fn fad_toggle(&mut self, word: usize, delta: u64) -> Ctl<()> {
        self.u.toggles[word].fetch_add(delta, Ordering::SeqCst);
        self.tick(AccessKind::FadToggle, 1);
        Ok(())
    }

    fn read_toggle_word(&mut self, word: usize) -> Ctl<u64> {
        let v = self.u.toggles[word].load(Ordering::SeqCst);
        self.tick(AccessKind::ReadToggleWord, 1);
        Ok(v)
    }

    fn ll_item(&mut self, item: ItemId) -> Ctl<Snapshot<ItemRecord>> {
        let snap = self.u.items.get(item.0 as usize).ll();
        self.tick(AccessKind::LlItem, ITEM_WORDS);
        Ok(snap)
    }

    fn sc_item(&mut self, item: ItemId, tag: u64, new: ItemRecord) -> Ctl<bool> {
        let ok = self.u.items.get(item.0 as usize).sc(tag, new);
        self.tick(AccessKind::ScItem, ITEM_WORDS);
        Ok(ok)
    }

    fn cas_link(&mut self, node: NodeId, new: NodeId) -> Ctl<bool> {
        let slot = self.u.nodes.get(node.0 as usize);
        let ok = cas_word(&slot.next, 0, new.0 as u64 + 1);
        self.tick(AccessKind::CasLink, 1);
        Ok(ok)
    }

    fn read_link(&mut self, node: NodeId) -> Ctl<Option<NodeId>> {
        let raw = self.u.nodes.get(node.0 as usize).next.load(Ordering::SeqCst);
        self.tick(AccessKind::ReadLink, 1);
        Ok((raw != 0).then(|| NodeId((raw - 1) as u32)))
    }

    fn alloc_item(&mut self) -> ItemId {
        ItemId(
            self.u
                .items
                .push(VersionedCell::new(ItemRecord::fresh())) as u32,
        )
    }

    fn alloc_node(&mut self, item: Option<ItemId>) -> NodeId {
        NodeId(self.u.nodes.push(NodeSlot {
            item,
            next: AtomicU64::new(0),
        }) as u32)
    }

    fn node_item(&self, node: NodeId) -> ItemId {
        self.u
            .nodes
            .get(node.0 as usize)
            .item
            .expect("sentinel nodes carry no cell")
    }

    fn bind_handle(&mut self, h: Handle, item: ItemId) {
        if let Some(prev) = self.u.registry.insert(h, item) {
            // Laggards of a phase re-derive the same binding; anything else
            // is an agreement bug.
            assert_eq!(prev, item, "handle {h} rebound to a different cell");
        }
    }

    fn resolve_handle(&mut self, h: Handle) -> Option<ItemId> {
        self.u.registry.get(&h).map(|r| *r)
    }

    fn marker(&mut self, m: Marker) {
        if let Marker::Published(trace) = m {
            self.u.phases.lock().unwrap().push(trace);
        }
    }
}
