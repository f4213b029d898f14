//! Deterministic single-threaded replica of the runtime.
//!
//! [`SimWorld`] mirrors a universe's shared memory as plain data, and
//! [`SimMediator`] feeds one process's algorithm from that world one shared
//! access per scheduler step. A step re-runs the operation from scratch:
//! accesses already in the operation's log are replayed (their recorded
//! values are returned, the world is untouched), then exactly one fresh
//! shared access executes — plus any trailing local effects — before the
//! process suspends again. Re-execution is sound because the algorithm is
//! deterministic given the values its shared accesses returned.
//!
//! [`ScheduleRun`] drives scripted processes under an explicit schedule,
//! recording a global access trace, an invocation/response history, and all
//! published phases. [`explore`] checks many schedules against the probes,
//! the phase-replay oracle, and the linearizability checker: a bounded
//! depth-first enumeration (exhaustive when the budget allows), then
//! randomized schedules whose context switches land on interesting access
//! kinds (a preemption heuristic that finds races needing long uninterrupted
//! stretches, which uniform coin-flip schedules essentially never produce).

use crate::checker::{self, CheckOutcome};
use crate::history::HistoryEvent;
use crate::oracle;
use crate::probes;
use luc::llsc::Snapshot;
use luc::mediator::{ItemId, Layout, Marker, Mediator, NodeId};
use luc::objmodel::{RequestDescriptor, SequentialObject, SetupContext};
use luc::state::{ItemRecord, StateRecord};
use luc::{Ctl, Handle, Interrupt, PhaseTrace, ProcId, Process, Sabotage, Value, Var};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::panic::{self, AssertUnwindSafe};
use std::sync::{Arc, Mutex};

/// One recorded shared access or local effect, as both replay log entry and
/// trace event.
#[derive(Clone, Debug)]
pub enum SimAccess {
    LlState { tag: u64, state: Arc<StateRecord> },
    VlState { tag: u64, ok: bool },
    ScState { tag: u64, ok: bool, new: Arc<StateRecord> },
    ReadState { state: Arc<StateRecord> },
    AnnounceStore,
    AnnounceRead { q: ProcId, req: Arc<RequestDescriptor> },
    FadToggle { word: usize, delta: u64 },
    ReadToggleWord { word: usize, value: u64 },
    LlItem { item: ItemId, tag: u64, rec: ItemRecord },
    ScItem {
        item: ItemId,
        tag: u64,
        ok: bool,
        /// The cell's stamp immediately before this store-conditional.
        prior_seq: u64,
        new: ItemRecord,
        /// The agreement record's phase counter at the moment of the store.
        s_seq_at: u64,
    },
    CasLink { node: NodeId, new: NodeId, ok: bool },
    ReadLink { node: NodeId, next: Option<NodeId> },
    AllocItem { id: ItemId },
    AllocNode { id: NodeId },
    ResolveHandle { h: Handle, item: Option<ItemId> },
    Marker(Marker),
}

impl SimAccess {
    /// True for accesses that touch shared memory — the scheduler's yield
    /// points. Local effects and markers piggyback on the surrounding step.
    pub fn is_shared(&self) -> bool {
        !matches!(
            self,
            SimAccess::AllocItem { .. }
                | SimAccess::AllocNode { .. }
                | SimAccess::ResolveHandle { .. }
                | SimAccess::Marker(_)
        )
    }

    pub fn kind(&self) -> &'static str {
        match self {
            SimAccess::LlState { .. } => "ll-state",
            SimAccess::VlState { .. } => "vl-state",
            SimAccess::ScState { .. } => "sc-state",
            SimAccess::ReadState { .. } => "read-state",
            SimAccess::AnnounceStore => "announce-store",
            SimAccess::AnnounceRead { .. } => "announce-read",
            SimAccess::FadToggle { .. } => "fad-toggle",
            SimAccess::ReadToggleWord { .. } => "read-toggle",
            SimAccess::LlItem { .. } => "ll-item",
            SimAccess::ScItem { .. } => "sc-item",
            SimAccess::CasLink { .. } => "cas-link",
            SimAccess::ReadLink { .. } => "read-link",
            SimAccess::AllocItem { .. } => "alloc-item",
            SimAccess::AllocNode { .. } => "alloc-node",
            SimAccess::ResolveHandle { .. } => "resolve-handle",
            SimAccess::Marker(_) => "marker",
        }
    }
}

/// One global trace entry: which process, which of its operations, what it
/// did.
#[derive(Clone, Debug)]
pub struct TraceEvent {
    pub pid: ProcId,
    pub op_index: usize,
    pub access: SimAccess,
}

/// The simulated world: plain-data mirror of a universe's shared memory.
#[derive(Clone)]
pub struct SimWorld {
    pub layout: Layout,
    pub s_tag: u64,
    pub s: Arc<StateRecord>,
    pub toggles: Vec<u64>,
    pub announce: Vec<Option<Arc<RequestDescriptor>>>,
    /// Item cells as (tag, record); indices are [`ItemId`]s.
    pub items: Vec<(u64, ItemRecord)>,
    /// List nodes as (payload cell, next link); indices are [`NodeId`]s.
    pub nodes: Vec<(Option<ItemId>, Option<NodeId>)>,
    pub registry: HashMap<Handle, ItemId>,
    pub phases: Vec<PhaseTrace>,
}

impl SimWorld {
    pub fn new(n: usize, object: &dyn SequentialObject) -> SimWorld {
        let mut layout = Layout::new(n, true);
        let mut items = Vec::new();
        for name in object.roots() {
            let id = ItemId(items.len() as u32);
            items.push((0u64, ItemRecord::fresh()));
            layout.add_root(name, id);
        }
        let mut w = SimWorld {
            toggles: vec![0; layout.toggle_words],
            announce: vec![None; n],
            layout,
            s_tag: 0,
            s: Arc::new(StateRecord::initial(n, NodeId(0))),
            items,
            nodes: Vec::new(),
            registry: HashMap::new(),
            phases: Vec::new(),
        };
        let mut setup = SimSetup { world: &mut w, ordinal: 0 };
        object.setup(&mut setup);
        let sentinel = NodeId(w.nodes.len() as u32);
        w.nodes.push((None, None));
        w.s = Arc::new(StateRecord::initial(n, sentinel));
        w
    }

    fn item_cell(&mut self, var: Var) -> &mut (u64, ItemRecord) {
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
        &mut self.items[id.0 as usize]
    }
}

/// Setup-time store over the simulated world; mirrors the real universe's
/// construction (handles minted in phase 0, stores bump the cell tag).
struct SimSetup<'w> {
    world: &'w mut SimWorld,
    ordinal: u32,
}

impl SetupContext for SimSetup<'_> {
    fn alloc(&mut self) -> Handle {
        let id = ItemId(self.world.items.len() as u32);
        self.world.items.push((0, ItemRecord::fresh()));
        self.ordinal += 1;
        let h = Handle::new(0, self.ordinal);
        self.world.registry.insert(h, id);
        h
    }

    fn write(&mut self, var: Var, v: Value) {
        let cell = self.world.item_cell(var);
        cell.0 += 1;
        cell.1 = ItemRecord::initial(v);
    }
}

/// Mediator for one step of one process: replays the operation's log, then
/// executes at most one fresh shared access.
struct SimMediator<'a> {
    world: &'a mut SimWorld,
    trace: &'a mut Vec<TraceEvent>,
    log: &'a mut Vec<SimAccess>,
    pos: usize,
    fuel: u32,
    pid: ProcId,
    op_index: usize,
}

impl SimMediator<'_> {
    /// A shared access: replayed if logged, else executed under fuel.
    fn next(&mut self, exec: impl FnOnce(&mut SimWorld, ProcId) -> SimAccess) -> Ctl<SimAccess> {
        if self.pos < self.log.len() {
            let rec = self.log[self.pos].clone();
            self.pos += 1;
            return Ok(rec);
        }
        if self.fuel == 0 {
            return Err(Interrupt::Pause);
        }
        self.fuel -= 1;
        let rec = exec(self.world, self.pid);
        self.log.push(rec.clone());
        self.pos += 1;
        self.trace.push(TraceEvent {
            pid: self.pid,
            op_index: self.op_index,
            access: rec.clone(),
        });
        Ok(rec)
    }

    /// A local effect or marker: replayed if logged, executed otherwise.
    /// Never consumes fuel and never pauses, so it completes within whatever
    /// step reaches it.
    fn next_local(&mut self, exec: impl FnOnce(&mut SimWorld) -> SimAccess) -> SimAccess {
        if self.pos < self.log.len() {
            let rec = self.log[self.pos].clone();
            self.pos += 1;
            return rec;
        }
        let rec = exec(self.world);
        self.log.push(rec.clone());
        self.pos += 1;
        self.trace.push(TraceEvent {
            pid: self.pid,
            op_index: self.op_index,
            access: rec.clone(),
        });
        rec
    }
}

macro_rules! expect_access {
    ($rec:expr, $pat:pat => $out:expr) => {
        match $rec {
            $pat => $out,
            other => panic!("replay desync: unexpected {:?}", other),
        }
    };
}

impl Mediator for SimMediator<'_> {
    fn pid(&self) -> ProcId {
        self.pid
    }

    fn layout(&self) -> &Layout {
        &self.world.layout
    }

    fn ll_state(&mut self) -> Ctl<Snapshot<Arc<StateRecord>>> {
        let rec = self.next(|w, _| SimAccess::LlState {
            tag: w.s_tag,
            state: Arc::clone(&w.s),
        })?;
        Ok(expect_access!(rec, SimAccess::LlState { tag, state } => Snapshot { payload: state, tag }))
    }

    fn vl_state(&mut self, tag: u64) -> Ctl<bool> {
        let rec = self.next(move |w, _| SimAccess::VlState {
            tag,
            ok: w.s_tag == tag,
        })?;
        Ok(expect_access!(rec, SimAccess::VlState { ok, .. } => ok))
    }

    fn sc_state(&mut self, tag: u64, new: StateRecord) -> Ctl<bool> {
        let rec = self.next(move |w, _| {
            let ok = w.s_tag == tag;
            let new = Arc::new(new);
            if ok {
                w.s_tag += 1;
                w.s = Arc::clone(&new);
            }
            SimAccess::ScState { tag, ok, new }
        })?;
        Ok(expect_access!(rec, SimAccess::ScState { ok, .. } => ok))
    }

    fn read_state(&mut self) -> Ctl<Arc<StateRecord>> {
        let rec = self.next(|w, _| SimAccess::ReadState {
            state: Arc::clone(&w.s),
        })?;
        Ok(expect_access!(rec, SimAccess::ReadState { state } => state))
    }

    fn announce_store(&mut self, req: Arc<RequestDescriptor>) -> Ctl<()> {
        let rec = self.next(move |w, pid| {
            w.announce[pid] = Some(req);
            SimAccess::AnnounceStore
        })?;
        expect_access!(rec, SimAccess::AnnounceStore => ());
        Ok(())
    }

    fn announce_read(&mut self, q: ProcId) -> Ctl<Arc<RequestDescriptor>> {
        let rec = self.next(move |w, _| SimAccess::AnnounceRead {
            q,
            req: w.announce[q]
                .clone()
                .expect("a process with a flipped toggle bit has announced"),
        })?;
        Ok(expect_access!(rec, SimAccess::AnnounceRead { req, .. } => req))
    }

    fn fad_toggle(&mut self, word: usize, delta: u64) -> Ctl<()> {
        let rec = self.next(move |w, _| {
            w.toggles[word] = w.toggles[word].wrapping_add(delta);
            SimAccess::FadToggle { word, delta }
        })?;
        expect_access!(rec, SimAccess::FadToggle { .. } => ());
        Ok(())
    }

    fn read_toggle_word(&mut self, word: usize) -> Ctl<u64> {
        let rec = self.next(move |w, _| SimAccess::ReadToggleWord {
            word,
            value: w.toggles[word],
        })?;
        Ok(expect_access!(rec, SimAccess::ReadToggleWord { value, .. } => value))
    }

    fn ll_item(&mut self, item: ItemId) -> Ctl<Snapshot<ItemRecord>> {
        let rec = self.next(move |w, _| {
            let (tag, rec) = w.items[item.0 as usize];
            SimAccess::LlItem { item, tag, rec }
        })?;
        Ok(expect_access!(rec, SimAccess::LlItem { tag, rec, .. } => Snapshot { payload: rec, tag }))
    }

    fn sc_item(&mut self, item: ItemId, tag: u64, new: ItemRecord) -> Ctl<bool> {
        let rec = self.next(move |w, _| {
            let s_seq_at = w.s.seq;
            let cell = &mut w.items[item.0 as usize];
            let prior_seq = cell.1.seq;
            let ok = cell.0 == tag;
            if ok {
                cell.0 += 1;
                cell.1 = new;
            }
            SimAccess::ScItem {
                item,
                tag,
                ok,
                prior_seq,
                new,
                s_seq_at,
            }
        })?;
        Ok(expect_access!(rec, SimAccess::ScItem { ok, .. } => ok))
    }

    fn cas_link(&mut self, node: NodeId, new: NodeId) -> Ctl<bool> {
        let rec = self.next(move |w, _| {
            let slot = &mut w.nodes[node.0 as usize];
            let ok = slot.1.is_none();
            if ok {
                slot.1 = Some(new);
            }
            SimAccess::CasLink { node, new, ok }
        })?;
        Ok(expect_access!(rec, SimAccess::CasLink { ok, .. } => ok))
    }

    fn read_link(&mut self, node: NodeId) -> Ctl<Option<NodeId>> {
        let rec = self.next(move |w, _| SimAccess::ReadLink {
            node,
            next: w.nodes[node.0 as usize].1,
        })?;
        Ok(expect_access!(rec, SimAccess::ReadLink { next, .. } => next))
    }

    fn alloc_item(&mut self) -> ItemId {
        let rec = self.next_local(|w| {
            let id = ItemId(w.items.len() as u32);
            w.items.push((0, ItemRecord::fresh()));
            SimAccess::AllocItem { id }
        });
        expect_access!(rec, SimAccess::AllocItem { id } => id)
    }

    fn alloc_node(&mut self, item: Option<ItemId>) -> NodeId {
        let rec = self.next_local(|w| {
            let id = NodeId(w.nodes.len() as u32);
            w.nodes.push((item, None));
            SimAccess::AllocNode { id }
        });
        expect_access!(rec, SimAccess::AllocNode { id } => id)
    }

    fn node_item(&self, node: NodeId) -> ItemId {
        // Pure read of an immutable field; re-executed on replay.
        self.world.nodes[node.0 as usize]
            .0
            .expect("sentinel nodes carry no cell")
    }

    fn bind_handle(&mut self, h: Handle, item: ItemId) {
        // Idempotent; re-executed on replay, and peers rebinding a handle
        // must agree on the cell.
        if let Some(prev) = self.world.registry.insert(h, item) {
            assert_eq!(prev, item, "handle {h} rebound to a different cell");
        }
    }

    fn resolve_handle(&mut self, h: Handle) -> Option<ItemId> {
        // Logged so replay returns what the original execution saw, even if
        // other processes have bound more handles since.
        let rec = self.next_local(|w| SimAccess::ResolveHandle {
            h,
            item: w.registry.get(&h).copied(),
        });
        expect_access!(rec, SimAccess::ResolveHandle { item, .. } => item)
    }

    fn marker(&mut self, m: Marker) {
        self.next_local(|w| {
            if let Marker::Published(t) = &m {
                w.phases.push(t.clone());
            }
            SimAccess::Marker(m)
        });
    }
}

/// One scripted process within a schedule run.
#[derive(Clone)]
pub struct ProcRun {
    pub script: Vec<Arc<RequestDescriptor>>,
    pub op_index: usize,
    pub log: Vec<SimAccess>,
    pub results: Vec<Value>,
}

impl ProcRun {
    pub fn done(&self) -> bool {
        self.op_index >= self.script.len()
    }
}

pub enum StepOutcome {
    /// The process executed one shared access and suspended.
    Paused,
    /// The process's current operation finished with this value.
    Completed(Value),
    /// The runtime surfaced an object fault — always a bug under test.
    Fault(String),
}

/// One in-progress execution under an explicit schedule. Cloning forks the
/// whole execution, which is how the depth-first explorer branches.
#[derive(Clone)]
pub struct ScheduleRun {
    pub world: SimWorld,
    pub object: Arc<dyn SequentialObject>,
    pub sabotage: Sabotage,
    pub runs: Vec<ProcRun>,
    pub trace: Vec<TraceEvent>,
    pub history: Vec<HistoryEvent>,
    pub schedule: Vec<ProcId>,
    pub steps: usize,
}

impl ScheduleRun {
    pub fn steppable(&self) -> Vec<ProcId> {
        (0..self.runs.len())
            .filter(|&p| !self.runs[p].done())
            .collect()
    }

    pub fn is_quiescent(&self) -> bool {
        self.runs.iter().all(ProcRun::done)
    }

    /// Advance process `pid` by one shared access.
    pub fn step(&mut self, pid: ProcId) -> StepOutcome {
        self.steps += 1;
        self.schedule.push(pid);
        let run = &mut self.runs[pid];
        assert!(!run.done(), "scheduled a finished process");
        let op_index = run.op_index;
        let req = Arc::clone(&run.script[op_index]);
        if run.log.is_empty() {
            self.history.push(HistoryEvent::Inv {
                pid,
                opcode: req.opcode.to_string(),
                args: req.args.clone(),
            });
        }
        let med = SimMediator {
            world: &mut self.world,
            trace: &mut self.trace,
            log: &mut run.log,
            pos: 0,
            fuel: 1,
            pid,
            op_index,
        };
        let mut proc = Process::new(med, Arc::clone(&self.object), self.sabotage);
        match proc.apply_nth(req, op_index as u64) {
            Ok(v) => {
                let run = &mut self.runs[pid];
                run.log.clear();
                run.op_index += 1;
                run.results.push(v);
                self.history.push(HistoryEvent::Res { pid, value: v });
                StepOutcome::Completed(v)
            }
            Err(Interrupt::Pause) => StepOutcome::Paused,
            Err(Interrupt::Obsolete) => {
                StepOutcome::Fault("obsolete escaped the attempt loop".into())
            }
            Err(Interrupt::Fault(f)) => StepOutcome::Fault(f.to_string()),
        }
    }
}

/// A workload for the simulator: the object and one op script per process.
pub struct SimConfig {
    pub object: Arc<dyn SequentialObject>,
    pub scripts: Vec<Vec<Arc<RequestDescriptor>>>,
    pub sabotage: Sabotage,
}

impl SimConfig {
    pub fn new(
        object: Arc<dyn SequentialObject>,
        scripts: Vec<Vec<(&'static str, Vec<Value>)>>,
    ) -> SimConfig {
        let scripts = scripts
            .into_iter()
            .enumerate()
            .map(|(pid, ops)| {
                ops.into_iter()
                    .map(|(op, args)| Arc::new(RequestDescriptor::new(op, args, pid)))
                    .collect()
            })
            .collect();
        SimConfig {
            object,
            scripts,
            sabotage: Sabotage::default(),
        }
    }

    pub fn with_sabotage(mut self, s: Sabotage) -> SimConfig {
        self.sabotage = s;
        self
    }

    pub fn n(&self) -> usize {
        self.scripts.len()
    }

    pub fn total_ops(&self) -> usize {
        self.scripts.iter().map(Vec::len).sum()
    }

    pub fn start(&self) -> ScheduleRun {
        ScheduleRun {
            world: SimWorld::new(self.n(), self.object.as_ref()),
            object: Arc::clone(&self.object),
            sabotage: self.sabotage,
            runs: self
                .scripts
                .iter()
                .map(|script| ProcRun {
                    script: script.clone(),
                    op_index: 0,
                    log: Vec::new(),
                    results: Vec::new(),
                })
                .collect(),
            trace: Vec::new(),
            history: Vec::new(),
            schedule: Vec::new(),
            steps: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExploreOptions {
    /// Total schedules to check (depth-first share plus random share).
    pub budget: usize,
    pub seed: u64,
    /// Wait-freedom guard: a schedule exceeding `total_ops * cap` steps is a
    /// violation.
    pub step_cap_per_op: usize,
    /// Stop exploring once this many violations are collected.
    pub max_violations: usize,
    /// Node budget for the per-schedule linearizability search.
    pub lin_budget: usize,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions {
            budget: 1_000_000,
            seed: 0,
            step_cap_per_op: 2000,
            max_violations: 8,
            lin_budget: 200_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Violation {
    pub probe: String,
    pub message: String,
    pub schedule: Vec<ProcId>,
}

#[derive(Clone, Debug)]
pub struct ExploreReport {
    pub schedules_checked: usize,
    pub dfs_schedules: usize,
    pub random_schedules: usize,
    /// True when the depth-first pass covered every interleaving, making the
    /// random pass unnecessary.
    pub dfs_exhausted: bool,
    pub step_cap: usize,
    pub violations: Vec<Violation>,
}

impl ExploreReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    /// Structured text: one line per probe with the number of schedules
    /// checked, then counterexample details for any failures.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "schedules checked: {} (dfs {}{}, random {})",
            self.schedules_checked,
            self.dfs_schedules,
            if self.dfs_exhausted { ", exhaustive" } else { "" },
            self.random_schedules,
        );
        let mut names: Vec<&str> = probes::STRUCTURAL_PROBES.to_vec();
        names.extend(["phase-oracle", "linearizable", "execution"]);
        for name in names {
            let failures: Vec<&Violation> =
                self.violations.iter().filter(|v| v.probe == name).collect();
            let verdict = if failures.is_empty() { "pass" } else { "FAIL" };
            let _ = writeln!(
                out,
                "probe {name:<24} schedules={} {verdict}",
                self.schedules_checked
            );
            if let Some(v) = failures.first() {
                let _ = writeln!(out, "  counterexample: {}", v.message);
                let _ = writeln!(out, "  schedule: {}", fmt_schedule(&v.schedule));
            }
        }
        out
    }
}

/// Render a schedule as run-length encoded pid bursts, e.g. `0*12 1*3 0*40`.
pub fn fmt_schedule(schedule: &[ProcId]) -> String {
    let mut out = String::new();
    let mut i = 0;
    while i < schedule.len() {
        let pid = schedule[i];
        let mut j = i;
        while j < schedule.len() && schedule[j] == pid {
            j += 1;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        let _ = write!(out, "{pid}*{}", j - i);
        i = j;
    }
    out
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = p.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = p.downcast_ref::<String>() {
        s.clone()
    } else {
        "opaque panic payload".to_string()
    }
}

fn catch_step(run: &mut ScheduleRun, pid: ProcId) -> Result<StepOutcome, String> {
    panic::catch_unwind(AssertUnwindSafe(|| run.step(pid))).map_err(panic_message)
}

/// Run every enabled check over one completed schedule.
pub fn check_schedule(run: &ScheduleRun, cfg: &SimConfig, lin_budget: usize) -> Vec<Violation> {
    let mut out: Vec<Violation> = probes::run_probes(run, &cfg.scripts)
        .into_iter()
        .map(|(probe, message)| Violation {
            probe: probe.to_string(),
            message,
            schedule: run.schedule.clone(),
        })
        .collect();

    if let Err(e) = oracle::replay_phases(&run.world.phases, cfg.object.reference()) {
        out.push(Violation {
            probe: "phase-oracle".into(),
            message: e,
            schedule: run.schedule.clone(),
        });
    }

    match checker::check_linearizable(&run.history, cfg.object.reference(), lin_budget) {
        Ok(CheckOutcome::Linearizable { .. }) => {}
        Ok(CheckOutcome::NotLinearizable { violating_prefix }) => out.push(Violation {
            probe: "linearizable".into(),
            message: format!(
                "no witness order exists; minimal violating prefix has {} operations",
                violating_prefix.len()
            ),
            schedule: run.schedule.clone(),
        }),
        Ok(CheckOutcome::SearchExhausted { nodes }) => out.push(Violation {
            probe: "linearizable".into(),
            message: format!("search exhausted after {nodes} nodes"),
            schedule: run.schedule.clone(),
        }),
        Err(e) => out.push(Violation {
            probe: "linearizable".into(),
            message: e,
            schedule: run.schedule.clone(),
        }),
    }
    out
}

struct DfsState<'a> {
    cfg: &'a SimConfig,
    opts: &'a ExploreOptions,
    cap: usize,
    budget: usize,
    checked: usize,
    truncated: bool,
    violations: Vec<Violation>,
}

fn dfs(run: &ScheduleRun, st: &mut DfsState) {
    if st.violations.len() >= st.opts.max_violations {
        st.truncated = true;
        return;
    }
    let live = run.steppable();
    if live.is_empty() {
        st.budget -= 1;
        st.checked += 1;
        st.violations
            .extend(check_schedule(run, st.cfg, st.opts.lin_budget));
        return;
    }
    for pid in live {
        if st.budget == 0 || st.violations.len() >= st.opts.max_violations {
            st.truncated = true;
            return;
        }
        let mut next = run.clone();
        let stopper = |probe: &str, message: String, next: &ScheduleRun, st: &mut DfsState| {
            st.budget -= 1;
            st.checked += 1;
            st.violations.push(Violation {
                probe: probe.to_string(),
                message,
                schedule: next.schedule.clone(),
            });
        };
        match catch_step(&mut next, pid) {
            Err(msg) => stopper("execution", format!("panic: {msg}"), &next, st),
            Ok(StepOutcome::Fault(msg)) => {
                stopper("execution", format!("object fault: {msg}"), &next, st)
            }
            Ok(_) if next.steps > st.cap => stopper(
                "execution",
                format!("wait-freedom step cap {} exceeded", st.cap),
                &next,
                st,
            ),
            Ok(_) => dfs(&next, st),
        }
    }
}

/// A context-switch rule for randomized schedules: run the chosen process
/// either for a burst of steps or until just after it performs the n-th
/// occurrence of a given access kind.
enum StopRule {
    Count(usize),
    AfterKind { kind: &'static str, occur: usize },
}

const SWITCH_KINDS: [&'static str; 8] = [
    "ll-state",
    "sc-state",
    "vl-state",
    "ll-item",
    "sc-item",
    "cas-link",
    "announce-read",
    "fad-toggle",
];

impl StopRule {
    fn random(rng: &mut ChaCha8Rng) -> StopRule {
        if rng.random_bool(0.5) {
            StopRule::Count(1 << rng.random_range(0..8))
        } else {
            StopRule::AfterKind {
                kind: SWITCH_KINDS[rng.random_range(0..SWITCH_KINDS.len())],
                occur: rng.random_range(1..=2),
            }
        }
    }
}

fn run_random_schedule(
    cfg: &SimConfig,
    cap: usize,
    rng: &mut ChaCha8Rng,
) -> Result<ScheduleRun, Violation> {
    let mut run = cfg.start();
    let fail = |probe: &str, message: String, run: &ScheduleRun| Violation {
        probe: probe.to_string(),
        message,
        schedule: run.schedule.clone(),
    };
    loop {
        let live = run.steppable();
        if live.is_empty() {
            return Ok(run);
        }
        let pid = live[rng.random_range(0..live.len())];
        let rule = StopRule::random(rng);
        let mut seen = 0usize;
        let mut burst = 0usize;
        while !run.runs[pid].done() {
            let trace_base = run.trace.len();
            match catch_step(&mut run, pid) {
                Err(msg) => return Err(fail("execution", format!("panic: {msg}"), &run)),
                Ok(StepOutcome::Fault(msg)) => {
                    return Err(fail("execution", format!("object fault: {msg}"), &run))
                }
                Ok(_) => {}
            }
            if run.steps > cap {
                return Err(fail(
                    "execution",
                    format!("wait-freedom step cap {cap} exceeded"),
                    &run,
                ));
            }
            burst += 1;
            match rule {
                StopRule::Count(k) => {
                    if burst >= k {
                        break;
                    }
                }
                StopRule::AfterKind { kind, occur } => {
                    seen += run.trace[trace_base..]
                        .iter()
                        .filter(|ev| ev.access.kind() == kind)
                        .count();
                    if seen >= occur {
                        break;
                    }
                }
            }
        }
    }
}

/// Serializes panic-hook swaps across concurrently exploring tests.
static HOOK_LOCK: Mutex<()> = Mutex::new(());

/// Silences the default panic printer while negative controls run; panics
/// are expected there and caught per schedule.
struct QuietPanics<'a> {
    _serial: std::sync::MutexGuard<'a, ()>,
    prev: Option<Box<dyn Fn(&panic::PanicHookInfo<'_>) + Sync + Send + 'static>>,
}

impl QuietPanics<'_> {
    fn engage() -> QuietPanics<'static> {
        let serial = HOOK_LOCK.lock().unwrap_or_else(|p| p.into_inner());
        let prev = panic::take_hook();
        panic::set_hook(Box::new(|_| {}));
        QuietPanics {
            _serial: serial,
            prev: Some(prev),
        }
    }
}

impl Drop for QuietPanics<'_> {
    fn drop(&mut self) {
        if let Some(prev) = self.prev.take() {
            panic::set_hook(prev);
        }
    }
}

/// Explore interleavings of `cfg` and check every completed schedule.
///
/// The first half of the budget (capped) drives a depth-first enumeration in
/// process-id order — exhaustive for small trees, in which case the random
/// pass is skipped. The rest runs seeded random schedules built from bursts
/// and kind-boundary context switches.
pub fn explore(cfg: &SimConfig, opts: &ExploreOptions) -> ExploreReport {
    let sabotaged = cfg.sabotage.skip_flush_seq_guard || cfg.sabotage.read_current_slot;
    let _quiet = sabotaged.then(QuietPanics::engage);

    let cap = cfg.total_ops() * opts.step_cap_per_op + 64;
    let dfs_budget = (opts.budget / 2).clamp(1, 4096);

    let mut st = DfsState {
        cfg,
        opts,
        cap,
        budget: dfs_budget,
        checked: 0,
        truncated: false,
        violations: Vec::new(),
    };
    dfs(&cfg.start(), &mut st);
    let dfs_schedules = st.checked;
    let dfs_exhausted = !st.truncated;
    let mut violations = st.violations;

    let mut random_schedules = 0usize;
    if !dfs_exhausted {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let remaining = opts.budget.saturating_sub(dfs_schedules);
        for _ in 0..remaining {
            if violations.len() >= opts.max_violations {
                break;
            }
            random_schedules += 1;
            match run_random_schedule(cfg, cap, &mut rng) {
                Ok(run) => violations.extend(check_schedule(&run, cfg, opts.lin_budget)),
                Err(v) => violations.push(v),
            }
        }
    }

    ExploreReport {
        schedules_checked: dfs_schedules + random_schedules,
        dfs_schedules,
        random_schedules,
        dfs_exhausted,
        step_cap: cap,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::write_history;
    use luc::ObjectKind;

    fn counter_config(ops_per_proc: &[usize]) -> SimConfig {
        let scripts = ops_per_proc
            .iter()
            .map(|&k| vec![("inc", vec![]); k])
            .collect();
        SimConfig::new(ObjectKind::Counter.build(), scripts)
    }

    fn drive_round_robin(cfg: &SimConfig) -> ScheduleRun {
        let mut run = cfg.start();
        let mut turn = 0;
        while !run.is_quiescent() {
            let live = run.steppable();
            let pid = live[turn % live.len()];
            turn += 1;
            match run.step(pid) {
                StepOutcome::Fault(msg) => panic!("fault: {msg}"),
                _ => {}
            }
        }
        run
    }

    #[test]
    fn identical_schedules_replay_identically() {
        let cfg = counter_config(&[2, 2, 1]);
        let a = drive_round_robin(&cfg);
        let b = drive_round_robin(&cfg);
        assert_eq!(write_history(&a.history), write_history(&b.history));
        assert_eq!(a.trace.len(), b.trace.len());
        assert_eq!(a.world.phases.len(), b.world.phases.len());
        assert_eq!(a.schedule, b.schedule);
        assert_eq!(a.world.s.seq, b.world.s.seq);
    }

    #[test]
    fn round_robin_counter_is_a_permutation() {
        let cfg = counter_config(&[3, 3]);
        let run = drive_round_robin(&cfg);
        let mut got: Vec<i64> = run
            .runs
            .iter()
            .flat_map(|r| r.results.iter().map(|v| v.as_int().unwrap()))
            .collect();
        got.sort_unstable();
        assert_eq!(got, vec![0, 1, 2, 3, 4, 5]);
        assert!(check_schedule(&run, &cfg, 100_000).is_empty());
    }

    #[test]
    fn solo_process_tree_is_exhaustive() {
        let cfg = counter_config(&[2]);
        let report = explore(&cfg, &ExploreOptions { budget: 100, ..Default::default() });
        assert!(report.dfs_exhausted);
        assert_eq!(report.schedules_checked, 1, "one live process, one schedule");
        assert!(report.passed(), "{}", report.render());
    }

    #[test]
    fn two_process_exploration_is_clean() {
        let cfg = counter_config(&[1, 1]);
        let report = explore(
            &cfg,
            &ExploreOptions {
                budget: 250,
                seed: 7,
                ..Default::default()
            },
        );
        assert!(!report.dfs_exhausted, "tree is far larger than the budget");
        assert_eq!(report.schedules_checked, 250);
        assert!(report.passed(), "{}", report.render());
    }

    #[test]
    fn queue_exploration_with_mixed_script_is_clean() {
        let cfg = SimConfig::new(
            Arc::new(luc::objmodel::Queue::new(vec![1, 2])),
            vec![
                vec![("enqueue", vec![Value::Int(9)])],
                vec![("dequeue", vec![])],
            ],
        );
        let report = explore(
            &cfg,
            &ExploreOptions {
                budget: 200,
                seed: 3,
                ..Default::default()
            },
        );
        assert!(report.passed(), "{}", report.render());
    }

    #[test]
    fn schedule_formatting_is_run_length_encoded() {
        assert_eq!(fmt_schedule(&[0, 0, 0, 1, 1, 0]), "0*3 1*2 0*1");
        assert_eq!(fmt_schedule(&[]), "");
    }
}
