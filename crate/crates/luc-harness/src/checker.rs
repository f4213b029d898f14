//! Linearizability checking for complete recorded histories.
//!
//! [`check_linearizable`] searches for a witness: a total order of the
//! history's operations that respects real time (an operation that responded
//! before another was invoked comes first) and replays correctly against the
//! sequential reference object. At each search node the candidates are the
//! unlinearized operations whose invocation precedes every unlinearized
//! response; visited (done-set, state-fingerprint) pairs are memoized. The
//! search is exact up to 64-bit fingerprint collisions, and bounded by a
//! node budget so adversarial histories report exhaustion instead of
//! spinning.
//!
//! [`verify_witness`] checks a *proposed* linearization in linear time; it
//! scales to histories far beyond search reach and is how stress runs
//! validate the runtime's own agreement order.

use crate::history::{well_formed, HistoryEvent};
use luc::objmodel::ReferenceObject;
use luc::{ProcId, Value};
use std::collections::{HashMap, HashSet, VecDeque};

/// One paired operation: invocation and response event indices plus payload.
#[derive(Clone, Debug)]
pub struct OpSpan {
    pub pid: ProcId,
    pub opcode: String,
    pub args: Vec<Value>,
    pub result: Value,
    pub inv: usize,
    pub res: usize,
}

/// Pair a complete well-formed history into operations, in invocation order.
pub fn pair_operations(history: &[HistoryEvent]) -> Result<Vec<OpSpan>, String> {
    well_formed(history)?;
    let mut open: HashMap<ProcId, usize> = HashMap::new();
    let mut ops: Vec<OpSpan> = Vec::new();
    for (i, ev) in history.iter().enumerate() {
        match ev {
            HistoryEvent::Inv { pid, opcode, args } => {
                open.insert(*pid, ops.len());
                ops.push(OpSpan {
                    pid: *pid,
                    opcode: opcode.clone(),
                    args: args.clone(),
                    result: Value::Nil,
                    inv: i,
                    res: usize::MAX,
                });
            }
            HistoryEvent::Res { pid, value } => {
                let k = open.remove(pid).expect("checked by well_formed");
                ops[k].result = *value;
                ops[k].res = i;
            }
        }
    }
    Ok(ops)
}

#[derive(Clone, Debug)]
pub enum CheckOutcome {
    /// Operation indices (into [`pair_operations`] order) forming a valid
    /// linearization.
    Linearizable { witness: Vec<usize> },
    /// No witness exists. The indices are the shortest response-ordered
    /// prefix of the history that is already non-linearizable.
    NotLinearizable { violating_prefix: Vec<usize> },
    /// The node budget ran out before the search settled.
    SearchExhausted { nodes: usize },
}

/// Largest history the search accepts (the done-set is a 128-bit mask).
pub const MAX_SEARCH_OPS: usize = 128;

enum Found {
    Yes,
    No,
    Out,
}

struct Search<'a> {
    ops: Vec<(usize, &'a OpSpan)>,
    full: u128,
    memo: HashSet<(u128, u64)>,
    nodes: usize,
    budget: usize,
}

impl<'a> Search<'a> {
    fn over(ops: Vec<(usize, &'a OpSpan)>, budget: usize) -> Search<'a> {
        let full = if ops.is_empty() {
            0
        } else {
            (u128::MAX >> (128 - ops.len())) & u128::MAX
        };
        Search {
            ops,
            full,
            memo: HashSet::new(),
            nodes: 0,
            budget,
        }
    }

    fn dfs(&mut self, done: u128, state: &dyn ReferenceObject, witness: &mut Vec<usize>) -> Found {
        if done == self.full {
            return Found::Yes;
        }
        if self.nodes >= self.budget {
            return Found::Out;
        }
        self.nodes += 1;
        if !self.memo.insert((done, state.fingerprint())) {
            return Found::No;
        }
        let min_res = self
            .ops
            .iter()
            .enumerate()
            .filter(|(i, _)| done & (1 << i) == 0)
            .map(|(_, (_, o))| o.res)
            .min()
            .expect("not all done");
        for i in 0..self.ops.len() {
            if done & (1 << i) != 0 {
                continue;
            }
            let (orig, op) = self.ops[i];
            if op.inv > min_res {
                continue;
            }
            let mut next = state.boxed_clone();
            if next.apply(&op.opcode, &op.args) != op.result {
                continue;
            }
            witness.push(orig);
            match self.dfs(done | (1 << i), next.as_ref(), witness) {
                Found::Yes => return Found::Yes,
                Found::Out => return Found::Out,
                Found::No => {
                    witness.pop();
                }
            }
        }
        Found::No
    }
}

/// Exhaustive (budget-bounded) linearizability check of a complete history
/// against a fresh reference object.
pub fn check_linearizable(
    history: &[HistoryEvent],
    initial: Box<dyn ReferenceObject>,
    budget: usize,
) -> Result<CheckOutcome, String> {
    let ops = pair_operations(history)?;
    if ops.len() > MAX_SEARCH_OPS {
        return Err(format!(
            "history has {} operations; the search handles at most {MAX_SEARCH_OPS} \
             (use witness verification for larger runs)",
            ops.len()
        ));
    }

    let indexed: Vec<(usize, &OpSpan)> = ops.iter().enumerate().collect();
    let mut search = Search::over(indexed, budget);
    let mut witness = Vec::new();
    match search.dfs(0, initial.boxed_clone().as_ref(), &mut witness) {
        Found::Yes => return Ok(CheckOutcome::Linearizable { witness }),
        Found::Out => {
            return Ok(CheckOutcome::SearchExhausted {
                nodes: search.nodes,
            })
        }
        Found::No => {}
    }

    // Shrink: find the shortest response-ordered prefix that already fails.
    // Non-linearizability is monotone under adding operations, so scan up.
    let mut by_res: Vec<usize> = (0..ops.len()).collect();
    by_res.sort_by_key(|&i| ops[i].res);
    let mut nodes_used = search.nodes;
    for k in 1..=ops.len() {
        let subset: Vec<(usize, &OpSpan)> = by_res[..k].iter().map(|&i| (i, &ops[i])).collect();
        let mut sub = Search::over(subset, budget.saturating_sub(nodes_used).max(1));
        let mut w = Vec::new();
        match sub.dfs(0, initial.boxed_clone().as_ref(), &mut w) {
            Found::Yes => {
                nodes_used += sub.nodes;
            }
            Found::No => {
                return Ok(CheckOutcome::NotLinearizable {
                    violating_prefix: by_res[..k].to_vec(),
                })
            }
            Found::Out => {
                // Shrinking ran out of budget; report the full set.
                return Ok(CheckOutcome::NotLinearizable {
                    violating_prefix: by_res,
                });
            }
        }
    }
    unreachable!("the full set failed, so some prefix must fail");
}

/// Verify a proposed linearization given as a pid sequence: occurrence `j`
/// of `pid` means that process's `j`-th operation (program order). Checks
/// that the order covers the history exactly, replays to the recorded
/// results, and respects real-time precedence. Linear in history size.
pub fn verify_witness(
    history: &[HistoryEvent],
    initial: Box<dyn ReferenceObject>,
    pid_order: &[ProcId],
) -> Result<(), String> {
    let ops = pair_operations(history)?;
    if pid_order.len() != ops.len() {
        return Err(format!(
            "witness lists {} operations, history has {}",
            pid_order.len(),
            ops.len()
        ));
    }
    let mut program: HashMap<ProcId, VecDeque<usize>> = HashMap::new();
    for (i, op) in ops.iter().enumerate() {
        program.entry(op.pid).or_default().push_back(i);
    }
    let mut order_ids: Vec<usize> = Vec::with_capacity(ops.len());
    let mut pos_of: Vec<usize> = vec![usize::MAX; ops.len()];
    for (pos, pid) in pid_order.iter().enumerate() {
        let id = program
            .get_mut(pid)
            .and_then(VecDeque::pop_front)
            .ok_or_else(|| format!("witness applies pid {pid} more often than it operated"))?;
        pos_of[id] = pos;
        order_ids.push(id);
    }

    let mut state = initial;
    for &id in &order_ids {
        let op = &ops[id];
        let got = state.apply(&op.opcode, &op.args);
        if got != op.result {
            return Err(format!(
                "replay of pid {} op at events {}..{} produced {got}, history recorded {}",
                op.pid, op.inv, op.res, op.result
            ));
        }
    }

    // Real time: whenever an operation was invoked, everything that had
    // already responded must sit earlier in the witness.
    let mut responded_max: Option<usize> = None;
    let mut open: HashMap<ProcId, usize> = HashMap::new();
    let mut per_pid_iter: HashMap<ProcId, VecDeque<usize>> = HashMap::new();
    for (i, op) in ops.iter().enumerate() {
        per_pid_iter.entry(op.pid).or_default().push_back(i);
    }
    for ev in history {
        match ev {
            HistoryEvent::Inv { pid, .. } => {
                let id = per_pid_iter
                    .get_mut(pid)
                    .and_then(VecDeque::pop_front)
                    .expect("paired above");
                open.insert(*pid, id);
                if let Some(m) = responded_max {
                    if pos_of[id] < m {
                        return Err(format!(
                            "witness reorders pid {pid}'s operation before one that \
                             responded earlier in real time",
                        ));
                    }
                }
            }
            HistoryEvent::Res { pid, .. } => {
                let id = open.remove(pid).expect("well-formed");
                responded_max = Some(responded_max.map_or(pos_of[id], |m| m.max(pos_of[id])));
            }
        }
    }
    Ok(())
}
