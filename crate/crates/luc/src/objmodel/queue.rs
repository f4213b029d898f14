//! FIFO queue: linked list of two-cell nodes with a permanent dummy node at
//! the front. `head` points at the dummy (its link cell holds the real
//! front); `tail` points at the last node. Both roots always hold handles.

use super::{
    alloc_pair, hash_one, setup_pair, want_handle, want_int, want_link, AccessContext,
    ReferenceObject, RequestDescriptor, SequentialObject, SetupContext,
};
use crate::mediator::Ctl;
use crate::value::{Value, Var};
use std::collections::VecDeque;

const HEAD: Var = Var::Named("head");
const TAIL: Var = Var::Named("tail");

pub struct Queue {
    prefill: Vec<i64>,
}

impl Queue {
    /// `prefill` is enqueued at construction, front first.
    pub fn new(prefill: Vec<i64>) -> Self {
        Queue { prefill }
    }
}

impl SequentialObject for Queue {
    fn name(&self) -> &'static str {
        "queue"
    }

    fn roots(&self) -> &'static [&'static str] {
        &["head", "tail"]
    }

    fn setup(&self, s: &mut dyn SetupContext) {
        let dummy = setup_pair(s);
        s.write(Var::Dyn(dummy), Value::Nil);
        s.write(Var::Dyn(dummy.offset(1)), Value::Nil);
        let mut last = dummy;
        for &x in &self.prefill {
            let node = setup_pair(s);
            s.write(Var::Dyn(node), Value::Int(x));
            s.write(Var::Dyn(node.offset(1)), Value::Nil);
            s.write(Var::Dyn(last.offset(1)), Value::Handle(node));
            last = node;
        }
        s.write(HEAD, Value::Handle(dummy));
        s.write(TAIL, Value::Handle(last));
    }

    fn dispatch(&self, req: &RequestDescriptor, ctx: &mut dyn AccessContext) -> Ctl<Value> {
        match req.opcode {
            "enqueue" => {
                let x = want_int(req.arg(0))?;
                let node = alloc_pair(ctx)?;
                ctx.write(Var::Dyn(node), Value::Int(x))?;
                ctx.write(Var::Dyn(node.offset(1)), Value::Nil)?;
                let tail = want_handle(ctx.read(TAIL)?)?;
                ctx.write(Var::Dyn(tail.offset(1)), Value::Handle(node))?;
                ctx.write(TAIL, Value::Handle(node))?;
                Ok(Value::Nil)
            }
            "dequeue" => {
                let head = want_handle(ctx.read(HEAD)?)?;
                match want_link(ctx.read(Var::Dyn(head.offset(1)))?)? {
                    None => Ok(Value::Nil),
                    Some(front) => {
                        let v = ctx.read(Var::Dyn(front))?;
                        // The front node becomes the new dummy; its stale
                        // value cell is unreachable through `head`.
                        ctx.write(HEAD, Value::Handle(front))?;
                        Ok(v)
                    }
                }
            }
            other => panic!("queue: unknown opcode {other}"),
        }
    }

    fn access_bound(&self) -> usize {
        // enqueue: 2 allocations + 2 writes + 1 read + 2 writes.
        7
    }

    fn opcodes(&self) -> &'static [&'static str] {
        &["enqueue", "dequeue"]
    }

    fn reference(&self) -> Box<dyn ReferenceObject> {
        Box::new(QueueRef(self.prefill.iter().copied().collect()))
    }
}

#[derive(Clone)]
struct QueueRef(VecDeque<i64>);

impl ReferenceObject for QueueRef {
    fn apply(&mut self, opcode: &str, args: &[Value]) -> Value {
        match opcode {
            "enqueue" => {
                self.0
                    .push_back(args[0].as_int().expect("enqueue takes an int"));
                Value::Nil
            }
            "dequeue" => self.0.pop_front().map_or(Value::Nil, Value::Int),
            other => panic!("queue: unknown opcode {other}"),
        }
    }

    fn fingerprint(&self) -> u64 {
        hash_one(&self.0)
    }

    fn boxed_clone(&self) -> Box<dyn ReferenceObject> {
        Box::new(self.clone())
    }
}
