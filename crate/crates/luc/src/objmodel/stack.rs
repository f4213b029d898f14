//! LIFO stack as a singly linked list of two-cell nodes hanging off the
//! `top` root. An empty stack stores nil in `top`.

use super::{
    alloc_pair, hash_one, want_int, want_link, AccessContext, ReferenceObject, RequestDescriptor,
    SequentialObject, SetupContext,
};
use crate::mediator::Ctl;
use crate::value::{Value, Var};

const TOP: Var = Var::Named("top");

pub struct Stack;

impl Stack {
    #[allow(clippy::new_without_default)]
    pub fn new() -> Self {
        Stack
    }
}

impl SequentialObject for Stack {
    fn name(&self) -> &'static str {
        "stack"
    }

    fn roots(&self) -> &'static [&'static str] {
        &["top"]
    }

    fn setup(&self, s: &mut dyn SetupContext) {
        s.write(TOP, Value::Nil);
    }

    fn dispatch(&self, req: &RequestDescriptor, ctx: &mut dyn AccessContext) -> Ctl<Value> {
        match req.opcode {
            "push" => {
                let x = want_int(req.arg(0))?;
                let old = ctx.read(TOP)?;
                let node = alloc_pair(ctx)?;
                ctx.write(Var::Dyn(node), Value::Int(x))?;
                ctx.write(Var::Dyn(node.offset(1)), old)?;
                ctx.write(TOP, Value::Handle(node))?;
                Ok(Value::Nil)
            }
            "pop" => match want_link(ctx.read(TOP)?)? {
                None => Ok(Value::Nil),
                Some(node) => {
                    let v = ctx.read(Var::Dyn(node))?;
                    let next = ctx.read(Var::Dyn(node.offset(1)))?;
                    ctx.write(TOP, next)?;
                    Ok(v)
                }
            },
            other => panic!("stack: unknown opcode {other}"),
        }
    }

    fn access_bound(&self) -> usize {
        // push: 1 read + 2 allocations + 3 writes.
        6
    }

    fn opcodes(&self) -> &'static [&'static str] {
        &["push", "pop"]
    }

    fn reference(&self) -> Box<dyn ReferenceObject> {
        Box::new(StackRef(Vec::new()))
    }
}

#[derive(Clone)]
struct StackRef(Vec<i64>);

impl ReferenceObject for StackRef {
    fn apply(&mut self, opcode: &str, args: &[Value]) -> Value {
        match opcode {
            "push" => {
                self.0.push(args[0].as_int().expect("push takes an int"));
                Value::Nil
            }
            "pop" => self.0.pop().map_or(Value::Nil, Value::Int),
            other => panic!("stack: unknown opcode {other}"),
        }
    }

    fn fingerprint(&self) -> u64 {
        hash_one(&self.0)
    }

    fn boxed_clone(&self) -> Box<dyn ReferenceObject> {
        Box::new(self.clone())
    }
}
