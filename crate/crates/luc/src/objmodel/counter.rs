//! Fetch-and-increment counter over a single root variable.

use super::{
    hash_one, want_int, AccessContext, ReferenceObject, RequestDescriptor, SequentialObject,
    SetupContext,
};
use crate::mediator::Ctl;
use crate::value::{Value, Var};

const COUNT: Var = Var::Named("count");

pub struct Counter;

impl Counter {
    #[allow(clippy::new_without_default)]
    pub fn new() -> Self {
        Counter
    }
}

impl SequentialObject for Counter {
    fn name(&self) -> &'static str {
        "counter"
    }

    fn roots(&self) -> &'static [&'static str] {
        &["count"]
    }

    fn setup(&self, s: &mut dyn SetupContext) {
        s.write(COUNT, Value::Int(0));
    }

    fn dispatch(&self, req: &RequestDescriptor, ctx: &mut dyn AccessContext) -> Ctl<Value> {
        match req.opcode {
            "inc" => {
                let c = want_int(ctx.read(COUNT)?)?;
                ctx.write(COUNT, Value::Int(c + 1))?;
                Ok(Value::Int(c))
            }
            "read" => ctx.read(COUNT),
            other => panic!("counter: unknown opcode {other}"),
        }
    }

    fn access_bound(&self) -> usize {
        2
    }

    fn opcodes(&self) -> &'static [&'static str] {
        &["inc", "read"]
    }

    fn reference(&self) -> Box<dyn ReferenceObject> {
        Box::new(CounterRef(0))
    }
}

#[derive(Clone)]
struct CounterRef(i64);

impl ReferenceObject for CounterRef {
    fn apply(&mut self, opcode: &str, _args: &[Value]) -> Value {
        match opcode {
            "inc" => {
                let c = self.0;
                self.0 += 1;
                Value::Int(c)
            }
            "read" => Value::Int(self.0),
            other => panic!("counter: unknown opcode {other}"),
        }
    }

    fn fingerprint(&self) -> u64 {
        hash_one(&self.0)
    }

    fn boxed_clone(&self) -> Box<dyn ReferenceObject> {
        Box::new(self.clone())
    }
}
