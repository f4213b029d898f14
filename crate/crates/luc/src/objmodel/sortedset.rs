//! Sorted integer set over keys `0..domain`, stored as an ascending singly
//! linked list of two-cell nodes. The `head` root holds the first node's
//! handle (or nil). Inserts outside the domain are rejected with `-1`, which
//! caps the list length and hence the traversal cost.

use super::{
    alloc_pair, hash_one, want_int, want_link, AccessContext, ReferenceObject, RequestDescriptor,
    SequentialObject, SetupContext,
};
use crate::mediator::Ctl;
use crate::value::{Handle, Value, Var};
use std::collections::BTreeSet;

const HEAD: Var = Var::Named("head");

pub struct SortedSet {
    domain: usize,
}

impl SortedSet {
    pub fn new(domain: usize) -> Self {
        assert!(domain >= 1, "set domain must be non-empty");
        SortedSet { domain }
    }

    fn in_domain(&self, x: i64) -> bool {
        0 <= x && x < self.domain as i64
    }
}

/// Cursor state after walking to the first key `>= x`: the link cell that
/// points at `at`, and `at` itself (with its key) unless the walk hit the
/// end of the list.
struct Found {
    link: Var,
    at: Option<(Handle, i64)>,
}

fn seek(ctx: &mut dyn AccessContext, x: i64) -> Ctl<Found> {
    let mut link = HEAD;
    let mut cur = want_link(ctx.read(link)?)?;
    while let Some(node) = cur {
        let key = want_int(ctx.read(Var::Dyn(node))?)?;
        if key >= x {
            return Ok(Found {
                link,
                at: Some((node, key)),
            });
        }
        link = Var::Dyn(node.offset(1));
        cur = want_link(ctx.read(link)?)?;
    }
    Ok(Found { link, at: None })
}

impl SequentialObject for SortedSet {
    fn name(&self) -> &'static str {
        "set"
    }

    fn roots(&self) -> &'static [&'static str] {
        &["head"]
    }

    fn setup(&self, s: &mut dyn SetupContext) {
        s.write(HEAD, Value::Nil);
    }

    fn dispatch(&self, req: &RequestDescriptor, ctx: &mut dyn AccessContext) -> Ctl<Value> {
        let x = want_int(req.arg(0))?;
        match req.opcode {
            "insert" => {
                if !self.in_domain(x) {
                    return Ok(Value::Int(-1));
                }
                let found = seek(ctx, x)?;
                if matches!(found.at, Some((_, key)) if key == x) {
                    return Ok(Value::Int(0));
                }
                let node = alloc_pair(ctx)?;
                let successor = found.at.map_or(Value::Nil, |(h, _)| Value::Handle(h));
                ctx.write(Var::Dyn(node), Value::Int(x))?;
                ctx.write(Var::Dyn(node.offset(1)), successor)?;
                ctx.write(found.link, Value::Handle(node))?;
                Ok(Value::Int(1))
            }
            "remove" => {
                let found = seek(ctx, x)?;
                match found.at {
                    Some((node, key)) if key == x => {
                        let next = ctx.read(Var::Dyn(node.offset(1)))?;
                        ctx.write(found.link, next)?;
                        Ok(Value::Int(1))
                    }
                    _ => Ok(Value::Int(0)),
                }
            }
            "contains" => {
                let found = seek(ctx, x)?;
                Ok(Value::Int(
                    matches!(found.at, Some((_, key)) if key == x) as i64,
                ))
            }
            other => panic!("set: unknown opcode {other}"),
        }
    }

    fn access_bound(&self) -> usize {
        // Walk: 1 + 2 reads per resident key; insert adds 2 allocations + 3
        // writes, remove adds 1 read + 1 write.
        2 * self.domain + 8
    }

    fn opcodes(&self) -> &'static [&'static str] {
        &["insert", "remove", "contains"]
    }

    fn reference(&self) -> Box<dyn ReferenceObject> {
        Box::new(SetRef {
            keys: BTreeSet::new(),
            domain: self.domain,
        })
    }
}

#[derive(Clone)]
struct SetRef {
    keys: BTreeSet<i64>,
    domain: usize,
}

impl ReferenceObject for SetRef {
    fn apply(&mut self, opcode: &str, args: &[Value]) -> Value {
        let x = args[0].as_int().expect("set opcodes take an int key");
        match opcode {
            "insert" => {
                if !(0 <= x && x < self.domain as i64) {
                    Value::Int(-1)
                } else {
                    Value::Int(self.keys.insert(x) as i64)
                }
            }
            "remove" => Value::Int(self.keys.remove(&x) as i64),
            "contains" => Value::Int(self.keys.contains(&x) as i64),
            other => panic!("set: unknown opcode {other}"),
        }
    }

    fn fingerprint(&self) -> u64 {
        hash_one(&self.keys)
    }

    fn boxed_clone(&self) -> Box<dyn ReferenceObject> {
        Box::new(self.clone())
    }
}
