//! Seeded operation streams: reproducible per-process request sequences for
//! stress tests and benchmarks.

use crate::objmodel::{ObjectKind, RequestDescriptor};
use crate::value::{ProcId, Value};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Weighted opcode mix.
#[derive(Clone, Debug)]
pub struct Mix {
    entries: Vec<(&'static str, u32)>,
}

impl Mix {
    pub fn new(entries: Vec<(&'static str, u32)>) -> Self {
        assert!(
            entries.iter().any(|&(_, w)| w > 0),
            "a mix needs at least one positive weight"
        );
        Mix { entries }
    }

    /// Balanced default: every opcode the object supports, equally likely.
    pub fn default_for(kind: ObjectKind) -> Mix {
        let entries = kind.build().opcodes().iter().map(|&op| (op, 1)).collect();
        Mix { entries }
    }

    /// Parse `"op=weight,op=weight"`, validating opcodes against `kind`.
    pub fn parse(s: &str, kind: ObjectKind) -> Result<Mix, String> {
        let valid = kind.build().opcodes();
        let mut entries = Vec::new();
        for part in s.split(',') {
            let (op, w) = part
                .split_once('=')
                .ok_or_else(|| format!("bad mix entry {part:?} (want op=weight)"))?;
            let op = *valid
                .iter()
                .find(|v| **v == op)
                .ok_or_else(|| format!("{kind} has no operation {op:?}"))?;
            let w: u32 = w
                .parse()
                .map_err(|e| format!("bad weight in {part:?}: {e}"))?;
            entries.push((op, w));
        }
        if !entries.iter().any(|&(_, w)| w > 0) {
            return Err("mix has no positive weight".into());
        }
        Ok(Mix { entries })
    }

    pub fn pick(&self, rng: &mut impl Rng) -> &'static str {
        self.entries
            .choose_weighted(rng, |&(_, w)| w)
            .expect("mix has a positive weight")
            .0
    }
}

/// Per-process request source. Same (kind, mix, seed, owner) always yields
/// the same sequence.
pub struct OpStream {
    mix: Mix,
    owner: ProcId,
    rng: ChaCha8Rng,
    arg_span: i64,
}

impl OpStream {
    pub fn new(kind: ObjectKind, owner: ProcId, seed: u64) -> Self {
        // Distinct processes with one base seed draw distinct streams.
        let rng = ChaCha8Rng::seed_from_u64(seed ^ (owner as u64).wrapping_mul(0x9e3779b97f4a7c15));
        OpStream {
            mix: Mix::default_for(kind),
            owner,
            rng,
            arg_span: match kind {
                // Match the default set domain; keep other value spaces
                // small enough that removals meet their insertions.
                ObjectKind::SortedSet => 16,
                _ => 32,
            },
        }
    }

    pub fn with_mix(mut self, mix: Mix) -> Self {
        self.mix = mix;
        self
    }

    pub fn with_arg_span(mut self, span: i64) -> Self {
        assert!(span > 0);
        self.arg_span = span;
        self
    }

    pub fn next_request(&mut self) -> Arc<RequestDescriptor> {
        let opcode = self.mix.pick(&mut self.rng);
        let args = match opcode {
            "push" | "enqueue" | "insert" | "remove" | "contains" => {
                vec![Value::Int(self.rng.random_range(0..self.arg_span))]
            }
            _ => Vec::new(),
        };
        Arc::new(RequestDescriptor::new(opcode, args, self.owner))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let take = |owner, seed| {
            let mut s = OpStream::new(ObjectKind::Stack, owner, seed);
            (0..50).map(|_| s.next_request()).collect::<Vec<_>>()
        };
        assert_eq!(take(1, 7), take(1, 7));
        assert_ne!(take(1, 7), take(2, 7));
        assert_ne!(take(1, 7), take(1, 8));
    }

    #[test]
    fn mix_parsing_validates_opcodes() {
        assert!(Mix::parse("inc=3,read=1", ObjectKind::Counter).is_ok());
        assert!(Mix::parse("pop=1", ObjectKind::Counter).is_err());
        assert!(Mix::parse("inc=0", ObjectKind::Counter).is_err());
        assert!(Mix::parse("inc", ObjectKind::Counter).is_err());
    }

    #[test]
    fn mix_zero_weight_is_never_picked() {
        let mix = Mix::parse("push=1,pop=0", ObjectKind::Stack).unwrap();
        let mut s = OpStream::new(ObjectKind::Stack, 0, 3).with_mix(mix);
        for _ in 0..100 {
            assert_eq!(s.next_request().opcode, "push");
        }
    }
}
