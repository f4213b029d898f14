//! Append-only chunked storage with lock-free index allocation.
//!
//! Item cells and list nodes must stay valid for the lifetime of the
//! universe (records inside them are version-managed separately), so they
//! live in slabs that never move or free slots. Allocation is a fetch&add
//! plus a write-once slot initialization; readers take three atomic loads.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::OnceLock;

pub struct Slab<T> {
    len: AtomicUsize,
    chunk_size: usize,
    chunks: Box<[OnceLock<Box<[OnceLock<T>]>>]>,
}

impl<T> Slab<T> {
    /// Storage for up to `chunk_size * max_chunks` values; chunks allocate
    /// lazily, so an oversized bound costs one pointer per unused chunk.
    pub fn new(chunk_size: usize, max_chunks: usize) -> Self {
        assert!(chunk_size.is_power_of_two());
        let chunks = (0..max_chunks).map(|_| OnceLock::new()).collect();
        Slab {
            len: AtomicUsize::new(0),
            chunk_size,
            chunks,
        }
    }

    pub fn capacity(&self) -> usize {
        self.chunk_size * self.chunks.len()
    }

    pub fn len(&self) -> usize {
        self.len.load(Ordering::SeqCst)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn push(&self, value: T) -> usize {
        let idx = self.len.fetch_add(1, Ordering::SeqCst);
        assert!(
            idx < self.capacity(),
            "slab capacity {} exceeded; raise the universe allocation bound",
            self.capacity()
        );
        let chunk = self.chunks[idx / self.chunk_size].get_or_init(|| {
            (0..self.chunk_size)
                .map(|_| OnceLock::new())
                .collect::<Vec<_>>()
                .into_boxed_slice()
        });
        if chunk[idx % self.chunk_size].set(value).is_err() {
            unreachable!("slab slot {idx} initialized twice");
        }
        idx
    }

    /// Panics if `idx` was never allocated; indices only come from `push`.
    pub fn get(&self, idx: usize) -> &T {
        self.chunks[idx / self.chunk_size]
            .get()
            .and_then(|c| c[idx % self.chunk_size].get())
            .expect("slab index out of bounds")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn push_get_across_chunks() {
        let s: Slab<usize> = Slab::new(4, 8);
        for i in 0..20 {
            assert_eq!(s.push(i * 3), i);
        }
        assert_eq!(s.len(), 20);
        for i in 0..20 {
            assert_eq!(*s.get(i), i * 3);
        }
    }

    #[test]
    fn concurrent_pushes_get_distinct_slots() {
        let s: std::sync::Arc<Slab<(usize, usize)>> = std::sync::Arc::new(Slab::new(64, 64));
        std::thread::scope(|scope| {
            for t in 0..4 {
                let s = &s;
                scope.spawn(move || {
                    for i in 0..500 {
                        s.push((t, i));
                    }
                });
            }
        });
        assert_eq!(s.len(), 2000);
        let mut seen = std::collections::HashSet::new();
        for i in 0..2000 {
            assert!(seen.insert(*s.get(i)), "slot {i} duplicated");
        }
    }

    #[test]
    #[should_panic(expected = "slab capacity")]
    fn overflow_panics() {
        let s: Slab<u8> = Slab::new(2, 1);
        s.push(0);
        s.push(1);
        s.push(2);
    }
}
