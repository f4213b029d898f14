//! Fixed-width bit vectors backed by 64-bit words.
//!
//! The agreement record stores one announce bit per process and the toggle
//! register is a vector of fetch&add words, so both need a bit container with
//! explicit word-level access. Stays inline (no heap) for up to 64 processes.

use smallvec::SmallVec;

/// Bits per storage word.
pub const WORD_BITS: usize = 64;

/// Number of words needed to hold `n` bits.
pub fn words_for(n: usize) -> usize {
    n.div_ceil(WORD_BITS)
}

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitWords {
    words: SmallVec<[u64; 1]>,
}

impl BitWords {
    /// All-zero vector over `words` storage words.
    pub fn zeroed(words: usize) -> Self {
        BitWords {
            words: smallvec::smallvec![0; words],
        }
    }

    pub fn word_count(&self) -> usize {
        self.words.len()
    }

    pub fn word(&self, i: usize) -> u64 {
        self.words[i]
    }

    pub fn set_word(&mut self, i: usize, w: u64) {
        self.words[i] = w;
    }

    pub fn get(&self, bit: usize) -> bool {
        self.words[bit / WORD_BITS] >> (bit % WORD_BITS) & 1 == 1
    }

    pub fn set(&mut self, bit: usize, v: bool) {
        let mask = 1u64 << (bit % WORD_BITS);
        if v {
            self.words[bit / WORD_BITS] |= mask;
        } else {
            self.words[bit / WORD_BITS] &= !mask;
        }
    }
}

impl std::fmt::Debug for BitWords {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BitWords[")?;
        for (i, w) in self.words.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{w:016x}")?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn words_for_rounds_up() {
        assert_eq!(words_for(1), 1);
        assert_eq!(words_for(64), 1);
        assert_eq!(words_for(65), 2);
        assert_eq!(words_for(128), 2);
        assert_eq!(words_for(129), 3);
    }

    #[test]
    fn set_get_roundtrip() {
        let mut b = BitWords::zeroed(2);
        for bit in [0, 1, 63, 64, 100, 127] {
            assert!(!b.get(bit));
            b.set(bit, true);
            assert!(b.get(bit));
        }
        b.set(64, false);
        assert!(!b.get(64));
        assert!(b.get(63));
        assert!(b.get(100));
    }

    #[test]
    fn word_access_matches_bits() {
        let mut b = BitWords::zeroed(1);
        b.set(0, true);
        b.set(3, true);
        assert_eq!(b.word(0), 0b1001);
        b.set_word(0, 0b10);
        assert!(!b.get(0));
        assert!(b.get(1));
    }
}
