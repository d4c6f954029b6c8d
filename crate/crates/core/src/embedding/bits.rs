use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A bit vector of arbitrary length, packed little-endian into `u64` words.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WideBits {
    len: usize,
    words: Vec<u64>,
}

impl WideBits {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    /// Wraps packed words; bits past `len` must be zero.
    pub fn from_words(len: usize, words: Vec<u64>) -> Result<Self> {
        if words.len() != len.div_ceil(64) {
            return Err(Error::DimensionMismatch {
                expected: len.div_ceil(64),
                got: words.len(),
            });
        }
        if !len.is_multiple_of(64) && words.last().is_some_and(|w| w >> (len % 64) != 0) {
            return Err(Error::InvalidArgument("bits set past the end".into()));
        }
        Ok(Self { len, words })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of positions set in both vectors. Lengths must match.
    pub fn inner(&self, other: &Self) -> usize {
        debug_assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    /// Concatenation of equal-length rows.
    pub fn concat(rows: &[&WideBits]) -> Self {
        let total = rows.iter().map(|r| r.len).sum();
        let mut out = Self::zeros(total);
        let mut at = 0;
        for row in rows {
            let shift = at % 64;
            let base = at / 64;
            for (k, &w) in row.words.iter().enumerate() {
                out.words[base + k] |= w << shift;
                if shift != 0 && base + k + 1 < out.words.len() {
                    out.words[base + k + 1] |= w >> (64 - shift);
                }
            }
            at += row.len;
        }
        out
    }

    /// `ceil(len / 8)` bytes; bit `i` is bit `i % 8` of byte `i / 8`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out: Vec<u8> = self.words.iter().flat_map(|w| w.to_le_bytes()).collect();
        out.truncate(self.len.div_ceil(8));
        out
    }

    pub fn from_bytes(len: usize, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != len.div_ceil(8) {
            return Err(Error::DimensionMismatch {
                expected: len.div_ceil(8),
                got: bytes.len(),
            });
        }
        let mut words = vec![0u64; len.div_ceil(64)];
        for (i, b) in bytes.iter().enumerate() {
            words[i / 8] |= (*b as u64) << (8 * (i % 8));
        }
        Self::from_words(len, words)
    }
}

impl fmt::Display for WideBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = (0..self.len).map(|i| if self.get(i) { '1' } else { '0' }).collect();
        f.write_str(&s)
    }
}

impl FromStr for WideBits {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut out = Self::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '1' => out.set(i),
                '0' => {}
                other => return Err(Error::Parse(format!("bad bit character {other:?}"))),
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn concat_matches_string_concat(parts in proptest::collection::vec("[01]{0,150}", 1..5)) {
            let rows: Vec<WideBits> = parts.iter().map(|s| s.parse().unwrap()).collect();
            let refs: Vec<&WideBits> = rows.iter().collect();
            let joined = WideBits::concat(&refs);
            prop_assert_eq!(joined.to_string(), parts.concat());
        }

        #[test]
        fn bytes_round_trip(s in "[01]{0,300}") {
            let b: WideBits = s.parse().unwrap();
            prop_assert_eq!(WideBits::from_bytes(b.len(), &b.to_bytes()).unwrap(), b);
        }
    }

    #[test]
    fn inner_counts_shared_ones() {
        let a: WideBits = "1101".parse().unwrap();
        let b: WideBits = "0111".parse().unwrap();
        assert_eq!(a.inner(&b), 2);
        assert_eq!(a.count_ones(), 3);
        assert!(WideBits::from_words(3, vec![0b1000]).is_err());
        assert!("10x".parse::<WideBits>().is_err());
    }
}
