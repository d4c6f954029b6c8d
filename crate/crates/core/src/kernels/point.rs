use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scheme::MAX_N;

/// A point of `{0,1}^n`, `n <= 64`. Bit `i` of `bits` is coordinate `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HypercubePoint {
    bits: u64,
    n: u8,
    weight: u8,
}

impl HypercubePoint {
    pub fn new(bits: u64, n: usize) -> Result<Self> {
        if n == 0 || n > MAX_N {
            return Err(Error::InvalidArgument(format!("dimension {n} outside 1..=64")));
        }
        if n < 64 && bits >> n != 0 {
            return Err(Error::InvalidArgument(format!(
                "bits {bits:#x} do not fit in dimension {n}"
            )));
        }
        Ok(Self {
            bits,
            n: n as u8,
            weight: bits.count_ones() as u8,
        })
    }

    /// Point with the given coordinates set.
    pub fn from_indices(n: usize, indices: &[usize]) -> Result<Self> {
        let mut bits = 0u64;
        for &i in indices {
            if i >= n {
                return Err(Error::InvalidArgument(format!("index {i} >= n = {n}")));
            }
            bits |= 1 << i;
        }
        Self::new(bits, n)
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn weight(&self) -> usize {
        self.weight as usize
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits >> i & 1 == 1
    }

    /// `<x, y>`: number of shared ones.
    #[inline]
    pub fn inner(&self, other: &Self) -> usize {
        (self.bits & other.bits).count_ones() as usize
    }

    pub fn complement(&self) -> Self {
        let mask = if self.n == 64 { u64::MAX } else { (1u64 << self.n) - 1 };
        let bits = !self.bits & mask;
        Self {
            bits,
            n: self.n,
            weight: self.n - self.weight,
        }
    }
}

impl fmt::Display for HypercubePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n() {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for HypercubePoint {
    type Err = Error;

    /// Character `i` of the string is coordinate `i`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut bits = 0u64;
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' if i < 64 => bits |= 1 << i,
                '1' => {}
                _ => return Err(Error::Parse(format!("invalid bit '{c}' in \"{s}\""))),
            }
        }
        Self::new(bits, s.len())
    }
}

impl Serialize for HypercubePoint {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for HypercubePoint {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
