use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};

/// A candidate solution: a fixed-length string of bits, packed 64 per word.
///
/// Bits past `len` in the last word are always zero, so derived equality and
/// hashing compare content only.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    len: usize,
    words: Vec<u64>,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut s = Self::zeros(len);
        for w in s.words.iter_mut() {
            *w = rng.gen();
        }
        s.clear_tail();
        s
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut s = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                s.flip(i);
            }
        }
        s
    }

    /// Parses a string of `0` and `1` characters, most significant position first
    /// (character `i` is bit `i`).
    pub fn parse(text: &str) -> Result<Self> {
        let bits = text
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::param(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_bools(&bits))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i >> 6] ^= 1 << (i & 63);
    }

    pub fn flipped(&self, i: usize) -> Self {
        let mut s = self.clone();
        s.flip(i);
        s
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    fn clear_tail(&mut self) {
        let rem = self.len & 63;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn parse_display_round_trip() {
        let s = BitString::parse("0110100").unwrap();
        assert_eq!(s.len(), 7);
        assert!(s.get(1) && s.get(2) && s.get(4));
        assert_eq!(s.to_string(), "0110100");
        assert!(BitString::parse("01x").is_err());
    }

    #[test]
    fn random_strings_keep_tail_clear() {
        let mut rng = rng_from_seed(3);
        for len in [1, 63, 64, 65, 130] {
            let s = BitString::random(len, &mut rng);
            let mut t = s.clone();
            for i in 0..len {
                if t.get(i) {
                    t.flip(i);
                }
            }
            assert_eq!(t, BitString::zeros(len));
        }
    }

    #[test]
    fn flip_is_an_involution() {
        let s = BitString::parse("1010").unwrap();
        assert_eq!(s.flipped(3).flipped(3), s);
        assert_ne!(s.flipped(0), s);
    }
}
