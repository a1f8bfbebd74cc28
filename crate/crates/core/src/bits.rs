//! Packed fixed-length bit strings.
//!
//! Positions are 0-based in the API. The textual form writes position 0
//! first, so `"1000"` has only bit 0 set.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use smallvec::SmallVec;

use crate::error::{Error, Result};

const WORD: usize = 64;

#[derive(PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    len: usize,
    words: SmallVec<[u64; 2]>,
}

impl Clone for BitString {
    #[inline]
    fn clone(&self) -> Self {
        let words = match *self.words.as_slice() {
            [a] => SmallVec::from_buf_and_len([a, 0], 1),
            [a, b] => SmallVec::from_buf([a, b]),
            ref many => SmallVec::from_slice(many),
        };
        BitString {
            len: self.len,
            words,
        }
    }

    #[inline]
    fn clone_from(&mut self, source: &Self) {
        self.len = source.len;
        self.words.clear();
        self.words.extend_from_slice(&source.words);
    }
}

#[inline]
fn words_for(len: usize) -> usize {
    len.div_ceil(WORD)
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        BitString {
            len,
            words: SmallVec::from_elem(0, words_for(len)),
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut s = BitString {
            len,
            words: SmallVec::from_elem(!0, words_for(len)),
        };
        s.clear_tail();
        s
    }

    /// Builds a string of length `len <= 64` whose bit `i` is bit `i` of `value`.
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= WORD, "from_u64 supports at most 64 bits");
        let mut s = BitString::zeros(len);
        if len > 0 {
            s.words[0] = value;
            s.clear_tail();
        }
        s
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let bits: Vec<bool> = bits.into_iter().collect();
        let mut s = BitString::zeros(bits.len());
        for (i, b) in bits.into_iter().enumerate() {
            if b {
                s.set(i, true);
            }
        }
        s
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut s = BitString::zeros(len);
        for w in s.words.iter_mut() {
            *w = rng.random();
        }
        s.clear_tail();
        s
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    pub fn flipped(&self, i: usize) -> Self {
        let mut s = self.clone();
        s.flip(i);
        s
    }

    pub fn complement(&self) -> Self {
        let mut s = self.clone();
        for w in s.words.iter_mut() {
            *w = !*w;
        }
        s.clear_tail();
        s
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Hamming distance. Fails on a length mismatch.
    pub fn hamming(&self, other: &BitString) -> Result<usize> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                left: self.len,
                right: other.len,
            });
        }
        Ok(self.hamming_unchecked(other))
    }

    /// Hamming distance for strings already known to have equal length.
    #[inline]
    pub fn hamming_unchecked(&self, other: &BitString) -> usize {
        debug_assert_eq!(self.len, other.len);
        match (self.words.as_slice(), other.words.as_slice()) {
            ([a], [b]) => (a ^ b).count_ones() as usize,
            (a, b) => a
                .iter()
                .zip(b)
                .map(|(a, b)| (a ^ b).count_ones() as usize)
                .sum(),
        }
    }

    pub fn xor(&self, other: &BitString) -> Result<BitString> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                left: self.len,
                right: other.len,
            });
        }
        let mut s = self.clone();
        for (a, b) in s.words.iter_mut().zip(other.words.iter()) {
            *a ^= *b;
        }
        Ok(s)
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Positions of set bits, ascending.
    pub fn ones_positions(&self) -> Vec<usize> {
        (0..self.len).filter(|&i| self.get(i)).collect()
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Lowercase hex, four positions per digit, position 0 in the high bit of
    /// the first digit. Trailing padding bits are zero.
    pub fn to_hex(&self) -> String {
        let mut out = String::with_capacity(self.len.div_ceil(4));
        for chunk in 0..self.len.div_ceil(4) {
            let mut nibble = 0u32;
            for j in 0..4 {
                let i = chunk * 4 + j;
                if i < self.len && self.get(i) {
                    nibble |= 1 << (3 - j);
                }
            }
            out.push(std::char::from_digit(nibble, 16).unwrap());
        }
        out
    }

    pub fn from_hex(hex: &str, len: usize) -> Result<Self> {
        if hex.len() != len.div_ceil(4) {
            return Err(Error::InvalidBits(format!(
                "hex string of {} digits cannot hold exactly {len} bits",
                hex.len()
            )));
        }
        let mut s = BitString::zeros(len);
        for (chunk, c) in hex.chars().enumerate() {
            let nibble = c
                .to_digit(16)
                .ok_or_else(|| Error::InvalidBits(format!("bad hex digit {c:?}")))?;
            for j in 0..4 {
                let i = chunk * 4 + j;
                let bit = (nibble >> (3 - j)) & 1 == 1;
                if i < len {
                    s.set(i, bit);
                } else if bit {
                    return Err(Error::InvalidBits("nonzero padding bits".into()));
                }
            }
        }
        Ok(s)
    }

    #[inline]
    fn clear_tail(&mut self) {
        let rem = self.len % WORD;
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

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut bits = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                _ => return Err(Error::InvalidBits(format!("unexpected character {c:?}"))),
            }
        }
        Ok(BitString::from_bits(bits))
    }
}

/// Hamming distance between two strings; fails when lengths differ.
pub fn hamming(x: &BitString, y: &BitString) -> Result<usize> {
    x.hamming(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn hamming_examples() {
        assert_eq!(hamming(&bs("0000"), &bs("0000")).unwrap(), 0);
        assert_eq!(hamming(&bs("1010"), &bs("0101")).unwrap(), 4);
        assert_eq!(hamming(&bs("1010"), &bs("1111")).unwrap(), 2);
    }

    #[test]
    fn hamming_length_mismatch() {
        assert_eq!(
            hamming(&bs("101"), &bs("1010")),
            Err(Error::LengthMismatch { left: 3, right: 4 })
        );
    }

    #[test]
    fn complement_clears_padding() {
        let x = BitString::zeros(70).complement();
        assert_eq!(x.count_ones(), 70);
        assert_eq!(x, BitString::ones(70));
    }

    #[test]
    fn hex_rejects_padding_bits() {
        assert!(BitString::from_hex("f", 3).is_err());
        assert_eq!(BitString::from_hex("e", 3).unwrap(), bs("111"));
        assert_eq!(bs("1010").to_hex(), "a");
    }

    proptest! {
        #[test]
        fn hamming_symmetric_and_zero_iff_equal(a in proptest::collection::vec(any::<bool>(), 1..150),
                                                 flips in proptest::collection::vec(any::<prop::sample::Index>(), 0..10)) {
            let x = BitString::from_bits(a.clone());
            let mut y = x.clone();
            for f in &flips {
                y.flip(f.index(a.len()));
            }
            let d = x.hamming(&y).unwrap();
            prop_assert_eq!(d, y.hamming(&x).unwrap());
            prop_assert_eq!(d == 0, x == y);
            prop_assert_eq!(d, x.xor(&y).unwrap().count_ones());
        }

        #[test]
        fn text_and_hex_round_trip(a in proptest::collection::vec(any::<bool>(), 0..150)) {
            let x = BitString::from_bits(a);
            prop_assert_eq!(&x.to_string().parse::<BitString>().unwrap(), &x);
            prop_assert_eq!(&BitString::from_hex(&x.to_hex(), x.len()).unwrap(), &x);
        }
    }
}
