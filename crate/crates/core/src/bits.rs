//! Plain bit strings with the hex conventions used throughout the crate:
//! bit `i` is the `i`-th bit of the big-endian expansion of the hex text.

use std::fmt;
use std::ops::BitXor;

use crate::error::{Error, Result};

#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn new(bits: Vec<bool>) -> Self {
        BitString(bits)
    }

    pub fn zeros(len: usize) -> Self {
        BitString(vec![false; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.0.iter().copied()
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        self.0.get(i).copied()
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] = !self.0[i];
    }

    pub fn push(&mut self, bit: bool) {
        self.0.push(bit);
    }

    pub fn extend_from(&mut self, other: &BitString) {
        self.0.extend_from_slice(&other.0);
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    /// Number of positions where `self` and `other` differ.
    pub fn distance(&self, other: &BitString) -> Result<usize> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                actual: other.len(),
            });
        }
        Ok(self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count())
    }

    /// Copy padded with zeros on the right up to `len` bits.
    pub fn padded(&self, len: usize) -> BitString {
        let mut bits = self.0.clone();
        bits.resize(len.max(bits.len()), false);
        BitString(bits)
    }

    pub fn slice(&self, start: usize, end: usize) -> BitString {
        BitString(self.0[start..end].to_vec())
    }

    /// Packs bits MSB-first into bytes; the final byte is zero-filled.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.0
            .chunks(8)
            .map(|chunk| {
                chunk
                    .iter()
                    .enumerate()
                    .fold(0u8, |acc, (i, &b)| acc | ((b as u8) << (7 - i)))
            })
            .collect()
    }

    /// First `len` bits of the MSB-first expansion of `bytes`.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Result<Self> {
        if len > bytes.len() * 8 {
            return Err(Error::LengthMismatch {
                expected: len,
                actual: bytes.len() * 8,
            });
        }
        Ok(BitString(
            (0..len)
                .map(|i| bytes[i / 8] >> (7 - i % 8) & 1 == 1)
                .collect(),
        ))
    }

    /// Lowercase hex; a trailing partial nibble is zero-filled.
    pub fn to_hex(&self) -> String {
        self.0
            .chunks(4)
            .map(|nibble| {
                let v = nibble
                    .iter()
                    .enumerate()
                    .fold(0u32, |acc, (i, &b)| acc | ((b as u32) << (3 - i)));
                char::from_digit(v, 16).expect("nibble")
            })
            .collect()
    }

    /// Parses hex text, keeping the first `len` bits (all of them when `None`).
    pub fn from_hex(text: &str, len: Option<usize>) -> Result<Self> {
        let mut bits = Vec::with_capacity(text.len() * 4);
        for c in text.chars() {
            let v = c
                .to_digit(16)
                .ok_or_else(|| Error::InvalidParam(format!("invalid hex digit {c:?}")))?;
            bits.extend((0..4).rev().map(|s| v >> s & 1 == 1));
        }
        if let Some(len) = len {
            if len > bits.len() || bits.len() - len >= 4 {
                return Err(Error::LengthMismatch {
                    expected: len,
                    actual: bits.len(),
                });
            }
            if bits[len..].iter().any(|&b| b) {
                return Err(Error::InvalidParam("nonzero hex padding bits".into()));
            }
            bits.truncate(len);
        }
        Ok(BitString(bits))
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({}b, {})", self.len(), self.to_hex())
    }
}

impl From<Vec<bool>> for BitString {
    fn from(bits: Vec<bool>) -> Self {
        BitString(bits)
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        BitString(iter.into_iter().collect())
    }
}

impl BitXor for &BitString {
    type Output = BitString;

    /// Panics on length mismatch.
    fn bitxor(self, rhs: &BitString) -> BitString {
        assert_eq!(self.len(), rhs.len(), "xor of unequal bit strings");
        self.0.iter().zip(&rhs.0).map(|(a, b)| a ^ b).collect()
    }
}
