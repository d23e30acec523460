//! Narrow-sense primitive binary BCH codes of length 2^m - 1.
//!
//! Encoding is systematic (parity in the low-order positions, message in
//! the high-order ones). Decoding computes syndromes, finds the error
//! locator with Berlekamp-Massey and its roots by Chien search.

use super::gf::{GaloisField, MAX_M, MIN_M};
use crate::bits::BitString;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Bch {
    gf: GaloisField,
    n: usize,
    k: usize,
    t: usize,
    /// Generator polynomial over GF(2), low to high, degree n - k.
    generator: Vec<bool>,
}

impl Bch {
    /// Code of length `n = 2^m - 1` with designed distance `2t + 1`.
    pub fn new(n: usize, t: usize) -> Result<Self> {
        let m = (n + 1).trailing_zeros();
        if n + 1 != 1 << m || !(MIN_M..=MAX_M).contains(&m) {
            return Err(Error::InvalidParam(format!(
                "BCH length must be 2^m - 1 with {MIN_M} <= m <= {MAX_M}, got {n}"
            )));
        }
        if t == 0 || 2 * t + 1 > n {
            return Err(Error::InvalidParam(format!(
                "BCH({n}) cannot correct {t} errors"
            )));
        }
        let gf = GaloisField::new(m);
        let mut covered = vec![false; n];
        let mut generator = vec![true];
        for i in 1..=2 * t {
            if covered[i % n] {
                continue;
            }
            // cyclotomic coset of i, and its minimal polynomial
            let mut minimal: Vec<u16> = vec![1];
            let mut c = i % n;
            while !covered[c] {
                covered[c] = true;
                let root = gf.alpha_pow(c);
                let mut next = vec![0u16; minimal.len() + 1];
                for (d, &coef) in minimal.iter().enumerate() {
                    next[d + 1] ^= coef;
                    next[d] ^= gf.mul(coef, root);
                }
                minimal = next;
                c = c * 2 % n;
            }
            debug_assert!(minimal.iter().all(|&v| v <= 1));
            generator = gf2_mul(
                &generator,
                &minimal.iter().map(|&v| v == 1).collect::<Vec<_>>(),
            );
        }
        let parity = generator.len() - 1;
        if parity >= n {
            return Err(Error::InvalidParam(format!(
                "BCH({n}) with t={t} leaves no message bits"
            )));
        }
        Ok(Bch {
            gf,
            n,
            k: n - parity,
            t,
            generator,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn encode(&self, message: &BitString) -> BitString {
        assert_eq!(message.len(), self.k, "BCH message length");
        let r = self.n - self.k;
        let g = &self.generator;
        let mut rem = vec![false; r];
        for j in (0..self.k).rev() {
            let feedback = message.as_slice()[j] ^ rem[r - 1];
            for i in (1..r).rev() {
                rem[i] = rem[i - 1] ^ (feedback && g[i]);
            }
            rem[0] = feedback && g[0];
        }
        rem.into_iter().chain(message.iter()).collect()
    }

    fn syndromes(&self, word: &[bool]) -> Vec<u16> {
        (1..=2 * self.t)
            .map(|j| {
                word.iter()
                    .enumerate()
                    .filter(|(_, &b)| b)
                    .fold(0u16, |acc, (i, _)| acc ^ self.gf.alpha_pow(i * j))
            })
            .collect()
    }

    /// Error locator polynomial (low to high) from the syndromes.
    fn berlekamp_massey(&self, s: &[u16]) -> Vec<u16> {
        let gf = &self.gf;
        let mut c = vec![1u16];
        let mut b = vec![1u16];
        let mut l = 0usize;
        let mut shift = 1usize;
        let mut last = 1u16;
        for n in 0..s.len() {
            let mut d = s[n];
            for i in 1..=l.min(c.len() - 1) {
                d ^= gf.mul(c[i], s[n - i]);
            }
            if d == 0 {
                shift += 1;
                continue;
            }
            let coef = gf.div(d, last);
            let mut next = c.clone();
            if next.len() < b.len() + shift {
                next.resize(b.len() + shift, 0);
            }
            for (i, &bi) in b.iter().enumerate() {
                next[i + shift] ^= gf.mul(coef, bi);
            }
            if 2 * l <= n {
                l = n + 1 - l;
                b = c;
                last = d;
                shift = 1;
            } else {
                shift += 1;
            }
            c = next;
        }
        c.truncate(l + 1);
        c
    }

    /// Corrects up to `t` errors and returns the message, or `None` when
    /// the word is not within distance `t` of any codeword the decoder
    /// can identify.
    pub fn decode(&self, word: &BitString) -> Option<BitString> {
        assert_eq!(word.len(), self.n, "BCH word length");
        let mut bits = word.as_slice().to_vec();
        let s = self.syndromes(&bits);
        if s.iter().any(|&v| v != 0) {
            let locator = self.berlekamp_massey(&s);
            let degree = locator.len() - 1;
            if degree > self.t {
                return None;
            }
            let mut found = 0;
            for (pos, bit) in bits.iter_mut().enumerate() {
                let x = self.gf.alpha_pow(self.n - pos);
                if self.gf.eval(&locator, x) == 0 {
                    *bit = !*bit;
                    found += 1;
                }
            }
            if found != degree || self.syndromes(&bits).iter().any(|&v| v != 0) {
                return None;
            }
        }
        Some(bits[self.n - self.k..].iter().copied().collect())
    }
}

fn gf2_mul(a: &[bool], b: &[bool]) -> Vec<bool> {
    let mut out = vec![false; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x {
            for (j, &y) in b.iter().enumerate() {
                out[i + j] ^= y;
            }
        }
    }
    out
}
