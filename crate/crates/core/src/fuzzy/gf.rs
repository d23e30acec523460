//! Arithmetic in GF(2^m) via log/antilog tables.

/// Primitive polynomials, indexed by m, for m = 3..=10.
const PRIMITIVE_POLYS: [u32; 11] = [0, 0, 0, 0xB, 0x13, 0x25, 0x43, 0x89, 0x11D, 0x211, 0x409];

pub const MIN_M: u32 = 3;
pub const MAX_M: u32 = 10;

#[derive(Debug, Clone)]
pub struct GaloisField {
    m: u32,
    order: usize,
    exp: Vec<u16>,
    log: Vec<u16>,
}

impl GaloisField {
    /// Panics unless `MIN_M <= m <= MAX_M`.
    pub fn new(m: u32) -> Self {
        assert!((MIN_M..=MAX_M).contains(&m), "unsupported field GF(2^{m})");
        let poly = PRIMITIVE_POLYS[m as usize];
        let order = (1usize << m) - 1;
        let mut exp = vec![0u16; 2 * order];
        let mut log = vec![0u16; order + 1];
        let mut x = 1u32;
        for (i, e) in exp.iter_mut().take(order).enumerate() {
            *e = x as u16;
            log[x as usize] = i as u16;
            x <<= 1;
            if x & (1 << m) != 0 {
                x ^= poly;
            }
        }
        for i in order..2 * order {
            exp[i] = exp[i - order];
        }
        GaloisField { m, order, exp, log }
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// Multiplicative group order, 2^m - 1.
    pub fn order(&self) -> usize {
        self.order
    }

    /// alpha^i for any i >= 0.
    pub fn alpha_pow(&self, i: usize) -> u16 {
        self.exp[i % self.order]
    }

    pub fn mul(&self, a: u16, b: u16) -> u16 {
        if a == 0 || b == 0 {
            0
        } else {
            self.exp[self.log[a as usize] as usize + self.log[b as usize] as usize]
        }
    }

    pub fn inv(&self, a: u16) -> u16 {
        assert!(a != 0, "inverse of zero");
        self.exp[(self.order - self.log[a as usize] as usize) % self.order]
    }

    pub fn div(&self, a: u16, b: u16) -> u16 {
        self.mul(a, self.inv(b))
    }

    /// Evaluates a polynomial (coefficients low to high) at `x`.
    pub fn eval(&self, poly: &[u16], x: u16) -> u16 {
        poly.iter().rev().fold(0, |acc, &c| self.mul(acc, x) ^ c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_nonzero_element_has_an_inverse() {
        for m in MIN_M..=MAX_M {
            let gf = GaloisField::new(m);
            for a in 1..=gf.order() as u16 {
                assert_eq!(gf.mul(a, gf.inv(a)), 1, "m={m} a={a}");
            }
        }
    }

    #[test]
    fn alpha_generates_the_group() {
        let gf = GaloisField::new(7);
        let mut seen = std::collections::HashSet::new();
        for i in 0..gf.order() {
            seen.insert(gf.alpha_pow(i));
        }
        assert_eq!(seen.len(), 127);
        assert!(!seen.contains(&0));
    }
}
