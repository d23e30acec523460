//! Fixed-width encoding of property vectors into fingerprint bit strings.
//!
//! Each value is offset by the ideal mean, quantized to `resolution_hz`
//! (round half away from zero), written as a two's-complement integer of
//! `4 * digits_per_qubit` bits in lowercase hex, and the per-qubit fields
//! are concatenated in order.

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::calibration::{extract_property, DeviceSnapshot, PropertyKind};
use crate::error::{Error, Result};

/// Largest supported field, so quantized offsets fit in an `i64`.
pub const MAX_DIGITS_PER_QUBIT: u32 = 15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingParams {
    pub mean_ideal_hz: f64,
    pub resolution_hz: f64,
    pub digits_per_qubit: u32,
    /// Optional per-position means overriding `mean_ideal_hz`; indexed by
    /// position in the encoded value list.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_qubit_means_hz: Option<Vec<f64>>,
}

impl EncodingParams {
    pub fn new(mean_ideal_hz: f64, resolution_hz: f64, digits_per_qubit: u32) -> Result<Self> {
        let params = EncodingParams {
            mean_ideal_hz,
            resolution_hz,
            digits_per_qubit,
            per_qubit_means_hz: None,
        };
        params.validate()?;
        Ok(params)
    }

    /// 5 GHz mean, 10 kHz cells, 24 bits per qubit.
    pub fn frequency_default() -> Self {
        EncodingParams {
            mean_ideal_hz: 5.0e9,
            resolution_hz: 10.0e3,
            digits_per_qubit: 6,
            per_qubit_means_hz: None,
        }
    }

    /// -0.31 GHz mean, 1 kHz cells, 24 bits per qubit.
    pub fn anharmonicity_default() -> Self {
        EncodingParams {
            mean_ideal_hz: -0.31e9,
            resolution_hz: 1.0e3,
            digits_per_qubit: 6,
            per_qubit_means_hz: None,
        }
    }

    pub fn default_for(kind: PropertyKind) -> Self {
        match kind {
            PropertyKind::Frequency => Self::frequency_default(),
            PropertyKind::Anharmonicity => Self::anharmonicity_default(),
        }
    }

    pub fn with_per_qubit_means(mut self, means: Vec<f64>) -> Self {
        self.per_qubit_means_hz = Some(means);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.resolution_hz.is_finite() && self.resolution_hz > 0.0) {
            return Err(Error::InvalidParam(format!(
                "resolution must be > 0, got {}",
                self.resolution_hz
            )));
        }
        if !(1..=MAX_DIGITS_PER_QUBIT).contains(&self.digits_per_qubit) {
            return Err(Error::InvalidParam(format!(
                "digits_per_qubit must be in 1..={MAX_DIGITS_PER_QUBIT}, got {}",
                self.digits_per_qubit
            )));
        }
        if !self.mean_ideal_hz.is_finite()
            || self
                .per_qubit_means_hz
                .as_ref()
                .is_some_and(|m| m.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::InvalidParam("means must be finite".into()));
        }
        Ok(())
    }

    pub fn bits_per_qubit(&self) -> u32 {
        4 * self.digits_per_qubit
    }

    /// Inclusive range of representable quantized offsets.
    pub fn quantized_range(&self) -> (i64, i64) {
        let half = 1i64 << (self.bits_per_qubit() - 1);
        (-half, half - 1)
    }

    fn mean_at(&self, position: usize) -> Result<f64> {
        match &self.per_qubit_means_hz {
            None => Ok(self.mean_ideal_hz),
            Some(means) => means.get(position).copied().ok_or(Error::LengthMismatch {
                expected: means.len(),
                actual: position + 1,
            }),
        }
    }

    /// Quantized offset of `value` from the mean at `position`.
    pub fn quantize(&self, value: f64, position: usize) -> Result<i64> {
        let q = ((value - self.mean_at(position)?) / self.resolution_hz).round();
        let (lo, hi) = self.quantized_range();
        if !q.is_finite() || q < lo as f64 || q > hi as f64 {
            return Err(Error::Overflow {
                index: position,
                quantized: q,
                bits: self.bits_per_qubit(),
            });
        }
        Ok(q as i64)
    }

    /// Center of the quantization cell containing `value`.
    pub fn cell_center(&self, value: f64, position: usize) -> Result<f64> {
        let q = self.quantize(value, position)?;
        Ok(self.mean_at(position)? + q as f64 * self.resolution_hz)
    }

    /// Copy whose per-qubit means (if any) are reordered to follow `indices`.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let per_qubit_means_hz = match &self.per_qubit_means_hz {
            None => None,
            Some(means) => Some(
                indices
                    .iter()
                    .map(|&i| {
                        means.get(i).copied().ok_or(Error::IndexOutOfRange {
                            index: i,
                            qubits: means.len(),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
        };
        Ok(EncodingParams {
            per_qubit_means_hz,
            ..self.clone()
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fingerprint {
    bits: BitString,
    params: EncodingParams,
    qubit_count: usize,
    property: PropertyKind,
}

impl Fingerprint {
    /// Wraps an already-encoded bit string, checking its width.
    pub fn from_bits(bits: BitString, params: EncodingParams, qubit_count: usize) -> Result<Self> {
        params.validate()?;
        let expected = qubit_count * params.bits_per_qubit() as usize;
        if qubit_count == 0 || bits.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: bits.len(),
            });
        }
        Ok(Fingerprint {
            bits,
            params,
            qubit_count,
            property: PropertyKind::Frequency,
        })
    }

    /// Tags the property the values came from (frequency by default).
    pub fn with_property(mut self, property: PropertyKind) -> Self {
        self.property = property;
        self
    }

    pub fn property(&self) -> PropertyKind {
        self.property
    }

    pub fn bits(&self) -> &BitString {
        &self.bits
    }

    pub fn params(&self) -> &EncodingParams {
        &self.params
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn to_hex(&self) -> String {
        self.bits.to_hex()
    }

    /// Copy with the given bit positions inverted (for noise experiments).
    pub fn with_flips(&self, positions: &[usize]) -> Self {
        let mut out = self.clone();
        for &p in positions {
            out.bits.flip(p);
        }
        out
    }
}

/// Fixed-width lowercase hex of the two's-complement quantized offset.
pub fn fmt_value_base16(offset_hz: f64, params: &EncodingParams) -> Result<String> {
    params.validate()?;
    let flat = EncodingParams {
        mean_ideal_hz: 0.0,
        per_qubit_means_hz: None,
        ..params.clone()
    };
    let q = flat.quantize(offset_hz, 0)?;
    Ok(hex_field(q, params.digits_per_qubit))
}

fn hex_field(q: i64, digits: u32) -> String {
    let mask = (1u64 << (4 * digits)) - 1;
    format!("{:0width$x}", (q as u64) & mask, width = digits as usize)
}

pub fn build_fingerprint(values: &[f64], params: &EncodingParams) -> Result<Fingerprint> {
    params.validate()?;
    if values.is_empty() {
        return Err(Error::Empty("fingerprint needs at least one value"));
    }
    if let Some(means) = &params.per_qubit_means_hz {
        if means.len() != values.len() {
            return Err(Error::LengthMismatch {
                expected: means.len(),
                actual: values.len(),
            });
        }
    }
    let mut text = String::with_capacity(values.len() * params.digits_per_qubit as usize);
    for (i, &v) in values.iter().enumerate() {
        text.push_str(&hex_field(params.quantize(v, i)?, params.digits_per_qubit));
    }
    let bits = BitString::from_hex(&text, None)?;
    Fingerprint::from_bits(bits, params.clone(), values.len())
}

/// Fingerprint of every qubit of `snapshot`, in index order.
pub fn fingerprint_snapshot(
    snapshot: &DeviceSnapshot,
    kind: PropertyKind,
    params: &EncodingParams,
) -> Result<Fingerprint> {
    let values = extract_property(snapshot, kind)?;
    Ok(build_fingerprint(&values, params)?.with_property(kind))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn khz6() -> EncodingParams {
        EncodingParams::new(5.0e9, 1.0e3, 6).unwrap()
    }

    /// Independent decimal -> hex oracle: repeated division, with the
    /// two's complement taken as 2^bits + q for negatives.
    fn oracle_hex(q: i128, digits: usize) -> String {
        let modulus: i128 = 1 << (4 * digits);
        let mut v = if q < 0 { modulus + q } else { q };
        let mut out = Vec::new();
        for _ in 0..digits {
            out.push(b"0123456789abcdef"[(v % 16) as usize] as char);
            v /= 16;
        }
        out.iter().rev().collect()
    }

    #[test]
    fn oracle_values() {
        assert_eq!(oracle_hex(60_000, 6), "00ea60");
        assert_eq!(oracle_hex(-1, 6), "ffffff");
    }

    #[test]
    fn zero_offset() {
        assert_eq!(fmt_value_base16(0.0, &khz6()).unwrap(), "000000");
    }

    #[test]
    fn sixty_megahertz_step() {
        assert_eq!(fmt_value_base16(0.06e9, &khz6()).unwrap(), "00ea60");
    }

    #[test]
    fn minus_one_cell() {
        assert_eq!(fmt_value_base16(-1e3, &khz6()).unwrap(), "ffffff");
    }

    #[test]
    fn rounds_half_away_from_zero() {
        let p = khz6();
        assert_eq!(fmt_value_base16(500.0, &p).unwrap(), "000001");
        assert_eq!(fmt_value_base16(-500.0, &p).unwrap(), "ffffff");
        assert_eq!(fmt_value_base16(499.9, &p).unwrap(), "000000");
    }

    #[test]
    fn overflow_at_field_edges() {
        let p = EncodingParams::new(0.0, 1.0, 1).unwrap();
        assert_eq!(fmt_value_base16(7.0, &p).unwrap(), "7");
        assert_eq!(fmt_value_base16(-8.0, &p).unwrap(), "8");
        assert!(matches!(
            fmt_value_base16(8.0, &p),
            Err(Error::Overflow { .. })
        ));
        assert!(matches!(
            fmt_value_base16(-9.0, &p),
            Err(Error::Overflow { .. })
        ));
        assert!(fmt_value_base16(f64::NAN, &p).is_err());
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(EncodingParams::new(5e9, 0.0, 6).is_err());
        assert!(EncodingParams::new(5e9, 1e3, 0).is_err());
        assert!(EncodingParams::new(5e9, 1e3, 16).is_err());
    }

    #[test]
    fn five_qubits_make_120_bits() {
        let fp =
            build_fingerprint(&[4.962e9, 4.838e9, 5.037e9, 4.951e9, 5.066e9], &khz6()).unwrap();
        assert_eq!(fp.len(), 120);
        assert_eq!(fp.qubit_count(), 5);
        assert_eq!(&fp.to_hex()[0..6], &oracle_hex(-38_000, 6));
    }

    #[test]
    fn empty_values_rejected() {
        assert!(matches!(
            build_fingerprint(&[], &khz6()),
            Err(Error::Empty(_))
        ));
    }

    #[test]
    fn overflow_reports_offending_qubit() {
        let p = EncodingParams::new(5e9, 1e3, 2).unwrap();
        match build_fingerprint(&[5e9, 5e9, 5.2e9], &p) {
            Err(Error::Overflow { index, .. }) => assert_eq!(index, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn per_qubit_means() {
        let p = khz6().with_per_qubit_means(vec![5.0e9, 5.06e9]);
        let fp = build_fingerprint(&[5.0e9 + 2e3, 5.06e9 - 1e3], &p).unwrap();
        assert_eq!(fp.to_hex(), "000002ffffff");
        assert!(build_fingerprint(&[5e9], &p).is_err());
        let sel = p.select(&[1, 1, 0]).unwrap();
        assert_eq!(sel.per_qubit_means_hz, Some(vec![5.06e9, 5.06e9, 5.0e9]));
    }

    #[test]
    fn sub_half_cell_differences_agree() {
        // both lists quantize to the same integers: oracle is direct rounding
        let p = khz6();
        let a: [f64; 3] = [5.0603e9, 4.9871e9 + 100.0, 5.1200e9];
        let b: [f64; 3] = [5.0603e9 + 150.0, 4.9871e9 - 200.0, 5.1200e9 + 499.0];
        let qa: Vec<f64> = a.iter().map(|v| ((v - 5e9) / 1e3).round()).collect();
        let qb: Vec<f64> = b.iter().map(|v| ((v - 5e9) / 1e3).round()).collect();
        assert_eq!(qa, qb);
        assert_eq!(
            build_fingerprint(&a, &p).unwrap(),
            build_fingerprint(&b, &p).unwrap()
        );
    }

    proptest! {
        #[test]
        fn width_and_determinism(offsets in proptest::collection::vec(-8_000_000i64..8_000_000, 1..20)) {
            let p = khz6();
            let values: Vec<f64> = offsets.iter().map(|&q| 5e9 + q as f64 * 1e3).collect();
            let fp = build_fingerprint(&values, &p).unwrap();
            prop_assert_eq!(fp.len(), values.len() * 24);
            prop_assert_eq!(&fp, &build_fingerprint(&values, &p).unwrap());
            let expected: String = offsets.iter().map(|&q| oracle_hex(q as i128, 6)).collect();
            prop_assert_eq!(fp.to_hex(), expected);
        }

        #[test]
        fn stable_inside_cell(q in -1_000_000i64..1_000_000, delta in -0.499f64..0.499) {
            let p = khz6();
            let center = 5e9 + q as f64 * 1e3;
            let a = build_fingerprint(&[center], &p).unwrap();
            let b = build_fingerprint(&[center + delta * 1e3], &p).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn injective_on_quantized_offsets(a in -100_000i64..100_000, b in -100_000i64..100_000) {
            let p = khz6();
            let fa = build_fingerprint(&[5e9 + a as f64 * 1e3], &p).unwrap();
            let fb = build_fingerprint(&[5e9 + b as f64 * 1e3], &p).unwrap();
            prop_assert_eq!(a == b, fa == fb);
        }
    }
}
