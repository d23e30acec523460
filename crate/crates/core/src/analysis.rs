//! Key-quality statistics: normalized Hamming weight of each key and
//! normalized Hamming distance between every pair of keys.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 50;

/// Fraction of 1 bits.
pub fn hamming_weight(key: &BitString) -> Result<f64> {
    if key.is_empty() {
        return Err(Error::Empty("Hamming weight of an empty key"));
    }
    Ok(key.count_ones() as f64 / key.len() as f64)
}

/// Fraction of positions at which `a` and `b` differ.
pub fn hamming_distance(a: &BitString, b: &BitString) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::Empty("Hamming distance of empty keys"));
    }
    Ok(a.distance(b)? as f64 / a.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub weight_counts: Vec<usize>,
    pub distance_counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HammingReport {
    pub weights: Vec<f64>,
    /// Upper triangle of the pairwise matrix, row-major.
    pub distances: Vec<f64>,
    pub weight_mean: f64,
    pub weight_std: f64,
    pub distance_mean: f64,
    pub distance_std: f64,
    pub histogram: Histogram,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    weights: &'a [f64],
    distance_mean: f64,
    distance_std: f64,
    weight_mean: f64,
    weight_std: f64,
    histogram: &'a Histogram,
}

impl HammingReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&ReportJson {
            weights: &self.weights,
            distance_mean: self.distance_mean,
            distance_std: self.distance_std,
            weight_mean: self.weight_mean,
            weight_std: self.weight_std,
            histogram: &self.histogram,
        })
        .expect("report serializes")
    }

    /// Whitespace-separated columns for external plotting:
    /// `bin_low bin_high weight_count distance_count`.
    pub fn to_columns(&self) -> String {
        let h = &self.histogram;
        let mut out = String::from("# bin_low bin_high weight_count distance_count\n");
        for i in 0..h.weight_counts.len() {
            writeln!(
                out,
                "{:.6} {:.6} {} {}",
                h.edges[i],
                h.edges[i + 1],
                h.weight_counts[i],
                h.distance_counts[i]
            )
            .expect("write to string");
        }
        out
    }

    /// True when neither histogram has mass in its first or last bin.
    pub fn extremes_empty(&self) -> bool {
        let h = &self.histogram;
        let last = h.weight_counts.len() - 1;
        h.weight_counts[0] == 0
            && h.weight_counts[last] == 0
            && h.distance_counts[0] == 0
            && h.distance_counts[last] == 0
    }
}

/// Population mean and standard deviation.
fn moments(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Counts over `bins` equal bins on [0, 1]; 1.0 falls in the last bin.
pub fn histogram_counts(xs: &[f64], bins: usize) -> Vec<usize> {
    let mut counts = vec![0; bins];
    for &x in xs {
        let i = ((x * bins as f64) as usize).min(bins - 1);
        counts[i] += 1;
    }
    counts
}

fn pack(bits: &BitString) -> Vec<u64> {
    bits.as_slice()
        .chunks(64)
        .map(|c| {
            c.iter()
                .enumerate()
                .fold(0u64, |acc, (i, &b)| acc | (b as u64) << i)
        })
        .collect()
}

pub fn analyze_keys(keys: &[BitString], bins: usize) -> Result<HammingReport> {
    if keys.len() < 2 {
        return Err(Error::InvalidParam(format!(
            "need at least two keys, got {}",
            keys.len()
        )));
    }
    if bins == 0 {
        return Err(Error::InvalidParam("bin count must be positive".into()));
    }
    let len = keys[0].len();
    if let Some(bad) = keys.iter().find(|k| k.len() != len) {
        return Err(Error::LengthMismatch {
            expected: len,
            actual: bad.len(),
        });
    }
    let weights = keys
        .iter()
        .map(hamming_weight)
        .collect::<Result<Vec<_>>>()?;
    let packed: Vec<Vec<u64>> = keys.iter().map(pack).collect();
    let distances: Vec<f64> = (0..keys.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let packed = &packed;
            (i + 1..packed.len()).map(move |j| {
                let d: u32 = packed[i]
                    .iter()
                    .zip(&packed[j])
                    .map(|(a, b)| (a ^ b).count_ones())
                    .sum();
                d as f64 / len as f64
            })
        })
        .collect();
    let (weight_mean, weight_std) = moments(&weights);
    let (distance_mean, distance_std) = moments(&distances);
    let histogram = Histogram {
        edges: (0..=bins).map(|i| i as f64 / bins as f64).collect(),
        weight_counts: histogram_counts(&weights, bins),
        distance_counts: histogram_counts(&distances, bins),
    };
    Ok(HammingReport {
        weights,
        distances,
        weight_mean,
        weight_std,
        distance_mean,
        distance_std,
        histogram,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn alternating(len: usize) -> BitString {
        (0..len).map(|i| i % 2 == 1).collect()
    }

    #[test]
    fn weights() {
        assert_eq!(hamming_weight(&BitString::zeros(240)).unwrap(), 0.0);
        assert_eq!(hamming_weight(&alternating(240)).unwrap(), 0.5);
        assert!(hamming_weight(&BitString::zeros(0)).is_err());
    }

    #[test]
    fn distances() {
        let x = alternating(240);
        let not_x: BitString = x.iter().map(|b| !b).collect();
        assert_eq!(hamming_distance(&x, &x).unwrap(), 0.0);
        assert_eq!(hamming_distance(&x, &not_x).unwrap(), 1.0);
        assert!(hamming_distance(&x, &BitString::zeros(10)).is_err());
    }

    #[test]
    fn two_identical_keys() {
        let k = alternating(240);
        let r = analyze_keys(&[k.clone(), k], DEFAULT_BINS).unwrap();
        assert_eq!(r.distances, vec![0.0]);
        assert_eq!(r.histogram.distance_counts[0], 1);
    }

    #[test]
    fn rejects_bad_input() {
        let k = alternating(8);
        assert!(analyze_keys(std::slice::from_ref(&k), 10).is_err());
        assert!(analyze_keys(&[k.clone(), alternating(9)], 10).is_err());
        assert!(analyze_keys(&[k.clone(), k], 0).is_err());
    }

    #[test]
    fn one_lands_in_last_bin() {
        assert_eq!(histogram_counts(&[0.0, 0.5, 1.0], 4), vec![1, 0, 1, 1]);
    }

    #[test]
    fn json_layout() {
        let r = analyze_keys(&[alternating(8), BitString::zeros(8)], 4).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        for field in [
            "weights",
            "distance_mean",
            "distance_std",
            "weight_mean",
            "weight_std",
        ] {
            assert!(v.get(field).is_some(), "{field}");
        }
        assert_eq!(v["histogram"]["edges"].as_array().unwrap().len(), 5);
        assert_eq!(
            v["histogram"]["distance_counts"],
            serde_json::json!([0, 0, 1, 0])
        );
        assert_eq!(r.to_columns().lines().count(), 5);
    }

    fn keys_strategy() -> impl Strategy<Value = Vec<BitString>> {
        (1usize..130).prop_flat_map(|len| {
            proptest::collection::vec(
                proptest::collection::vec(any::<bool>(), len).prop_map(BitString::new),
                2..12,
            )
        })
    }

    proptest! {
        #[test]
        fn pair_count_and_mass(keys in keys_strategy(), bins in 1usize..60) {
            let r = analyze_keys(&keys, bins).unwrap();
            let n = keys.len();
            prop_assert_eq!(r.distances.len(), n * (n - 1) / 2);
            prop_assert_eq!(r.histogram.distance_counts.iter().sum::<usize>(), r.distances.len());
            prop_assert_eq!(r.histogram.weight_counts.iter().sum::<usize>(), n);
            prop_assert!(r.distances.iter().chain(&r.weights).all(|x| (0.0..=1.0).contains(x)));
            // packed fast path agrees with the bit-by-bit definition
            let mut idx = 0;
            for i in 0..n {
                for j in i + 1..n {
                    prop_assert_eq!(r.distances[idx], hamming_distance(&keys[i], &keys[j]).unwrap());
                    idx += 1;
                }
            }
        }

        #[test]
        fn metric_axioms(
            (a, b, c) in (1usize..200).prop_flat_map(|len| {
                let v = || proptest::collection::vec(any::<bool>(), len).prop_map(BitString::new);
                (v(), v(), v())
            })
        ) {
            let d = |x: &BitString, y: &BitString| hamming_distance(x, y).unwrap();
            prop_assert_eq!(d(&a, &b), d(&b, &a));
            prop_assert_eq!(d(&a, &b) == 0.0, a == b);
            prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
        }
    }
}
