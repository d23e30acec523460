//! Per-cycle qubit property data and the line-delimited JSON snapshot format.
//!
//! Each line of a snapshot file holds one [`DeviceSnapshot`]:
//!
//! ```text
//! {"device_id":"qc-05","cycle_id":"2024-05-01","qubits":[{"index":0,"frequency_hz":4.962e9,"anharmonicity_hz":-3.43e8,"t1_s":null}, ...],"edges":[[0,1],[1,2]]}
//! ```
//!
//! Unknown fields are ignored when reading and never written back.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cycle-to-cycle measurement noise for synthetic re-characterization.
pub const DEFAULT_SIGMA_MEAS_HZ: f64 = 1.0e3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitProperties {
    pub index: usize,
    pub frequency_hz: f64,
    pub anharmonicity_hz: Option<f64>,
    pub t1_s: Option<f64>,
}

impl QubitProperties {
    pub fn new(index: usize, frequency_hz: f64) -> Self {
        QubitProperties {
            index,
            frequency_hz,
            anharmonicity_hz: None,
            t1_s: None,
        }
    }

    pub fn with_anharmonicity(mut self, hz: f64) -> Self {
        self.anharmonicity_hz = Some(hz);
        self
    }

    pub fn with_t1(mut self, seconds: f64) -> Self {
        self.t1_s = Some(seconds);
        self
    }
}

/// Which physical property feeds a fingerprint. T1 is deliberately absent:
/// it drifts between calibration cycles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PropertyKind {
    Frequency,
    Anharmonicity,
}

impl PropertyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PropertyKind::Frequency => "frequency",
            PropertyKind::Anharmonicity => "anharmonicity",
        }
    }
}

impl fmt::Display for PropertyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PropertyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frequency" => Ok(PropertyKind::Frequency),
            "anharmonicity" => Ok(PropertyKind::Anharmonicity),
            other => Err(Error::InvalidParam(format!("unknown property {other:?}"))),
        }
    }
}

/// One calibration cycle of one device. Qubits are held in index order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviceSnapshot {
    device_id: String,
    cycle_id: String,
    qubits: Vec<QubitProperties>,
    edges: Option<Vec<(usize, usize)>>,
}

#[derive(Deserialize)]
struct RawSnapshot {
    device_id: String,
    cycle_id: String,
    qubits: Vec<QubitProperties>,
    edges: Option<Vec<(usize, usize)>>,
}

impl<'de> Deserialize<'de> for DeviceSnapshot {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawSnapshot::deserialize(d)?;
        DeviceSnapshot::new(raw.device_id, raw.cycle_id, raw.qubits, raw.edges)
            .map_err(serde::de::Error::custom)
    }
}

impl DeviceSnapshot {
    /// Validates and sorts `qubits` by index.
    pub fn new(
        device_id: impl Into<String>,
        cycle_id: impl Into<String>,
        mut qubits: Vec<QubitProperties>,
        edges: Option<Vec<(usize, usize)>>,
    ) -> Result<Self> {
        if qubits.is_empty() {
            return Err(Error::Validation("snapshot has no qubits".into()));
        }
        qubits.sort_by_key(|q| q.index);
        let n = qubits.len();
        let mut seen = HashSet::with_capacity(n);
        for q in &qubits {
            if !seen.insert(q.index) {
                return Err(Error::Validation(format!(
                    "duplicate qubit index {}",
                    q.index
                )));
            }
            if q.index >= n {
                return Err(Error::Validation(format!(
                    "qubit indices must be contiguous from 0; found {} in a {n}-qubit snapshot",
                    q.index
                )));
            }
            if !(q.frequency_hz.is_finite() && q.frequency_hz > 0.0) {
                return Err(Error::Validation(format!(
                    "qubit {} has non-positive frequency {}",
                    q.index, q.frequency_hz
                )));
            }
            if q.anharmonicity_hz.is_some_and(|a| !a.is_finite()) {
                return Err(Error::Validation(format!(
                    "qubit {} has non-finite anharmonicity",
                    q.index
                )));
            }
        }
        if let Some(edges) = &edges {
            for &(a, b) in edges {
                if a == b {
                    return Err(Error::Validation(format!("self-loop on qubit {a}")));
                }
                if a >= n || b >= n {
                    return Err(Error::Validation(format!(
                        "edge ({a}, {b}) references a missing qubit"
                    )));
                }
            }
        }
        Ok(DeviceSnapshot {
            device_id: device_id.into(),
            cycle_id: cycle_id.into(),
            qubits,
            edges,
        })
    }

    /// Snapshot with only frequencies set.
    pub fn from_frequencies(
        device_id: impl Into<String>,
        cycle_id: impl Into<String>,
        frequencies: &[f64],
    ) -> Result<Self> {
        let qubits = frequencies
            .iter()
            .enumerate()
            .map(|(i, &f)| QubitProperties::new(i, f))
            .collect();
        DeviceSnapshot::new(device_id, cycle_id, qubits, None)
    }

    pub fn device_id(&self) -> &str {
        &self.device_id
    }

    pub fn cycle_id(&self) -> &str {
        &self.cycle_id
    }

    pub fn qubits(&self) -> &[QubitProperties] {
        &self.qubits
    }

    pub fn qubit_count(&self) -> usize {
        self.qubits.len()
    }

    pub fn edges(&self) -> Option<&[(usize, usize)]> {
        self.edges.as_deref()
    }

    pub fn with_cycle_id(mut self, cycle_id: impl Into<String>) -> Self {
        self.cycle_id = cycle_id.into();
        self
    }

    /// Replaces every frequency; `frequencies` must be positive and match
    /// the qubit count.
    pub fn with_frequencies(&self, frequencies: &[f64]) -> Result<Self> {
        if frequencies.len() != self.qubits.len() {
            return Err(Error::LengthMismatch {
                expected: self.qubits.len(),
                actual: frequencies.len(),
            });
        }
        let qubits = self
            .qubits
            .iter()
            .zip(frequencies)
            .map(|(q, &f)| QubitProperties {
                frequency_hz: f,
                ..q.clone()
            })
            .collect();
        DeviceSnapshot::new(
            self.device_id.clone(),
            self.cycle_id.clone(),
            qubits,
            self.edges.clone(),
        )
    }
}

/// Property values ordered by qubit index.
pub fn extract_property(snapshot: &DeviceSnapshot, kind: PropertyKind) -> Result<Vec<f64>> {
    snapshot
        .qubits
        .iter()
        .map(|q| match kind {
            PropertyKind::Frequency => Ok(q.frequency_hz),
            PropertyKind::Anharmonicity => q.anharmonicity_hz.ok_or(Error::MissingProperty {
                qubit: q.index,
                property: "anharmonicity",
            }),
        })
        .collect()
}

/// Synthetic re-characterization: every frequency gets independent Gaussian
/// noise of standard deviation `sigma_meas_hz`.
pub fn jitter_snapshot(
    snapshot: &DeviceSnapshot,
    sigma_meas_hz: f64,
    seed: u64,
) -> Result<DeviceSnapshot> {
    if !(sigma_meas_hz >= 0.0 && sigma_meas_hz.is_finite()) {
        return Err(Error::InvalidParam(format!(
            "sigma_meas must be finite and >= 0, got {sigma_meas_hz}"
        )));
    }
    if sigma_meas_hz == 0.0 {
        return Ok(snapshot.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noisy: Vec<f64> = snapshot
        .qubits
        .iter()
        .map(|q| {
            let z: f64 = StandardNormal.sample(&mut rng);
            q.frequency_hz + sigma_meas_hz * z
        })
        .collect();
    snapshot.with_frequencies(&noisy)
}

pub fn read_snapshots<R: BufRead>(reader: R) -> Result<Vec<DeviceSnapshot>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawSnapshot = serde_json::from_str(&line).map_err(|source| Error::Parse {
            line: i + 1,
            source,
        })?;
        let snapshot = DeviceSnapshot::new(raw.device_id, raw.cycle_id, raw.qubits, raw.edges)
            .map_err(|e| match e {
                Error::Validation(msg) => Error::Validation(format!("line {}: {msg}", i + 1)),
                other => other,
            })?;
        out.push(snapshot);
    }
    Ok(out)
}

pub fn write_snapshots<W: Write>(mut writer: W, snapshots: &[DeviceSnapshot]) -> Result<()> {
    for s in snapshots {
        serde_json::to_writer(&mut writer, s)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn load_snapshots(path: impl AsRef<Path>) -> Result<Vec<DeviceSnapshot>> {
    read_snapshots(BufReader::new(File::open(path)?))
}

pub fn save_snapshots(path: impl AsRef<Path>, snapshots: &[DeviceSnapshot]) -> Result<()> {
    write_snapshots(BufWriter::new(File::create(path)?), snapshots)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn five_qubit() -> DeviceSnapshot {
        let freqs = [4.962e9, 4.838e9, 5.037e9, 4.951e9, 5.066e9];
        let qubits = freqs
            .iter()
            .enumerate()
            .map(|(i, &f)| QubitProperties::new(i, f).with_anharmonicity(-3.4e8 + i as f64 * 1e6))
            .collect();
        DeviceSnapshot::new(
            "qc-05",
            "c0",
            qubits,
            Some(vec![(0, 1), (1, 2), (2, 3), (3, 4)]),
        )
        .unwrap()
    }

    #[test]
    fn hand_written_record_round_trips() {
        let line = r#"{"device_id":"d","cycle_id":"2024-01-01","qubits":[{"index":0,"frequency_hz":5000000000.0,"anharmonicity_hz":null,"t1_s":null},{"index":1,"frequency_hz":5060000000.0,"anharmonicity_hz":-310000000.0,"t1_s":0.0001},{"index":2,"frequency_hz":5120000000.0,"anharmonicity_hz":null,"t1_s":null},{"index":3,"frequency_hz":5000000000.0,"anharmonicity_hz":null,"t1_s":null},{"index":4,"frequency_hz":5060000000.0,"anharmonicity_hz":null,"t1_s":null}],"edges":[[0,1],[1,2]]}"#;
        let snaps = read_snapshots(line.as_bytes()).unwrap();
        assert_eq!(snaps.len(), 1);
        assert_eq!(snaps[0].qubit_count(), 5);
        let mut out = Vec::new();
        write_snapshots(&mut out, &snaps).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), format!("{line}\n"));
    }

    #[test]
    fn zero_frequency_is_a_validation_error() {
        let line = r#"{"device_id":"d","cycle_id":"c","qubits":[{"index":0,"frequency_hz":0.0,"anharmonicity_hz":null,"t1_s":null}],"edges":null}"#;
        assert!(matches!(
            read_snapshots(line.as_bytes()),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn malformed_line_is_a_parse_error_with_line_number() {
        let text = "\n{\"device_id\": 3}\n";
        match read_snapshots(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicate_and_gapped_indices() {
        let dup = vec![QubitProperties::new(0, 5e9), QubitProperties::new(0, 5e9)];
        assert!(DeviceSnapshot::new("d", "c", dup, None).is_err());
        let gap = vec![QubitProperties::new(0, 5e9), QubitProperties::new(2, 5e9)];
        assert!(DeviceSnapshot::new("d", "c", gap, None).is_err());
        let self_loop = vec![QubitProperties::new(0, 5e9), QubitProperties::new(1, 5e9)];
        assert!(DeviceSnapshot::new("d", "c", self_loop, Some(vec![(1, 1)])).is_err());
    }

    #[test]
    fn unknown_fields_ignored_and_order_normalized() {
        let line = r#"{"extra":1,"qubits":[{"frequency_hz":5.1e9,"index":1,"anharmonicity_hz":null,"t1_s":null,"gate_error":0.01},{"t1_s":null,"anharmonicity_hz":null,"index":0,"frequency_hz":4.9e9}],"cycle_id":"c","device_id":"d","edges":null}"#;
        let s = &read_snapshots(line.as_bytes()).unwrap()[0];
        assert_eq!(
            extract_property(s, PropertyKind::Frequency).unwrap(),
            vec![4.9e9, 5.1e9]
        );
        let text = serde_json::to_string(s).unwrap();
        assert!(!text.contains("extra") && !text.contains("gate_error"));
    }

    #[test]
    fn extract_frequency_near_five_ghz() {
        let f = extract_property(&five_qubit(), PropertyKind::Frequency).unwrap();
        assert_eq!(f.len(), 5);
        assert!(f.iter().all(|v| (v - 5e9).abs() < 0.3e9));
    }

    #[test]
    fn missing_anharmonicity_is_explicit() {
        let mut qubits = five_qubit().qubits().to_vec();
        qubits[3].anharmonicity_hz = None;
        let s = DeviceSnapshot::new("d", "c", qubits, None).unwrap();
        assert!(matches!(
            extract_property(&s, PropertyKind::Anharmonicity),
            Err(Error::MissingProperty { qubit: 3, .. })
        ));
    }

    #[test]
    fn jitter_zero_sigma_is_identity_and_seeded_is_deterministic() {
        let s = five_qubit();
        assert_eq!(jitter_snapshot(&s, 0.0, 9).unwrap(), s);
        let a = jitter_snapshot(&s, 1e3, 42).unwrap();
        let b = jitter_snapshot(&s, 1e3, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, s);
        assert!(jitter_snapshot(&s, -1.0, 0).is_err());
    }

    #[test]
    fn jitter_sample_std_matches_sigma() {
        let s = five_qubit();
        let base = s.qubits()[0].frequency_hz;
        let deltas: Vec<f64> = (0..10_000)
            .map(|seed| jitter_snapshot(&s, 1e3, seed).unwrap().qubits()[0].frequency_hz - base)
            .collect();
        let mean = deltas.iter().sum::<f64>() / deltas.len() as f64;
        let var =
            deltas.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (deltas.len() - 1) as f64;
        assert!((var.sqrt() - 1e3).abs() < 0.05 * 1e3, "std {}", var.sqrt());
    }

    #[test]
    fn jitter_leaves_other_properties_alone() {
        let s = five_qubit();
        let j = jitter_snapshot(&s, 1e3, 1).unwrap();
        assert_eq!(
            extract_property(&s, PropertyKind::Anharmonicity).unwrap(),
            extract_property(&j, PropertyKind::Anharmonicity).unwrap()
        );
        assert_eq!(j.edges(), s.edges());
    }
}
