//! q-tuple challenges and weak/strong challenge-response tables.
//!
//! A q-tuple is an ordered selection of `k` qubit indices, repetition
//! allowed, so a device with `n` qubits offers `n^k` challenges. The
//! fingerprint of a tuple is the concatenation of its qubits' encoded
//! offsets in tuple order.

use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{SecondsFormat, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use subtle::ConstantTimeEq;

use crate::calibration::{DeviceSnapshot, PropertyKind};
use crate::error::{Error, Result};
use crate::fingerprint::{build_fingerprint, EncodingParams, Fingerprint};
use crate::fuzzy::{gen_with, rep, CodeRegistry, ExtractedKey, HelperData};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QTuple(Vec<usize>);

impl QTuple {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::Empty("q-tuple needs at least one qubit"));
        }
        Ok(QTuple(indices))
    }

    /// `(0, 1, ..., n-1)`: the whole device, in index order.
    pub fn identity(n: usize) -> Self {
        QTuple((0..n).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn check_for(&self, qubits: usize) -> Result<()> {
        match self.0.iter().find(|&&i| i >= qubits) {
            Some(&index) => Err(Error::IndexOutOfRange { index, qubits }),
            None => Ok(()),
        }
    }
}

/// `n^k`, or `None` if it overflows `u128`.
pub fn challenge_space_size(n: usize, k: usize) -> Option<u128> {
    (n as u128).checked_pow(u32::try_from(k).ok()?)
}

fn tuple_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn draw(rng: &mut impl Rng, n: usize, k: usize) -> QTuple {
    QTuple((0..k).map(|_| rng.gen_range(0..n)).collect())
}

fn check_nk(n: usize, k: usize) -> Result<()> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidParam(format!(
            "need n >= 1 and k >= 1, got n={n}, k={k}"
        )));
    }
    Ok(())
}

/// Uniform draw from the `n^k` ordered tuples.
pub fn select_qtuple(n: usize, k: usize, seed: u64) -> Result<QTuple> {
    check_nk(n, k)?;
    Ok(draw(&mut tuple_rng(seed), n, k))
}

/// Everything besides the device and tuple that determines a key.
#[derive(Debug, Clone, PartialEq)]
pub struct QpufConfig {
    pub property: PropertyKind,
    pub encoding: EncodingParams,
    /// Bit errors tolerated per code block.
    pub tolerance: usize,
    pub key_len: usize,
}

impl Default for QpufConfig {
    fn default() -> Self {
        QpufConfig {
            property: PropertyKind::Frequency,
            encoding: EncodingParams::frequency_default(),
            tolerance: 8,
            key_len: 240,
        }
    }
}

impl QpufConfig {
    pub fn for_property(property: PropertyKind) -> Self {
        QpufConfig {
            property,
            encoding: EncodingParams::default_for(property),
            ..Self::default()
        }
    }
}

fn tuple_values(
    snapshot: &DeviceSnapshot,
    qtuple: &QTuple,
    property: PropertyKind,
) -> Result<Vec<f64>> {
    qtuple.check_for(snapshot.qubit_count())?;
    let qubits = snapshot.qubits();
    qtuple
        .indices()
        .iter()
        .map(|&i| match property {
            PropertyKind::Frequency => Ok(qubits[i].frequency_hz),
            PropertyKind::Anharmonicity => {
                qubits[i].anharmonicity_hz.ok_or(Error::MissingProperty {
                    qubit: i,
                    property: "anharmonicity",
                })
            }
        })
        .collect()
}

/// Fingerprint of the tuple's qubits in tuple order. Per-qubit means in
/// `encoding`, if present, are indexed by device qubit.
pub fn tuple_fingerprint(
    snapshot: &DeviceSnapshot,
    qtuple: &QTuple,
    property: PropertyKind,
    encoding: &EncodingParams,
) -> Result<Fingerprint> {
    let values = tuple_values(snapshot, qtuple, property)?;
    let encoding = encoding.select(qtuple.indices())?;
    Ok(build_fingerprint(&values, &encoding)?.with_property(property))
}

pub fn weak_qpuf_with(
    registry: &CodeRegistry,
    snapshot: &DeviceSnapshot,
    qtuple: &QTuple,
    config: &QpufConfig,
    seed: u64,
) -> Result<(ExtractedKey, HelperData)> {
    let fp = tuple_fingerprint(snapshot, qtuple, config.property, &config.encoding)?;
    gen_with(registry, &fp, config.tolerance, config.key_len, seed)
}

/// Single key from a fixed q-tuple.
pub fn weak_qpuf(
    snapshot: &DeviceSnapshot,
    qtuple: &QTuple,
    config: &QpufConfig,
    seed: u64,
) -> Result<(ExtractedKey, HelperData)> {
    weak_qpuf_with(CodeRegistry::global(), snapshot, qtuple, config, seed)
}

/// Recovers a key from a fresh snapshot given the challenge and its helper.
pub fn reconstruct_from_helper(
    snapshot: &DeviceSnapshot,
    qtuple: &QTuple,
    helper: &HelperData,
) -> Result<ExtractedKey> {
    qtuple.check_for(snapshot.qubit_count())?;
    if helper.encoding.per_qubit_means_hz.is_some() {
        // the helper's means are already in tuple order
        let values = tuple_values(snapshot, qtuple, helper.property)?;
        let fp = build_fingerprint(&values, &helper.encoding)?.with_property(helper.property);
        return rep(&fp, helper);
    }
    let fp = tuple_fingerprint(snapshot, qtuple, helper.property, &helper.encoding)?;
    rep(&fp, helper)
}

/// Recovers the key for `record` from a fresh snapshot of the device.
pub fn reconstruct_key(snapshot: &DeviceSnapshot, record: &CrpRecord) -> Result<ExtractedKey> {
    reconstruct_from_helper(snapshot, &record.qtuple, &record.helper)
}

/// Seed for the `counter`-th CRP of a table generated from `master`.
pub fn derive_seed(master: u64, counter: u64) -> u64 {
    let digest = Sha256::new()
        .chain_update(b"qpuf/crp-seed")
        .chain_update(master.to_be_bytes())
        .chain_update(counter.to_be_bytes())
        .finalize();
    u64::from_be_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// A stored challenge: the tuple, its public helper and a commitment to
/// the key. The key itself is only present in raw-key mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CrpWire", into = "CrpWire")]
pub struct CrpRecord {
    pub qtuple: QTuple,
    pub helper: HelperData,
    pub key_commitment: [u8; 32],
    pub created_at: String,
    pub device_id: Option<String>,
    /// MAC key derived from the PUF key, held by verifiers.
    pub verify_key: Option<[u8; 32]>,
    pub raw_key: Option<ExtractedKey>,
}

#[derive(Serialize, Deserialize)]
struct CrpWire {
    qtuple: QTuple,
    helper: HelperData,
    commitment_hex: String,
    created_at: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    device_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    verify_key_hex: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    key_hex: Option<String>,
}

fn hex32(text: &str, what: &str) -> Result<[u8; 32]> {
    hex::decode(text)
        .ok()
        .and_then(|b| b.try_into().ok())
        .ok_or_else(|| Error::InvalidParam(format!("{what} must be 32 bytes of hex")))
}

impl TryFrom<CrpWire> for CrpRecord {
    type Error = Error;

    fn try_from(w: CrpWire) -> Result<Self> {
        let raw_key = match w.key_hex {
            Some(h) => Some(ExtractedKey::from_hex(&h, w.helper.key_len)?),
            None => None,
        };
        Ok(CrpRecord {
            key_commitment: hex32(&w.commitment_hex, "commitment")?,
            verify_key: w
                .verify_key_hex
                .map(|h| hex32(&h, "verify key"))
                .transpose()?,
            qtuple: w.qtuple,
            helper: w.helper,
            created_at: w.created_at,
            device_id: w.device_id,
            raw_key,
        })
    }
}

impl From<CrpRecord> for CrpWire {
    fn from(r: CrpRecord) -> Self {
        CrpWire {
            qtuple: r.qtuple,
            helper: r.helper,
            commitment_hex: hex::encode(r.key_commitment),
            created_at: r.created_at,
            device_id: r.device_id,
            verify_key_hex: r.verify_key.map(hex::encode),
            key_hex: r.raw_key.map(|k| k.to_hex()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnrollOptions {
    /// Reject repeated tuples when drawing a table.
    pub distinct: bool,
    /// Keep a MAC key derived from the PUF key for online verification.
    pub store_verify_key: bool,
    /// Keep the PUF key itself in the record.
    pub store_raw_key: bool,
    /// Fixed timestamp; the current UTC time when `None`.
    pub created_at: Option<String>,
}

impl Default for EnrollOptions {
    fn default() -> Self {
        EnrollOptions {
            distinct: true,
            store_verify_key: true,
            store_raw_key: false,
            created_at: None,
        }
    }
}

impl EnrollOptions {
    fn timestamp(&self) -> String {
        self.created_at
            .clone()
            .unwrap_or_else(|| Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true))
    }
}

pub fn make_record(
    snapshot: &DeviceSnapshot,
    qtuple: QTuple,
    key: &ExtractedKey,
    helper: HelperData,
    opts: &EnrollOptions,
) -> CrpRecord {
    CrpRecord {
        qtuple,
        helper,
        key_commitment: key.commitment(),
        created_at: opts.timestamp(),
        device_id: Some(snapshot.device_id().to_string()),
        verify_key: opts.store_verify_key.then(|| key.verification_key()),
        raw_key: opts.store_raw_key.then(|| key.clone()),
    }
}

/// CRP records plus, for the enrolling caller only, the keys behind them.
#[derive(Debug, Clone)]
pub struct CrpTable {
    pub records: Vec<CrpRecord>,
    pub keys: Vec<ExtractedKey>,
}

/// One CRP per tuple; the `i`-th uses gen seed `derive_seed(seed, i)`.
pub fn strong_qpuf_for_tuples(
    snapshot: &DeviceSnapshot,
    tuples: &[QTuple],
    config: &QpufConfig,
    seed: u64,
    opts: &EnrollOptions,
) -> Result<CrpTable> {
    let registry = CodeRegistry::global();
    let rows: Vec<(CrpRecord, ExtractedKey)> = tuples
        .par_iter()
        .enumerate()
        .map(|(i, q)| {
            let (key, helper) =
                weak_qpuf_with(registry, snapshot, q, config, derive_seed(seed, i as u64))
                    .map_err(|e| e.in_tuple(i))?;
            Ok((make_record(snapshot, q.clone(), &key, helper, opts), key))
        })
        .collect::<Result<_>>()?;
    let (records, keys) = rows.into_iter().unzip();
    Ok(CrpTable { records, keys })
}

/// `count` CRPs over tuples drawn from the seeded selector.
pub fn strong_qpuf(
    snapshot: &DeviceSnapshot,
    k: usize,
    count: usize,
    config: &QpufConfig,
    seed: u64,
    opts: &EnrollOptions,
) -> Result<CrpTable> {
    let n = snapshot.qubit_count();
    check_nk(n, k)?;
    if count == 0 {
        return Err(Error::InvalidParam("count must be >= 1".into()));
    }
    if opts.distinct && challenge_space_size(n, k).is_some_and(|size| size < count as u128) {
        return Err(Error::InvalidParam(format!(
            "cannot draw {count} distinct {k}-tuples from {n} qubits"
        )));
    }
    let mut rng = tuple_rng(seed);
    let mut seen = HashSet::new();
    let mut tuples = Vec::with_capacity(count);
    while tuples.len() < count {
        let q = draw(&mut rng, n, k);
        if !opts.distinct || seen.insert(q.clone()) {
            tuples.push(q);
        }
    }
    strong_qpuf_for_tuples(snapshot, &tuples, config, seed, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResponseCheck {
    Match,
    Mismatch,
    LengthMismatch { expected: usize, actual: usize },
}

impl ResponseCheck {
    pub fn reason(self) -> &'static str {
        match self {
            ResponseCheck::Match => "ok",
            ResponseCheck::Mismatch => "commitment_mismatch",
            ResponseCheck::LengthMismatch { .. } => "length_mismatch",
        }
    }
}

pub fn check_response(record: &CrpRecord, candidate: &ExtractedKey) -> ResponseCheck {
    if candidate.len() != record.helper.key_len {
        return ResponseCheck::LengthMismatch {
            expected: record.helper.key_len,
            actual: candidate.len(),
        };
    }
    if bool::from(candidate.commitment().ct_eq(&record.key_commitment)) {
        ResponseCheck::Match
    } else {
        ResponseCheck::Mismatch
    }
}

/// True iff the candidate key opens the record's commitment.
pub fn verify_response(record: &CrpRecord, candidate: &ExtractedKey) -> bool {
    check_response(record, candidate) == ResponseCheck::Match
}

pub fn read_crp_store<R: BufRead>(reader: R) -> Result<Vec<CrpRecord>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| Error::Parse {
            line: i + 1,
            source,
        })?);
    }
    Ok(out)
}

pub fn write_crp_records<W: Write>(mut writer: W, records: &[CrpRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut writer, r)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn load_crp_store(path: impl AsRef<Path>) -> Result<Vec<CrpRecord>> {
    read_crp_store(BufReader::new(File::open(path)?))
}

/// Appends records to the store, creating it if needed.
pub fn append_crp_records(path: impl AsRef<Path>, records: &[CrpRecord]) -> Result<()> {
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    write_crp_records(BufWriter::new(file), records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::{jitter_snapshot, QubitProperties};
    use crate::fuzzy::CodeSpec;

    fn device(n: usize, seed: u64) -> DeviceSnapshot {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let qubits = (0..n)
            .map(|i| {
                QubitProperties::new(i, 5e9 + 0.06e9 * (i % 3) as f64 + rng.gen_range(-3e7..3e7))
                    .with_anharmonicity(-0.31e9 + rng.gen_range(-5e6..5e6))
            })
            .collect();
        DeviceSnapshot::new(format!("dev{seed}"), "c0", qubits, None).unwrap()
    }

    fn pinned() -> EnrollOptions {
        EnrollOptions {
            created_at: Some("2025-01-01T00:00:00Z".into()),
            ..EnrollOptions::default()
        }
    }

    #[test]
    fn challenge_space() {
        assert_eq!(challenge_space_size(127, 7), Some(127u128.pow(7)));
        assert_eq!(challenge_space_size(9, 2), Some(81));
        assert_eq!(challenge_space_size(1000, 20), None);
    }

    #[test]
    fn selection_is_seeded_and_in_range() {
        let q = select_qtuple(127, 7, 11).unwrap();
        assert_eq!(q.len(), 7);
        assert!(q.indices().iter().all(|&i| i < 127));
        assert_eq!(q, select_qtuple(127, 7, 11).unwrap());
        assert_ne!(q, select_qtuple(127, 7, 12).unwrap());
        assert!(select_qtuple(0, 3, 0).is_err());
        assert!(select_qtuple(5, 0, 0).is_err());
    }

    #[test]
    fn identity_tuple_reduces_to_full_device_key() {
        let dev = device(5, 1);
        let cfg = QpufConfig::default();
        let (k1, h1) = weak_qpuf(&dev, &QTuple::identity(5), &cfg, 3).unwrap();
        let fp =
            crate::fingerprint::fingerprint_snapshot(&dev, PropertyKind::Frequency, &cfg.encoding)
                .unwrap();
        let (k2, h2) = crate::fuzzy::gen(&fp, 8, 240, 3).unwrap();
        assert_eq!((k1, h1), (k2, h2));
    }

    #[test]
    fn seven_tuple_on_127_qubits_is_168_bits() {
        let dev = device(127, 2);
        let q = select_qtuple(127, 7, 5).unwrap();
        let (key, helper) = weak_qpuf(&dev, &q, &QpufConfig::default(), 1).unwrap();
        assert_eq!(helper.fingerprint_bits, 7 * 24);
        assert_eq!(helper.code, CodeSpec::bch(127, 71, 9));
        assert_eq!(key.len(), 240);
        assert_eq!(
            weak_qpuf(&dev, &q, &QpufConfig::default(), 1).unwrap(),
            (key, helper)
        );
    }

    #[test]
    fn out_of_range_tuple() {
        let dev = device(127, 2);
        let q = QTuple::new(vec![0, 127]).unwrap();
        assert!(matches!(
            weak_qpuf(&dev, &q, &QpufConfig::default(), 1),
            Err(Error::IndexOutOfRange {
                index: 127,
                qubits: 127
            })
        ));
    }

    #[test]
    fn strong_table_shape_and_storage() {
        let dev = device(127, 3);
        let table = strong_qpuf(&dev, 7, 100, &QpufConfig::default(), 9, &pinned()).unwrap();
        assert_eq!(table.records.len(), 100);
        assert_eq!(table.keys.len(), 100);
        let distinct: HashSet<_> = table.records.iter().map(|r| r.qtuple.clone()).collect();
        assert_eq!(distinct.len(), 100);
        for (r, k) in table.records.iter().zip(&table.keys) {
            assert!(r.raw_key.is_none());
            assert!(verify_response(r, k));
            let line = serde_json::to_string(r).unwrap();
            assert!(!line.contains(&k.to_hex()));
        }
    }

    #[test]
    fn strong_with_one_pinned_tuple_matches_weak() {
        let dev = device(20, 4);
        let q = QTuple::new(vec![3, 3, 19, 0]).unwrap();
        let cfg = QpufConfig::default();
        let table =
            strong_qpuf_for_tuples(&dev, std::slice::from_ref(&q), &cfg, 77, &pinned()).unwrap();
        let (key, helper) = weak_qpuf(&dev, &q, &cfg, derive_seed(77, 0)).unwrap();
        assert_eq!(table.keys, vec![key]);
        assert_eq!(table.records[0].helper, helper);
        // count = 1 draws the same tuple select_qtuple does
        let single = strong_qpuf(&dev, 4, 1, &cfg, 77, &pinned()).unwrap();
        assert_eq!(single.records[0].qtuple, select_qtuple(20, 4, 77).unwrap());
    }

    #[test]
    fn too_many_distinct_tuples() {
        let dev = device(3, 5);
        assert!(strong_qpuf(&dev, 1, 4, &QpufConfig::default(), 0, &pinned()).is_err());
        let relaxed = EnrollOptions {
            distinct: false,
            ..pinned()
        };
        assert_eq!(
            strong_qpuf(&dev, 1, 4, &QpufConfig::default(), 0, &relaxed)
                .unwrap()
                .records
                .len(),
            4
        );
    }

    #[test]
    fn tuple_errors_carry_position() {
        let mut qubits = device(4, 6).qubits().to_vec();
        qubits[2].anharmonicity_hz = None;
        let dev = DeviceSnapshot::new("d", "c", qubits, None).unwrap();
        let tuples = [
            QTuple::new(vec![0, 1]).unwrap(),
            QTuple::new(vec![1, 2]).unwrap(),
        ];
        let cfg = QpufConfig::for_property(PropertyKind::Anharmonicity);
        match strong_qpuf_for_tuples(&dev, &tuples, &cfg, 0, &pinned()) {
            Err(Error::Tuple {
                position: 1,
                source,
            }) => {
                assert!(matches!(*source, Error::MissingProperty { qubit: 2, .. }))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn response_checks() {
        let dev = device(5, 7);
        let cfg = QpufConfig::default();
        let table = strong_qpuf(&dev, 5, 1, &cfg, 1, &pinned()).unwrap();
        let record = &table.records[0];
        let fresh = jitter_snapshot(&dev, 1e3, 99).unwrap();
        let key = reconstruct_key(&fresh, record).unwrap();
        assert!(verify_response(record, &key));
        let zeros = ExtractedKey::from_bits(crate::bits::BitString::zeros(240));
        assert!(!verify_response(record, &zeros));
        let short = ExtractedKey::from_bits(crate::bits::BitString::zeros(128));
        assert_eq!(
            check_response(record, &short),
            ResponseCheck::LengthMismatch {
                expected: 240,
                actual: 128
            }
        );
    }

    #[test]
    fn anharmonicity_tuples_reconstruct() {
        let dev = device(9, 8);
        let cfg = QpufConfig::for_property(PropertyKind::Anharmonicity);
        let table = strong_qpuf(&dev, 4, 5, &cfg, 2, &pinned()).unwrap();
        for (r, k) in table.records.iter().zip(&table.keys) {
            assert_eq!(r.helper.property, PropertyKind::Anharmonicity);
            assert_eq!(&reconstruct_key(&dev, r).unwrap(), k);
        }
    }

    #[test]
    fn store_round_trip_and_append() {
        let dev = device(9, 9);
        let opts = EnrollOptions {
            store_raw_key: true,
            ..pinned()
        };
        let table = strong_qpuf(&dev, 3, 4, &QpufConfig::default(), 5, &opts).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("crps.jsonl");
        append_crp_records(&path, &table.records[..2]).unwrap();
        append_crp_records(&path, &table.records[2..]).unwrap();
        let back = load_crp_store(&path).unwrap();
        assert_eq!(back, table.records);
        assert_eq!(back[1].raw_key.as_ref(), Some(&table.keys[1]));
        let text = std::fs::read_to_string(&path).unwrap();
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        for field in ["qtuple", "helper", "commitment_hex", "created_at"] {
            assert!(first.get(field).is_some(), "missing {field}");
        }
    }
}
