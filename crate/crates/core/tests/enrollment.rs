mod common;

use std::collections::HashSet;

use qpuf::calibration::{load_snapshots, save_snapshots, PropertyKind};
use qpuf::challenge::{
    check_response, load_crp_store, reconstruct_from_helper, reconstruct_key, strong_qpuf,
    strong_qpuf_for_tuples, verify_response, weak_qpuf, write_crp_records, EnrollOptions, QTuple,
    QpufConfig, ResponseCheck,
};
use qpuf::fingerprint::EncodingParams;

#[test]
fn snapshot_files_round_trip_across_cycles() {
    let device = common::chip(&common::grid(3, 3), 1, 0);
    let mut all = vec![device.clone()];
    all.extend(common::cycles(&device, 1e3, 10, 100));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cycles.jsonl");
    save_snapshots(&path, &all).unwrap();
    assert_eq!(load_snapshots(&path).unwrap(), all);
    assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 11);
}

#[test]
fn weak_key_is_stable_over_cycles() {
    let config = QpufConfig::default();
    let device = common::centered(&common::chip(&common::grid(5, 1), 2, 0), &config.encoding);
    let q = QTuple::identity(5);
    let (key, helper) = weak_qpuf(&device, &q, &config, 7).unwrap();
    for cycle in common::cycles(&device, 1e3, 10, 200) {
        let again = reconstruct_from_helper(&cycle, &q, &helper).unwrap();
        assert_eq!(again, key);
    }
}

#[test]
fn anharmonicity_keys_work_the_same_way() {
    let config = QpufConfig::for_property(PropertyKind::Anharmonicity);
    let device = common::chip(&common::grid(3, 3), 3, 4);
    let opts = EnrollOptions::default();
    let table = strong_qpuf(&device, 5, 10, &config, 1, &opts).unwrap();
    for (record, key) in table.records.iter().zip(&table.keys) {
        assert_eq!(record.helper.property, PropertyKind::Anharmonicity);
        assert_eq!(&reconstruct_key(&device, record).unwrap(), key);
    }
    let other = common::chip(&common::grid(3, 3), 3, 5);
    let accepted = table
        .records
        .iter()
        .filter(|r| reconstruct_key(&other, r).is_ok_and(|k| verify_response(r, &k)))
        .count();
    assert_eq!(accepted, 0);
}

#[test]
fn strong_table_on_eagle_reconstructs_from_a_later_cycle() {
    let config = QpufConfig::default();
    let device = common::centered(&common::chip(&common::eagle(), 4, 0), &config.encoding);
    let table = strong_qpuf(&device, 7, 100, &config, 9, &EnrollOptions::default()).unwrap();
    let tuples: HashSet<_> = table.records.iter().map(|r| r.qtuple.clone()).collect();
    assert_eq!(tuples.len(), 100);
    let later = &common::cycles(&device, 1e3, 1, 300)[0];
    for record in &table.records {
        let key = reconstruct_key(later, record).unwrap();
        assert_eq!(check_response(record, &key), ResponseCheck::Match);
    }
}

#[test]
fn other_chips_fail_verification() {
    let plan = common::grid(3, 3);
    let chips = common::batch(&plan, 201, 12);
    let config = QpufConfig::default();
    let table = strong_qpuf_for_tuples(
        &chips[0],
        &[QTuple::identity(9)],
        &config,
        5,
        &EnrollOptions::default(),
    )
    .unwrap();
    let record = &table.records[0];
    let passed = chips[1..]
        .iter()
        .filter(|c| reconstruct_key(c, record).is_ok_and(|k| verify_response(record, &k)))
        .count();
    assert!(passed <= 2, "{passed} of 200 imposters verified");
}

#[test]
fn store_holds_no_frequencies_or_keys_by_default() {
    let device = common::chip(&common::grid(3, 3), 6, 0);
    let config = QpufConfig::default();
    let table = strong_qpuf(&device, 4, 20, &config, 2, &EnrollOptions::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("crp.jsonl");
    write_crp_records(std::fs::File::create(&path).unwrap(), &table.records).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    for q in device.qubits() {
        assert!(!text.contains(&q.frequency_hz.to_string()));
        assert!(!text.contains(&format!("{}", q.frequency_hz.round())));
    }
    for key in &table.keys {
        assert!(!text.contains(&key.to_hex()));
    }
    let back = load_crp_store(&path).unwrap();
    assert_eq!(back, table.records);
}

#[test]
fn raw_key_mode_keeps_the_key() {
    let device = common::chip(&common::grid(3, 3), 6, 1);
    let opts = EnrollOptions {
        store_raw_key: true,
        store_verify_key: false,
        created_at: Some("2024-01-01T00:00:00Z".into()),
        ..EnrollOptions::default()
    };
    let config = QpufConfig {
        encoding: EncodingParams::new(5e9, 1e3, 6).unwrap(),
        ..QpufConfig::default()
    };
    let table = strong_qpuf(&device, 3, 2, &config, 0, &opts).unwrap();
    let r = &table.records[0];
    assert_eq!(r.raw_key.as_ref(), Some(&table.keys[0]));
    assert!(r.verify_key.is_none());
    assert_eq!(r.created_at, "2024-01-01T00:00:00Z");
}
