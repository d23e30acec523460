//! A CRP table of random 7-qubit challenges on a 127-qubit heavy-hex chip.
//!
//! ```text
//! cargo run --example strong_qpuf -- [crp.jsonl]
//! ```

use qpuf::analysis::analyze_keys;
use qpuf::calibration::jitter_snapshot;
use qpuf::challenge::{
    challenge_space_size, reconstruct_key, strong_qpuf, verify_response, write_crp_records,
    EnrollOptions, QpufConfig,
};
use qpuf::fabsim::{
    build_topology, fabricate_chip, plan_frequencies, FabParams, LatticeSize, TopologyKind,
    DEFAULT_BASE_HZ, DEFAULT_SIGMA_F_HZ, DEFAULT_STEP_HZ,
};

fn main() -> qpuf::Result<()> {
    let topo = build_topology(TopologyKind::HeavyHexagon, LatticeSize::Eagle127)?;
    let plan = plan_frequencies(&topo, DEFAULT_BASE_HZ, DEFAULT_STEP_HZ)?;
    let params = FabParams::new(DEFAULT_SIGMA_F_HZ, 1, 3).with_label("eagle");
    let device = fabricate_chip(&plan, &params, 0)?;

    let k = 7;
    println!(
        "{} qubits, {} ordered {k}-tuples",
        device.qubit_count(),
        challenge_space_size(device.qubit_count(), k).unwrap()
    );

    let config = QpufConfig::default();
    let table = strong_qpuf(&device, k, 100, &config, 11, &EnrollOptions::default())?;
    for r in table.records.iter().take(3) {
        println!(
            "  {:?} -> commitment {}",
            r.qtuple.indices(),
            hex::encode(&r.key_commitment[..8])
        );
    }

    let keys: Vec<_> = table.keys.iter().map(|k| k.bits().clone()).collect();
    let report = analyze_keys(&keys, 50)?;
    println!(
        "100 keys: weight mean {:.3}, pairwise distance mean {:.3}",
        report.weight_mean, report.distance_mean
    );

    let later = jitter_snapshot(&device, 1e3, 1)?;
    let ok = table
        .records
        .iter()
        .filter(|r| reconstruct_key(&later, r).is_ok_and(|key| verify_response(r, &key)))
        .count();
    println!("{ok}/100 challenges answered from a later calibration");

    if let Some(path) = std::env::args().nth(1) {
        write_crp_records(std::fs::File::create(&path)?, &table.records)?;
        println!("wrote {path}");
    }
    Ok(())
}
