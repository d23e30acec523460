//! Enroll a five-qubit device once, re-characterize it ten times and check
//! that every cycle yields the same key.

use qpuf::analysis::hamming_distance;
use qpuf::calibration::{jitter_snapshot, DEFAULT_SIGMA_MEAS_HZ};
use qpuf::challenge::{reconstruct_from_helper, weak_qpuf, QTuple, QpufConfig};
use qpuf::fabsim::{
    build_topology, fabricate_chip, plan_frequencies, FabParams, LatticeSize, TopologyKind,
    DEFAULT_BASE_HZ, DEFAULT_SIGMA_F_HZ, DEFAULT_STEP_HZ,
};

fn main() -> qpuf::Result<()> {
    let topo = build_topology(
        TopologyKind::Grid,
        LatticeSize::Cells {
            width: 5,
            height: 1,
        },
    )?;
    let plan = plan_frequencies(&topo, DEFAULT_BASE_HZ, DEFAULT_STEP_HZ)?;
    let chip = fabricate_chip(&plan, &FabParams::new(DEFAULT_SIGMA_F_HZ, 1, 42), 0)?;

    let config = QpufConfig::default();
    let centers: Vec<f64> = chip
        .qubits()
        .iter()
        .enumerate()
        .map(|(i, q)| config.encoding.cell_center(q.frequency_hz, i))
        .collect::<qpuf::Result<_>>()?;
    let device = chip.with_frequencies(&centers)?;

    let q = QTuple::identity(device.qubit_count());
    let (key, helper) = weak_qpuf(&device, &q, &config, 7)?;
    println!(
        "enrolled {} with {}",
        device.device_id(),
        helper.code.handle()
    );
    println!("key {}", key.to_hex());

    let mut keys = Vec::new();
    for cycle in 0..10 {
        let snapshot = jitter_snapshot(&device, DEFAULT_SIGMA_MEAS_HZ, cycle)?;
        let k = reconstruct_from_helper(&snapshot, &q, &helper)?;
        println!(
            "cycle {cycle}: {}",
            if k == key { "same key" } else { "DIFFERENT" }
        );
        keys.push(k);
    }
    let worst = keys
        .iter()
        .flat_map(|a| {
            keys.iter()
                .map(move |b| hamming_distance(a.bits(), b.bits()))
        })
        .collect::<qpuf::Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    println!("largest pairwise distance: {worst}");
    Ok(())
}
