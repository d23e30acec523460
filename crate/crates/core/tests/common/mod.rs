#![allow(dead_code)]

use qpuf::calibration::{jitter_snapshot, DeviceSnapshot};
use qpuf::fabsim::{
    build_topology, fabricate_batch, fabricate_chip, plan_frequencies, FabParams, FrequencyPlan,
    LatticeSize, TopologyKind, DEFAULT_BASE_HZ, DEFAULT_SIGMA_F_HZ, DEFAULT_STEP_HZ,
};
use qpuf::fingerprint::EncodingParams;

pub fn plan(kind: TopologyKind, size: LatticeSize) -> FrequencyPlan {
    let topo = build_topology(kind, size).unwrap();
    plan_frequencies(&topo, DEFAULT_BASE_HZ, DEFAULT_STEP_HZ).unwrap()
}

pub fn grid(width: usize, height: usize) -> FrequencyPlan {
    plan(TopologyKind::Grid, LatticeSize::Cells { width, height })
}

pub fn eagle() -> FrequencyPlan {
    plan(TopologyKind::HeavyHexagon, LatticeSize::Eagle127)
}

pub fn batch(plan: &FrequencyPlan, chips: usize, seed: u64) -> Vec<DeviceSnapshot> {
    fabricate_batch(plan, &FabParams::new(DEFAULT_SIGMA_F_HZ, chips, seed)).unwrap()
}

pub fn chip(plan: &FrequencyPlan, seed: u64, index: usize) -> DeviceSnapshot {
    fabricate_chip(plan, &FabParams::new(DEFAULT_SIGMA_F_HZ, 1, seed), index).unwrap()
}

/// The device moved to the centers of its quantization cells, so repeated
/// measurements sit as far from cell boundaries as possible.
pub fn centered(snapshot: &DeviceSnapshot, params: &EncodingParams) -> DeviceSnapshot {
    let freqs: Vec<f64> = snapshot
        .qubits()
        .iter()
        .enumerate()
        .map(|(i, q)| params.cell_center(q.frequency_hz, i).unwrap())
        .collect();
    snapshot.with_frequencies(&freqs).unwrap()
}

/// `count` re-characterizations with Gaussian noise of `sigma_hz`.
pub fn cycles(
    snapshot: &DeviceSnapshot,
    sigma_hz: f64,
    count: u64,
    seed: u64,
) -> Vec<DeviceSnapshot> {
    (0..count)
        .map(|c| {
            jitter_snapshot(snapshot, sigma_hz, seed.wrapping_add(c))
                .unwrap()
                .with_cycle_id(format!("cycle-{c}"))
        })
        .collect()
}
