//! Verifier and agents on localhost: the enrolled chip after a fresh
//! calibration, then a different chip claiming to be it.

use std::time::Duration;

use qpuf::calibration::jitter_snapshot;
use qpuf::challenge::{strong_qpuf, EnrollOptions, QpufConfig};
use qpuf::fabsim::{
    build_topology, fabricate_batch, plan_frequencies, FabParams, LatticeSize, TopologyKind,
    DEFAULT_BASE_HZ, DEFAULT_SIGMA_F_HZ, DEFAULT_STEP_HZ,
};
use qpuf::service::{run_agent, spawn_verifier, Direction, VerifierConfig};

fn main() -> qpuf::Result<()> {
    let topo = build_topology(
        TopologyKind::Grid,
        LatticeSize::Cells {
            width: 3,
            height: 3,
        },
    )?;
    let plan = plan_frequencies(&topo, DEFAULT_BASE_HZ, DEFAULT_STEP_HZ)?;
    let chips = fabricate_batch(&plan, &FabParams::new(DEFAULT_SIGMA_F_HZ, 2, 17))?;
    let (device, imposter) = (&chips[0], &chips[1]);

    let table = strong_qpuf(
        device,
        6,
        20,
        &QpufConfig::default(),
        1,
        &EnrollOptions::default(),
    )?;
    let config = VerifierConfig {
        read_timeout: Duration::from_secs(2),
        ..VerifierConfig::default()
    };
    let (addr, _verifier) = spawn_verifier(table.records, config)?;
    println!("verifier on {addr}");

    let later = jitter_snapshot(device, 1e3, 99)?;
    let genuine = run_agent(&later, addr, device.device_id())?;
    for (dir, frame) in &genuine.transcript.frames {
        let arrow = if *dir == Direction::Sent { "->" } else { "<-" };
        let text = serde_json::to_string(frame)?;
        println!("{arrow} {}", &text[..text.len().min(110)]);
    }
    println!("genuine: {:?}", genuine.verdict);

    let forged = run_agent(imposter, addr, device.device_id())?;
    println!("imposter: {:?}", forged.verdict);
    Ok(())
}
