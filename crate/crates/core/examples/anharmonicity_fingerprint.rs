//! Keys from anharmonicity instead of frequency.
//!
//! Anharmonicities cluster tightly around -0.31 GHz, so they are quantized
//! on a 1 kHz grid around that value.

use qpuf::calibration::{extract_property, PropertyKind};
use qpuf::challenge::{reconstruct_key, strong_qpuf, verify_response, EnrollOptions, QpufConfig};
use qpuf::fabsim::{
    build_topology, fabricate_batch, plan_frequencies, FabParams, LatticeSize, TopologyKind,
    DEFAULT_BASE_HZ, DEFAULT_SIGMA_F_HZ, DEFAULT_STEP_HZ,
};
use qpuf::fingerprint::fingerprint_snapshot;

fn main() -> qpuf::Result<()> {
    let topo = build_topology(
        TopologyKind::HeavySquare,
        LatticeSize::Cells {
            width: 2,
            height: 2,
        },
    )?;
    let plan = plan_frequencies(&topo, DEFAULT_BASE_HZ, DEFAULT_STEP_HZ)?;
    let chips = fabricate_batch(&plan, &FabParams::new(DEFAULT_SIGMA_F_HZ, 2, 8))?;

    let config = QpufConfig::for_property(PropertyKind::Anharmonicity);
    for chip in &chips {
        let anh = extract_property(chip, PropertyKind::Anharmonicity)?;
        let fp = fingerprint_snapshot(chip, PropertyKind::Anharmonicity, &config.encoding)?;
        println!(
            "{}: first qubit {:.4} MHz, fingerprint {}...",
            chip.device_id(),
            anh[0] / 1e6,
            &fp.to_hex()[..24]
        );
    }

    let table = strong_qpuf(&chips[0], 4, 5, &config, 0, &EnrollOptions::default())?;
    for r in &table.records {
        let own = reconstruct_key(&chips[0], r).is_ok_and(|k| verify_response(r, &k));
        let other = reconstruct_key(&chips[1], r).is_ok_and(|k| verify_response(r, &k));
        println!(
            "{:?}: own chip {own}, other chip {other}",
            r.qtuple.indices()
        );
    }
    Ok(())
}
