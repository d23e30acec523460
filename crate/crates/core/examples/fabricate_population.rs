//! Simulate a batch of chips on each lattice and write them as snapshot lines.
//!
//! ```text
//! cargo run --example fabricate_population -- [chips] [out.jsonl]
//! ```

use qpuf::calibration::save_snapshots;
use qpuf::fabsim::{
    build_topology, fabricate_batch, plan_frequencies, FabParams, LatticeSize, TopologyKind,
    DEFAULT_BASE_HZ, DEFAULT_SIGMA_F_HZ, DEFAULT_STEP_HZ,
};

fn main() -> qpuf::Result<()> {
    let mut args = std::env::args().skip(1);
    let chips: usize = args.next().map_or(1000, |s| s.parse().expect("chip count"));
    let out = args.next();

    let layouts = [
        (
            TopologyKind::Grid,
            LatticeSize::Cells {
                width: 3,
                height: 3,
            },
        ),
        (
            TopologyKind::HeavySquare,
            LatticeSize::Cells {
                width: 3,
                height: 3,
            },
        ),
        (
            TopologyKind::HeavyHexagon,
            LatticeSize::Cells {
                width: 2,
                height: 2,
            },
        ),
        (TopologyKind::HeavyHexagon, LatticeSize::Eagle127),
    ];
    for (kind, size) in layouts {
        let topo = build_topology(kind, size)?;
        let plan = plan_frequencies(&topo, DEFAULT_BASE_HZ, DEFAULT_STEP_HZ)?;
        println!(
            "{kind:?} {size}: {} qubits, {} couplers, {} frequency groups, proper: {}",
            topo.num_nodes,
            topo.edges.len(),
            plan.num_colors(),
            plan.is_proper()
        );
    }

    let topo = build_topology(
        TopologyKind::Grid,
        LatticeSize::Cells {
            width: 3,
            height: 3,
        },
    )?;
    let plan = plan_frequencies(&topo, DEFAULT_BASE_HZ, DEFAULT_STEP_HZ)?;
    let batch = fabricate_batch(&plan, &FabParams::new(DEFAULT_SIGMA_F_HZ, chips, 1))?;

    // spread of qubit 0 across the batch
    let f0: Vec<f64> = batch.iter().map(|c| c.qubits()[0].frequency_hz).collect();
    let mean = f0.iter().sum::<f64>() / f0.len() as f64;
    let std = (f0.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / f0.len() as f64).sqrt();
    println!(
        "\n{chips} chips: qubit 0 target {:.4} GHz, mean {:.4} GHz, std {:.2} MHz",
        plan.targets_hz[0] / 1e9,
        mean / 1e9,
        std / 1e6
    );

    if let Some(path) = out {
        save_snapshots(&path, &batch)?;
        println!("wrote {path}");
    }
    Ok(())
}
