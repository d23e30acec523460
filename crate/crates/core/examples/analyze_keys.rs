//! Hamming weight and distance statistics for one key per chip.
//!
//! ```text
//! cargo run --release --example analyze_keys -- [chips] [histogram.txt]
//! ```

use qpuf::analysis::{analyze_keys, DEFAULT_BINS};
use qpuf::challenge::{derive_seed, weak_qpuf, QTuple, QpufConfig};
use qpuf::fabsim::{
    build_topology, fabricate_batch, plan_frequencies, FabParams, LatticeSize, TopologyKind,
    DEFAULT_BASE_HZ, DEFAULT_SIGMA_F_HZ, DEFAULT_STEP_HZ,
};

fn main() -> qpuf::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(1000, |s| s.parse().expect("chip count"));

    let topo = build_topology(
        TopologyKind::Grid,
        LatticeSize::Cells {
            width: 3,
            height: 3,
        },
    )?;
    let plan = plan_frequencies(&topo, DEFAULT_BASE_HZ, DEFAULT_STEP_HZ)?;
    let chips = fabricate_batch(&plan, &FabParams::new(DEFAULT_SIGMA_F_HZ, n, 5))?;

    let config = QpufConfig::default();
    let q = QTuple::identity(9);
    let keys = chips
        .iter()
        .enumerate()
        .map(|(i, c)| {
            Ok(weak_qpuf(c, &q, &config, derive_seed(0, i as u64))?
                .0
                .bits()
                .clone())
        })
        .collect::<qpuf::Result<Vec<_>>>()?;

    let report = analyze_keys(&keys, DEFAULT_BINS)?;
    println!("{n} keys, {} pairs", report.distances.len());
    println!(
        "weight   mean {:.4} std {:.4}",
        report.weight_mean, report.weight_std
    );
    println!(
        "distance mean {:.4} std {:.4}",
        report.distance_mean, report.distance_std
    );
    println!("nothing near 0 or 1: {}", report.extremes_empty());

    match args.next() {
        Some(path) => {
            std::fs::write(&path, report.to_columns())?;
            println!("histogram columns in {path}");
        }
        None => {
            let h = &report.histogram;
            for (i, c) in h.distance_counts.iter().enumerate().filter(|(_, &c)| c > 0) {
                println!(
                    "{:.2}-{:.2} {}",
                    h.edges[i],
                    h.edges[i + 1],
                    "#".repeat(c * 200 / report.distances.len())
                );
            }
        }
    }
    Ok(())
}
