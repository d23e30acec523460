//! Monte Carlo fabrication of fixed-frequency transmon devices.
//!
//! A [`Topology`] fixes the coupling graph, [`plan_frequencies`] assigns
//! each qubit a target frequency by greedy graph coloring so that coupled
//! qubits never share a target, and [`fabricate_batch`] draws every chip's
//! actual frequencies from independent Gaussians around those targets.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{DeviceSnapshot, QubitProperties};
use crate::error::{Error, Result};

/// Target spacing between adjacent frequency colors.
pub const DEFAULT_STEP_HZ: f64 = 0.06e9;
pub const DEFAULT_BASE_HZ: f64 = 5.0e9;
/// State-of-the-art fabrication imprecision.
pub const DEFAULT_SIGMA_F_HZ: f64 = 0.014e9;
pub const DEFAULT_ANHARMONICITY_HZ: f64 = -0.31e9;
pub const DEFAULT_ANHARMONICITY_SIGMA_HZ: f64 = 0.002e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TopologyKind {
    Grid,
    HeavySquare,
    HeavyHexagon,
}

impl FromStr for TopologyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid" => Ok(TopologyKind::Grid),
            "heavy-square" => Ok(TopologyKind::HeavySquare),
            "heavy-hex" | "heavy-hexagon" => Ok(TopologyKind::HeavyHexagon),
            other => Err(Error::InvalidParam(format!("unknown topology {other:?}"))),
        }
    }
}

/// Size of a lattice: base-lattice cells, or the 127-qubit heavy-hex layout
/// of IBM's Eagle processors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LatticeSize {
    /// Grid and heavy-square: `width x height` base qubits.
    /// Heavy-hexagon: `height` rows of `width` hexagons.
    Cells {
        width: usize,
        height: usize,
    },
    Eagle127,
}

impl FromStr for LatticeSize {
    type Err = Error;

    /// `"3x3"` or `"eagle"`.
    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("eagle") || s == "127" {
            return Ok(LatticeSize::Eagle127);
        }
        let parse = |v: &str| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidParam(format!("bad lattice size {s:?}")))
        };
        match s.split_once(['x', 'X']) {
            Some((w, h)) => Ok(LatticeSize::Cells {
                width: parse(w)?,
                height: parse(h)?,
            }),
            None => Err(Error::InvalidParam(format!(
                "lattice size must look like 3x3 or eagle, got {s:?}"
            ))),
        }
    }
}

impl fmt::Display for LatticeSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LatticeSize::Cells { width, height } => write!(f, "{width}x{height}"),
            LatticeSize::Eagle127 => f.write_str("eagle"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    pub kind: TopologyKind,
    pub size: LatticeSize,
    pub num_nodes: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Topology {
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.num_nodes];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        let adj = self.neighbors();
        let mut seen = vec![false; self.num_nodes];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

fn grid_edges(width: usize, height: usize) -> Vec<(usize, usize)> {
    let id = |x: usize, y: usize| y * width + x;
    let mut edges = Vec::with_capacity(2 * width * height);
    for y in 0..height {
        for x in 0..width {
            if x + 1 < width {
                edges.push((id(x, y), id(x + 1, y)));
            }
            if y + 1 < height {
                edges.push((id(x, y), id(x, y + 1)));
            }
        }
    }
    edges
}

/// Honeycomb of `rows x cols` hexagons drawn as a brick wall: horizontal
/// lines of vertices joined by vertical rungs every second column, with
/// alternate rows of bricks offset by one.
fn honeycomb(rows: usize, cols: usize) -> (usize, Vec<(usize, usize)>) {
    let row_span = |r: usize| (r % 2, r % 2 + 2 * cols);
    let mut line_ids: Vec<(usize, Vec<usize>)> = Vec::with_capacity(rows + 1);
    let mut next = 0;
    let mut edges = Vec::new();
    for y in 0..=rows {
        let spans: Vec<_> = [y.checked_sub(1), (y < rows).then_some(y)]
            .into_iter()
            .flatten()
            .map(row_span)
            .collect();
        let lo = spans.iter().map(|s| s.0).min().expect("line touches a row");
        let hi = spans.iter().map(|s| s.1).max().expect("line touches a row");
        let ids: Vec<usize> = (lo..=hi).map(|i| next + i - lo).collect();
        next += ids.len();
        edges.extend(ids.windows(2).map(|w| (w[0], w[1])));
        line_ids.push((lo, ids));
    }
    for r in 0..rows {
        let (lo_a, a) = &line_ids[r];
        let (lo_b, b) = &line_ids[r + 1];
        for j in 0..=cols {
            let x = r % 2 + 2 * j;
            edges.push((a[x - lo_a], b[x - lo_b]));
        }
    }
    (next, edges)
}

/// Inserts one new node on every edge; new nodes follow the originals in
/// edge order.
fn subdivide(num_nodes: usize, edges: &[(usize, usize)]) -> (usize, Vec<(usize, usize)>) {
    let mut out = Vec::with_capacity(2 * edges.len());
    for (i, &(a, b)) in edges.iter().enumerate() {
        let mid = num_nodes + i;
        out.push((a, mid));
        out.push((mid, b));
    }
    (num_nodes + edges.len(), out)
}

/// IBM Eagle layout: seven qubit rows (14, 15 x 5, 14) joined by rows of
/// four bridge qubits, numbered row by row the way the vendor numbers them.
fn eagle() -> (usize, Vec<(usize, usize)>) {
    let mut next = 0;
    let mut rows: Vec<Vec<(usize, usize)>> = Vec::new(); // (column, id)
    let mut edges = Vec::new();
    let mut pending_bridges: Vec<(usize, usize)> = Vec::new(); // (column, bridge id)
    for line in 0..7 {
        let cols: Vec<usize> = match line {
            0 => (0..14).collect(),
            6 => (1..15).collect(),
            _ => (0..15).collect(),
        };
        let row: Vec<(usize, usize)> = cols
            .iter()
            .map(|&c| {
                next += 1;
                (c, next - 1)
            })
            .collect();
        edges.extend(row.windows(2).map(|w| (w[0].1, w[1].1)));
        for (col, bridge) in pending_bridges.drain(..) {
            let below = row
                .iter()
                .find(|(c, _)| *c == col)
                .expect("bridge lands on row")
                .1;
            edges.push((bridge, below));
        }
        if line < 6 {
            let bridge_cols = if line % 2 == 0 {
                [0, 4, 8, 12]
            } else {
                [2, 6, 10, 14]
            };
            for col in bridge_cols {
                let above = row
                    .iter()
                    .find(|(c, _)| *c == col)
                    .expect("bridge leaves row")
                    .1;
                edges.push((above, next));
                pending_bridges.push((col, next));
                next += 1;
            }
        }
        rows.push(row);
    }
    edges.sort_unstable();
    (next, edges)
}

pub fn build_topology(kind: TopologyKind, size: LatticeSize) -> Result<Topology> {
    let (num_nodes, edges) = match (kind, size) {
        (_, LatticeSize::Cells { width, height }) if width == 0 || height == 0 => {
            return Err(Error::InvalidParam(format!(
                "lattice dimensions must be >= 1, got {size}"
            )));
        }
        (TopologyKind::Grid, LatticeSize::Cells { width, height }) => {
            (width * height, grid_edges(width, height))
        }
        (TopologyKind::HeavySquare, LatticeSize::Cells { width, height }) => {
            subdivide(width * height, &grid_edges(width, height))
        }
        (TopologyKind::HeavyHexagon, LatticeSize::Cells { width, height }) => {
            let (n, e) = honeycomb(height, width);
            subdivide(n, &e)
        }
        (TopologyKind::HeavyHexagon, LatticeSize::Eagle127) => eagle(),
        (_, LatticeSize::Eagle127) => {
            return Err(Error::InvalidParam(
                "the eagle layout is a heavy-hexagon topology".into(),
            ));
        }
    };
    let topo = Topology {
        kind,
        size,
        num_nodes,
        edges,
    };
    debug_assert!(topo.is_connected());
    Ok(topo)
}

/// Target frequency per qubit: `base + step * color`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyPlan {
    pub topology: Topology,
    pub base_freq_hz: f64,
    pub step_hz: f64,
    pub colors: Vec<usize>,
    pub targets_hz: Vec<f64>,
}

impl FrequencyPlan {
    pub fn num_colors(&self) -> usize {
        self.colors.iter().max().map_or(0, |&c| c + 1)
    }

    /// True if no edge joins two qubits of the same color.
    pub fn is_proper(&self) -> bool {
        self.topology
            .edges
            .iter()
            .all(|&(a, b)| self.colors[a] != self.colors[b])
    }
}

/// Greedy coloring in node-index order, smallest free color first.
pub fn plan_frequencies(topo: &Topology, base_freq_hz: f64, step_hz: f64) -> Result<FrequencyPlan> {
    if !(step_hz > 0.0 && step_hz.is_finite()) || !(base_freq_hz > 0.0 && base_freq_hz.is_finite())
    {
        return Err(Error::InvalidParam(format!(
            "need base > 0 and step > 0, got base {base_freq_hz}, step {step_hz}"
        )));
    }
    let adj = topo.neighbors();
    let mut colors: Vec<Option<usize>> = vec![None; topo.num_nodes];
    for u in 0..topo.num_nodes {
        let taken: Vec<usize> = adj[u].iter().filter_map(|&v| colors[v]).collect();
        colors[u] = (0..).find(|c| !taken.contains(c));
    }
    let colors: Vec<usize> = colors.into_iter().map(|c| c.expect("colored")).collect();
    let targets_hz = colors
        .iter()
        .map(|&c| base_freq_hz + step_hz * c as f64)
        .collect();
    Ok(FrequencyPlan {
        topology: topo.clone(),
        base_freq_hz,
        step_hz,
        colors,
        targets_hz,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FabParams {
    pub sigma_f_hz: f64,
    pub chips_per_batch: usize,
    pub seed: u64,
    pub batch_label: String,
    pub anharmonicity_mean_hz: f64,
    pub anharmonicity_sigma_hz: f64,
}

impl FabParams {
    pub fn new(sigma_f_hz: f64, chips_per_batch: usize, seed: u64) -> Self {
        FabParams {
            sigma_f_hz,
            chips_per_batch,
            seed,
            batch_label: "sim".into(),
            anharmonicity_mean_hz: DEFAULT_ANHARMONICITY_HZ,
            anharmonicity_sigma_hz: DEFAULT_ANHARMONICITY_SIGMA_HZ,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.batch_label = label.into();
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(self.sigma_f_hz) || !ok(self.anharmonicity_sigma_hz) {
            return Err(Error::InvalidParam(
                "standard deviations must be >= 0".into(),
            ));
        }
        if self.chips_per_batch == 0 {
            return Err(Error::InvalidParam("chips_per_batch must be >= 1".into()));
        }
        Ok(())
    }

    pub fn device_id(&self, chip: usize) -> String {
        format!("{}-{chip:04}", self.batch_label)
    }
}

/// Chip `chip` of the batch. Each chip draws from its own stream of the
/// seeded generator, so any chip can be rebuilt on its own.
pub fn fabricate_chip(
    plan: &FrequencyPlan,
    params: &FabParams,
    chip: usize,
) -> Result<DeviceSnapshot> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(chip as u64);
    let qubits = plan
        .targets_hz
        .iter()
        .enumerate()
        .map(|(i, &target)| {
            let zf: f64 = StandardNormal.sample(&mut rng);
            let za: f64 = StandardNormal.sample(&mut rng);
            QubitProperties::new(i, target + params.sigma_f_hz * zf).with_anharmonicity(
                params.anharmonicity_mean_hz + params.anharmonicity_sigma_hz * za,
            )
        })
        .collect();
    DeviceSnapshot::new(
        params.device_id(chip),
        "fab",
        qubits,
        Some(plan.topology.edges.clone()),
    )
}

pub fn fabricate_batch(plan: &FrequencyPlan, params: &FabParams) -> Result<Vec<DeviceSnapshot>> {
    params.validate()?;
    (0..params.chips_per_batch)
        .into_par_iter()
        .map(|chip| fabricate_chip(plan, params, chip))
        .collect()
}
