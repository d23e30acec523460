//! Command-line front end. [`run`] does the work; the binary only maps its
//! result to an exit code.
//!
//! Exit codes: 0 success, 1 usage or configuration, 2 authentication denied,
//! 3 I/O. Failures also print one JSON object on stderr.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{ArgGroup, Args, Parser, Subcommand};
use serde_json::json;

use crate::analysis::{analyze_keys, DEFAULT_BINS};
use crate::bits::BitString;
use crate::calibration::{load_snapshots, write_snapshots, DeviceSnapshot, PropertyKind};
use crate::challenge::{
    append_crp_records, check_response, derive_seed, load_crp_store, reconstruct_key, strong_qpuf,
    strong_qpuf_for_tuples, weak_qpuf, write_crp_records, CrpRecord, EnrollOptions, QTuple,
    QpufConfig, ResponseCheck,
};
use crate::error::Error;
use crate::fabsim::{
    build_topology, fabricate_batch, plan_frequencies, FabParams, LatticeSize, TopologyKind,
    DEFAULT_BASE_HZ, DEFAULT_SIGMA_F_HZ, DEFAULT_STEP_HZ,
};
use crate::fingerprint::EncodingParams;
use crate::fuzzy::ExtractedKey;
use crate::service::{run_agent, Verifier, VerifierConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DENIED: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "qpuf", version, about = "Keys from qubit calibration data")]
pub struct Cli {
    /// Log to stderr; repeat for more detail
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a batch of chips and write their snapshots
    Fabricate(FabricateArgs),
    /// Create CRP records for one device
    Enroll(EnrollArgs),
    /// Recover the key behind a CRP record from a fresh snapshot
    Reconstruct(ReconstructArgs),
    /// Hamming weight and distance statistics over a key population
    Analyze(AnalyzeArgs),
    /// Run a verifier over a CRP store
    Serve(ServeArgs),
    /// Authenticate a device against a verifier
    Agent(AgentArgs),
}

#[derive(Debug, Args)]
pub struct FabricateArgs {
    /// grid, heavy-square or heavy-hex
    #[arg(long, default_value = "grid")]
    pub topology: TopologyKind,
    /// Unit cells as WxH, or "eagle" for the 127-qubit heavy-hex layout
    #[arg(long, default_value = "3x3")]
    pub size: LatticeSize,
    #[arg(long, default_value_t = DEFAULT_SIGMA_F_HZ)]
    pub sigma_f: f64,
    #[arg(long, default_value_t = DEFAULT_BASE_HZ)]
    pub base: f64,
    #[arg(long, default_value_t = DEFAULT_STEP_HZ)]
    pub step: f64,
    #[arg(long)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Prefix for generated device ids
    #[arg(long, default_value = "sim")]
    pub label: String,
    /// Snapshot file; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EncodingArgs {
    #[arg(long, default_value = "frequency")]
    pub property: PropertyKind,
    /// Quantization cell in Hz; property default when omitted
    #[arg(long)]
    pub resolution: Option<f64>,
    /// Reference value subtracted before quantizing; property default when omitted
    #[arg(long)]
    pub mean: Option<f64>,
    /// Hex digits per qubit
    #[arg(long)]
    pub digits: Option<u32>,
}

impl EncodingArgs {
    fn params(&self) -> Result<EncodingParams, Error> {
        let d = EncodingParams::default_for(self.property);
        EncodingParams::new(
            self.mean.unwrap_or(d.mean_ideal_hz),
            self.resolution.unwrap_or(d.resolution_hz),
            self.digits.unwrap_or(d.digits_per_qubit),
        )
    }
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("tuple").args(["k", "full"])))]
pub struct EnrollArgs {
    #[arg(long)]
    pub snapshots: PathBuf,
    #[arg(long)]
    pub device_id: String,
    #[command(flatten)]
    pub encoding: EncodingArgs,
    /// Tuple size for random challenges
    #[arg(long)]
    pub k: Option<usize>,
    /// Use every qubit in index order (the default without --k)
    #[arg(long)]
    pub full: bool,
    /// Bit errors tolerated per code block
    #[arg(long, short = 'e', default_value_t = 8)]
    pub tolerance: usize,
    #[arg(long, default_value_t = 240)]
    pub key_len: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub crp_count: usize,
    /// Store the key itself in each record
    #[arg(long)]
    pub raw_key: bool,
    /// Add to an existing store instead of replacing it
    #[arg(long)]
    pub append: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub snapshots: PathBuf,
    #[arg(long)]
    pub store: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub record: usize,
    /// Snapshot to use; the record's device when omitted
    #[arg(long)]
    pub device_id: Option<String>,
    /// Print the recovered key
    #[arg(long)]
    pub print_key: bool,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("input").required(true).multiple(true).args(["keys", "crp", "snapshots"])))]
pub struct AnalyzeArgs {
    /// One hex key per line
    #[arg(long)]
    pub keys: Option<PathBuf>,
    /// Bit length of each key in --keys; four bits per hex digit when omitted
    #[arg(long, requires = "keys")]
    pub key_bits: Option<usize>,
    /// CRP store; keys come from stored raw keys or, with --snapshots, by reconstruction
    #[arg(long)]
    pub crp: Option<PathBuf>,
    /// Snapshot file; alone, one full-device key is enrolled per snapshot
    #[arg(long)]
    pub snapshots: Option<PathBuf>,
    #[command(flatten)]
    pub encoding: EncodingArgs,
    #[arg(long, short = 'e', default_value_t = 8)]
    pub tolerance: usize,
    #[arg(long, default_value_t = 240)]
    pub key_len: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    pub bins: usize,
    /// Histogram as whitespace-separated columns instead of JSON
    #[arg(long)]
    pub columns: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub store: PathBuf,
    #[arg(long, default_value = "127.0.0.1:7878")]
    pub listen: String,
    /// Exit after this many sessions
    #[arg(long)]
    pub max_sessions: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub timeout_secs: u64,
}

#[derive(Debug, Args)]
pub struct AgentArgs {
    #[arg(long)]
    pub snapshots: PathBuf,
    #[arg(long)]
    pub device_id: String,
    #[arg(long)]
    pub connect: String,
}

/// A failed command: its exit code and the JSON printed on stderr.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            kind: "usage",
            message: message.into(),
        }
    }

    fn denied(reason: impl Into<String>) -> Self {
        CliError {
            code: EXIT_DENIED,
            kind: "authentication_denied",
            message: reason.into(),
        }
    }

    pub fn to_json(&self) -> String {
        json!({"error": self.kind, "message": self.message, "exit_code": self.code}).to_string()
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let (code, kind) = match e.root() {
            Error::Io(_) => (EXIT_IO, "io"),
            Error::DecodeFailure { .. } => (EXIT_DENIED, "authentication_denied"),
            Error::Parse { .. } | Error::Json(_) => (EXIT_USAGE, "parse"),
            Error::Protocol(_) => (EXIT_USAGE, "protocol"),
            _ => (EXIT_USAGE, "config"),
        };
        CliError {
            code,
            kind,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Error::Io(e).into()
    }
}

type CliResult = Result<(), CliError>;

/// Parses `args` (program name first). Help and version requests print to
/// `out`; usage errors print JSON to `err`. Either way the exit code is
/// returned in place of a command.
pub fn parse_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> Result<Cli, i32>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => Ok(cli),
        Err(e) if !e.use_stderr() => {
            let _ = write!(out, "{e}");
            Err(EXIT_OK)
        }
        Err(e) => {
            let _ = writeln!(
                err,
                "{}",
                CliError::usage(e.to_string().trim_end()).to_json()
            );
            Err(EXIT_USAGE)
        }
    }
}

/// Runs `cli` and returns the exit code, printing failures to `err`.
pub fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match run(cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "{}", e.to_json());
            e.code
        }
    }
}

pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match parse_args(args, out, err) {
        Ok(cli) => execute(cli, out, err),
        Err(code) => code,
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult {
    match cli.command {
        Command::Fabricate(a) => fabricate(a, out),
        Command::Enroll(a) => enroll(a, out),
        Command::Reconstruct(a) => reconstruct(a, out),
        Command::Analyze(a) => analyze(a, out),
        Command::Serve(a) => serve(a, out),
        Command::Agent(a) => agent(a, out),
    }
}

fn fabricate(a: FabricateArgs, out: &mut dyn Write) -> CliResult {
    if a.count == 0 {
        return Err(CliError::usage("--count must be at least 1"));
    }
    let topo = build_topology(a.topology, a.size)?;
    let plan = plan_frequencies(&topo, a.base, a.step)?;
    let params = FabParams::new(a.sigma_f, a.count, a.seed).with_label(a.label);
    let chips = fabricate_batch(&plan, &params)?;
    match &a.out {
        Some(path) => {
            let file = io::BufWriter::new(File::create(path)?);
            write_snapshots(file, &chips)?;
            let summary = json!({
                "chips": chips.len(),
                "qubits": topo.num_nodes,
                "edges": topo.edges.len(),
                "colors": plan.num_colors(),
                "out": path,
            });
            writeln!(out, "{summary}")?;
        }
        None => write_snapshots(out, &chips)?,
    }
    Ok(())
}

fn find_snapshot(path: &Path, device_id: &str) -> Result<DeviceSnapshot, CliError> {
    load_snapshots(path)?
        .into_iter()
        .find(|s| s.device_id() == device_id)
        .ok_or_else(|| {
            CliError::usage(format!(
                "no snapshot for device {device_id:?} in {}",
                path.display()
            ))
        })
}

fn enroll(a: EnrollArgs, out: &mut dyn Write) -> CliResult {
    let snapshot = find_snapshot(&a.snapshots, &a.device_id)?;
    let config = QpufConfig {
        property: a.encoding.property,
        encoding: a.encoding.params()?,
        tolerance: a.tolerance,
        key_len: a.key_len,
    };
    let opts = EnrollOptions {
        store_raw_key: a.raw_key,
        ..EnrollOptions::default()
    };
    let table = match a.k {
        Some(k) => strong_qpuf(&snapshot, k, a.crp_count, &config, a.seed, &opts)?,
        None => {
            let tuples = vec![QTuple::identity(snapshot.qubit_count()); a.crp_count];
            strong_qpuf_for_tuples(&snapshot, &tuples, &config, a.seed, &opts)?
        }
    };
    if a.append {
        append_crp_records(&a.out, &table.records)?;
    } else {
        write_crp_records(io::BufWriter::new(File::create(&a.out)?), &table.records)?;
    }
    let helper = &table.records[0].helper;
    let summary = json!({
        "device_id": snapshot.device_id(),
        "tuple_size": table.records[0].qtuple.len(),
        "records": table.records.len(),
        "code": helper.code.handle(),
        "key_len": helper.key_len,
        "out": a.out,
    });
    writeln!(out, "{summary}")?;
    Ok(())
}

fn reconstruct(a: ReconstructArgs, out: &mut dyn Write) -> CliResult {
    let records = load_crp_store(&a.store)?;
    let record = records.get(a.record).ok_or_else(|| {
        CliError::usage(format!(
            "record {} not in store of {}",
            a.record,
            records.len()
        ))
    })?;
    let device = a
        .device_id
        .or_else(|| record.device_id.clone())
        .ok_or_else(|| CliError::usage("record has no device id; pass --device-id"))?;
    let snapshot = find_snapshot(&a.snapshots, &device)?;
    let deny = |reason: &str, out: &mut dyn Write| -> CliResult {
        writeln!(
            out,
            "{}",
            json!({"record": a.record, "accept": false, "reason": reason})
        )?;
        Err(CliError::denied(format!(
            "authentication is denied: {reason}"
        )))
    };
    let key = match reconstruct_key(&snapshot, record) {
        Ok(key) => key,
        Err(Error::DecodeFailure { .. }) => return deny("decode_failure", out),
        Err(e) => return Err(e.into()),
    };
    match check_response(record, &key) {
        ResponseCheck::Match => {
            let mut verdict = json!({"record": a.record, "accept": true, "reason": "ok"});
            if a.print_key {
                verdict["key_hex"] = key.to_hex().into();
            }
            writeln!(out, "{verdict}")?;
            Ok(())
        }
        other => deny(other.reason(), out),
    }
}

fn read_key_lines(path: &Path, bits: Option<usize>) -> Result<Vec<BitString>, CliError> {
    let mut keys = Vec::new();
    for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let len = bits.unwrap_or(4 * text.len());
        let key = BitString::from_hex(text, Some(len))
            .map_err(|e| CliError::usage(format!("line {}: {e}", i + 1)))?;
        keys.push(key);
    }
    Ok(keys)
}

fn record_key(
    record: &CrpRecord,
    snapshots: Option<&[DeviceSnapshot]>,
) -> Result<ExtractedKey, CliError> {
    if let Some(key) = &record.raw_key {
        return Ok(key.clone());
    }
    let snapshots = snapshots
        .ok_or_else(|| CliError::usage("CRP records hold no raw keys; pass --snapshots"))?;
    let device = record.device_id.as_deref().unwrap_or_default();
    let snapshot = snapshots
        .iter()
        .find(|s| s.device_id() == device)
        .ok_or_else(|| CliError::usage(format!("no snapshot for device {device:?}")))?;
    let key = reconstruct_key(snapshot, record)?;
    if check_response(record, &key) != ResponseCheck::Match {
        return Err(CliError::denied(format!(
            "key for device {device:?} does not match its commitment"
        )));
    }
    Ok(key)
}

fn analyze(a: AnalyzeArgs, out: &mut dyn Write) -> CliResult {
    let snapshots = a.snapshots.as_deref().map(load_snapshots).transpose()?;
    let mut keys = Vec::new();
    if let Some(path) = &a.keys {
        keys.extend(read_key_lines(path, a.key_bits)?);
    }
    if let Some(path) = &a.crp {
        for record in load_crp_store(path)? {
            keys.push(record_key(&record, snapshots.as_deref())?.bits().clone());
        }
    } else if let Some(snapshots) = &snapshots {
        let config = QpufConfig {
            property: a.encoding.property,
            encoding: a.encoding.params()?,
            tolerance: a.tolerance,
            key_len: a.key_len,
        };
        for (i, s) in snapshots.iter().enumerate() {
            let q = QTuple::identity(s.qubit_count());
            let (key, _) = weak_qpuf(s, &q, &config, derive_seed(a.seed, i as u64))?;
            keys.push(key.bits().clone());
        }
    }
    let report = analyze_keys(&keys, a.bins)?;
    let text = if a.columns {
        report.to_columns()
    } else {
        report.to_json() + "\n"
    };
    match &a.out {
        Some(path) => {
            std::fs::write(path, text)?;
            let summary = json!({
                "keys": keys.len(),
                "weight_mean": report.weight_mean,
                "distance_mean": report.distance_mean,
                "out": path,
            });
            writeln!(out, "{summary}")?;
        }
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn serve(a: ServeArgs, out: &mut dyn Write) -> CliResult {
    let records = load_crp_store(&a.store)?;
    let config = VerifierConfig {
        read_timeout: std::time::Duration::from_secs(a.timeout_secs),
        ..VerifierConfig::default()
    };
    let verifier = Arc::new(Verifier::new(records, config)?);
    let listener = TcpListener::bind(&a.listen)?;
    writeln!(
        out,
        "{}",
        json!({"listening": listener.local_addr()?.to_string()})
    )?;
    out.flush()?;
    verifier.serve(listener, a.max_sessions)?;
    Ok(())
}

fn agent(a: AgentArgs, out: &mut dyn Write) -> CliResult {
    let snapshot = find_snapshot(&a.snapshots, &a.device_id)?;
    let outcome = run_agent(&snapshot, &a.connect, &a.device_id)?;
    writeln!(
        out,
        "{}",
        serde_json::to_string(&outcome.verdict).map_err(Error::from)?
    )?;
    if outcome.verdict.accept {
        Ok(())
    } else {
        Err(CliError::denied(outcome.verdict.reason))
    }
}
