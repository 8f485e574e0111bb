//! The `qtherm` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use qtherm_core::estimate::{EstimateOptions, Method, Uncertainty};
use qtherm_core::model::PhysicalConstants;
use qtherm_core::sim::Dataset;
use serde_json::json;

use crate::config::load_config;
use crate::dataset::{generate, with_workers};
use crate::error::{Error, Result};
use crate::estimation::estimate;
use crate::harness::{load_spec, run_sweep, write_rows};
use crate::manifest::{digest, RunManifest, ARTIFACT_VERSION};
use crate::records::{load_records, save_records, write_records};

#[derive(Debug, Parser)]
#[command(
    name = "qtherm",
    about = "Qubit thermometry by two-point voltage correlation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a dataset from a TOML config and write shot records as CSV.
    Simulate(SimulateArgs),
    /// Estimate the excited-state population from a record file.
    Estimate(EstimateArgs),
    /// Run a composed experiment from a sweep spec.
    Sweep(SweepArgs),
    /// Print version information.
    Version,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Seed; drawn at random and recorded in the manifest when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Write the data to stdout; diagnostics still go to stderr.
    #[arg(long)]
    pub stdout: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Record CSV path; the manifest goes next to it with a `.json` extension.
    #[arg(long, required_unless_present = "stdout")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Record CSV file.
    pub records: PathBuf,
    #[arg(long, default_value = "correlator_exact", value_parser = parse_method)]
    pub method: Method,
    /// Estimate JSON path; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Simulation config whose readout time and T1 enable the readout
    /// correction.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Bootstrap seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub resamples: usize,
    /// Delta-method standard error instead of the bootstrap.
    #[arg(long)]
    pub analytic: bool,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub stdout: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub spec: PathBuf,
    /// Output directory for `sweep.csv` and `manifest.json`.
    #[arg(long, required_unless_present = "stdout")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: qtherm_core::Error| e.to_string())
}

/// Parses arguments and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Simulate(args) => simulate(args),
        Command::Estimate(args) => estimate_cmd(args),
        Command::Sweep(args) => sweep(args),
        Command::Version => {
            println!("qtherm {ARTIFACT_VERSION}");
            println!("constants {}", PhysicalConstants::TABLE_VERSION);
            Ok(())
        }
    }
}

fn resolve_seed(flag: Option<u64>, config: Option<u64>) -> (u64, &'static str) {
    match (flag, config) {
        (Some(s), _) => (s, "flag"),
        (None, Some(s)) => (s, "config"),
        (None, None) => (rand::random(), "random"),
    }
}

fn stdout_data(write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    write(&mut lock)?;
    lock.flush().map_err(|e| Error::io("<stdout>", e))
}

fn csv_to_io(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io("<stdout>", io),
        other => Error::Usage(format!("{other:?}")),
    }
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let file = load_config(&args.config)?;
    let (seed, seed_source) = resolve_seed(args.common.seed, file.seed);
    let config = file.sim_config(seed);
    let mut manifest = RunManifest::new("simulate", &(&config, &file.protocol), seed, seed_source);
    manifest.workers = args.common.workers;
    manifest.inputs.push(args.config.clone());
    let dataset = with_workers(args.common.workers, || {
        generate(&config, &file.protocol, false)
    })??;
    if args.common.stdout {
        stdout_data(|w| write_records(w, &dataset).map_err(csv_to_io))?;
    }
    if let Some(out) = &args.out {
        if !args.common.stdout {
            save_records(out, &dataset)?;
            manifest.outputs.push(out.clone());
        }
        let sidecar = out.with_extension("json");
        manifest.outputs.push(sidecar.clone());
        manifest.details = json!({
            "config": config,
            "protocol": file.protocol,
            "records": dataset.len(),
        });
        manifest.finish();
        manifest.save(&sidecar)?;
        eprintln!("wrote {} records, seed {seed}", dataset.len());
    }
    Ok(())
}

fn estimate_cmd(args: EstimateArgs) -> Result<()> {
    let bytes = std::fs::read(&args.records).map_err(|e| Error::io(&args.records, e))?;
    let records = load_records(&args.records)?;
    let dataset = Dataset::from_records(records);
    let mut options = EstimateOptions {
        t1_correction: None,
        uncertainty: if args.analytic {
            Uncertainty::Analytic
        } else {
            Uncertainty::Bootstrap {
                resamples: args.resamples,
                seed: args.seed,
            }
        },
    };
    let mut inputs = vec![args.records.clone()];
    if let Some(path) = &args.config {
        let file = load_config(path)?;
        if file.apparatus.t_meas > 0.0 {
            options = options.with_t1_correction(file.apparatus.t_meas, file.qubit.t1);
        }
        inputs.push(path.clone());
    }
    let input_digest = digest(&bytes);
    let mut manifest = RunManifest::new(
        "estimate",
        &(&args.method, &options, &input_digest),
        args.seed,
        "flag",
    );
    manifest.workers = args.workers;
    manifest.inputs = inputs;
    let est = with_workers(args.workers, || estimate(&dataset, args.method, &options))??;
    let text = serde_json::to_string_pretty(&est).expect("estimate serializes") + "\n";
    if args.stdout || args.out.is_none() {
        stdout_data(|w| {
            w.write_all(text.as_bytes())
                .map_err(|e| Error::io("<stdout>", e))
        })?;
    }
    if let Some(out) = &args.out {
        std::fs::write(out, &text).map_err(|e| Error::io(out, e))?;
        let path = out.with_extension("manifest.json");
        manifest.outputs = vec![out.clone(), path.clone()];
        manifest.details = json!({ "options": options, "records_sha256": input_digest });
        manifest.finish();
        manifest.save(&path)?;
    }
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<()> {
    let spec = load_spec(&args.spec)?;
    let (seed, seed_source) = resolve_seed(args.common.seed, None);
    let mut manifest = RunManifest::new("sweep", &spec, seed, seed_source);
    manifest.workers = args.common.workers;
    manifest.inputs.push(args.spec.clone());
    let output = with_workers(args.common.workers, || run_sweep(&spec, seed))??;
    if args.common.stdout {
        stdout_data(|w| write_rows(w, &output.rows).map_err(csv_to_io))?;
    }
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let csv_path = dir.join("sweep.csv");
        let manifest_path = dir.join("manifest.json");
        save_rows(&csv_path, &output.rows)?;
        manifest.outputs = vec![csv_path, manifest_path.clone()];
        manifest.details = json!({ "spec": spec, "result": output });
        manifest.finish();
        manifest.save(&manifest_path)?;
        eprintln!("wrote {} rows, seed {seed}", output.rows.len());
    }
    Ok(())
}

fn save_rows(path: &Path, rows: &[crate::harness::SweepRow]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_rows(std::io::BufWriter::new(file), rows).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Usage(format!("{other:?}")),
    })
}
