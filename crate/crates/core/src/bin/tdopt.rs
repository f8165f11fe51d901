use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use tdopt::harness::{
    dataset, emit_report, prepare_datasets, render, run_prepared, BenchmarkConfig, BenchmarkOutput, CellResult,
    ClockMode, DecompositionTemplate, ReportFormat,
};
use tdopt::models::Family;
use tdopt::optim::{OptimizerConfig, OptimizerFamily};
use tdopt::Error;

#[derive(Parser)]
#[command(name = "tdopt", version, about = "Tensor decomposition optimizers and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a benchmark grid from a JSON config.
    Bench(BenchArgs),
    /// Decompose one tensor file with one optimizer.
    Decompose(DecomposeArgs),
    /// Write a synthetic exact-rank tensor as an IDX file.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => ReportFormat::Csv,
            Format::Json => ReportFormat::Json,
        }
    }
}

#[derive(Args)]
struct Output {
    /// Report path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Include loss histories in JSON reports.
    #[arg(long)]
    histories: bool,
    /// Replace wall-clock timing with a counter that advances one tick per reading.
    #[arg(long, value_name = "TICK")]
    fake_clock: Option<f64>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Run only this seed instead of the config's list.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_batches: Option<usize>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct DecomposeArgs {
    /// IDX tensor file.
    #[arg(long)]
    input: PathBuf,
    /// Optimizer JSON (a name or an object with overrides); overrides --optimizer.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "VecHGrad")]
    optimizer: String,
    #[arg(long, default_value = "CP")]
    decomposition: String,
    #[arg(long, default_value_t = 10)]
    rank: usize,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    q: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Split along the first mode and decompose only the first N batches.
    #[arg(long)]
    max_batches: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SynthArgs {
    /// JSON with any of dims, decomposition, rank, noise_sigma, seed.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "8,8,8")]
    dims: Vec<usize>,
    #[arg(long, default_value = "CP")]
    decomposition: String,
    #[arg(long, default_value_t = 3)]
    rank: usize,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct SynthFile {
    dims: Option<[usize; 3]>,
    decomposition: Option<Family>,
    rank: Option<usize>,
    noise_sigma: Option<f64>,
    seed: Option<u64>,
}

/// Error with the exit code it maps to.
struct Failure(u8, String);

fn config_err(e: impl std::fmt::Display) -> Failure {
    Failure(1, e.to_string())
}

fn data_err(e: Error) -> Failure {
    match e {
        Error::Config(_) | Error::ShapeMismatch(_) => Failure(1, e.to_string()),
        other => Failure(2, other.to_string()),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

fn clock(out: &Output) -> ClockMode {
    out.fake_clock.map_or(ClockMode::Monotonic, |tick| ClockMode::Fake { tick })
}

fn write_output(result: &BenchmarkOutput, out: &Output) -> Result<(), Failure> {
    let format = out.format.into();
    match &out.out {
        Some(path) => emit_report(result, format, path, out.histories).map_err(config_err)?,
        None => print!("{}", render(result, format, out.histories).map_err(config_err)?),
    }
    Ok(())
}

fn finish(result: &BenchmarkOutput) -> u8 {
    let failed: Vec<&CellResult> = result.cells.iter().filter(|c| c.outcome.is_err()).collect();
    for c in &failed {
        if let Err(e) = &c.outcome {
            eprintln!(
                "cell {} / {} / {} / seed {} / batch {} failed: {e}",
                c.dataset,
                c.decomposition,
                c.optimizer.name(),
                c.seed,
                c.batch_index
            );
        }
    }
    if failed.is_empty() {
        0
    } else {
        3
    }
}

fn bench(args: BenchArgs) -> Result<u8, Failure> {
    let mut cfg = BenchmarkConfig::from_json(&read(&args.config)?).map_err(config_err)?;
    if let Some(seed) = args.seed {
        cfg.seeds = vec![seed];
    }
    if args.max_batches.is_some() {
        cfg.max_batches = args.max_batches;
    }
    cfg.validate().map_err(config_err)?;
    let data = prepare_datasets(&cfg).map_err(data_err)?;
    let result = run_prepared(&cfg, &data, args.workers, clock(&args.output)).map_err(config_err)?;
    write_output(&result, &args.output)?;
    Ok(finish(&result))
}

fn decompose(args: DecomposeArgs) -> Result<u8, Failure> {
    let optimizer: OptimizerConfig = match &args.config {
        Some(path) => serde_json::from_str(&read(path)?).map_err(config_err)?,
        None => OptimizerConfig::new(args.optimizer.parse::<OptimizerFamily>().map_err(config_err)?),
    };
    let family: Family = args.decomposition.parse().map_err(config_err)?;
    let name = args
        .input
        .file_stem()
        .map_or_else(|| "input".to_string(), |s| s.to_string_lossy().into_owned());
    let cfg = BenchmarkConfig {
        datasets: vec![dataset::DatasetSpec {
            name,
            source: dataset::DatasetSource::IdxFile { path: args.input.clone() },
            batch_size: args.batch_size,
        }],
        decompositions: vec![DecompositionTemplate { family, rank: args.rank, p: args.p, q: args.q }],
        optimizers: vec![optimizer],
        seeds: vec![args.seed],
        max_batches: args.max_batches,
    };
    cfg.validate().map_err(config_err)?;
    let data = prepare_datasets(&cfg).map_err(data_err)?;
    let result = run_prepared(&cfg, &data, args.workers, clock(&args.output)).map_err(config_err)?;
    write_output(&result, &args.output)?;
    Ok(finish(&result))
}

fn synth(args: SynthArgs) -> Result<u8, Failure> {
    let file: SynthFile = match &args.config {
        Some(path) => serde_json::from_str(&read(path)?).map_err(config_err)?,
        None => SynthFile::default(),
    };
    let dims = match file.dims {
        Some(d) => d,
        None => <[usize; 3]>::try_from(args.dims.as_slice())
            .map_err(|_| config_err(format!("--dims needs three sizes, got {:?}", args.dims)))?,
    };
    let family = match file.decomposition {
        Some(f) => f,
        None => args.decomposition.parse().map_err(config_err)?,
    };
    let (tensor, _) = dataset::synthesize_tensor(
        dims,
        family,
        file.rank.unwrap_or(args.rank),
        file.noise_sigma.unwrap_or(args.noise),
        file.seed.unwrap_or(args.seed),
    )
    .map_err(config_err)?;
    dataset::write_idx_f64(&args.out, &tensor).map_err(config_err)?;
    Ok(0)
}

fn main() -> ExitCode {
    // usage errors count as config errors, not clap's default exit status 2
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Bench(a) => bench(a),
        Command::Decompose(a) => decompose(a),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("tdopt: {msg}");
            ExitCode::from(code)
        }
    }
}
