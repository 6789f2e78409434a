//! The `angiosim` command line.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on usage errors.
//! `ANGIOSIM_THREADS` caps the worker pool (default: all cores).

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::dataset;
use crate::morphology::{self, DEFAULT_SEARCH_RADIUS, DEFAULT_THRESHOLD};
use crate::phantom::{Perturbation, Preset, SimConfig};
use crate::report::{self, DivergenceReport, CSV_HEADER};
use crate::stats::{self, EstimatorSettings, FeatureExtractor, FloorResult, HistogramSpec, Metric};
use crate::{Error, Result};

pub const THREADS_ENV: &str = "ANGIOSIM_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "angiosim",
    version,
    about = "Stochastic angiogram phantoms and task-based population evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render a dataset of angiograms.
    Generate(GenerateArgs),
    /// Estimate the center vessel thickness of every image in a directory.
    Estimate(EstimateArgs),
    /// Compare a candidate image directory against a reference directory.
    Evaluate(EvaluateArgs),
    /// Measure the noise floor of a metric on IID reference sets.
    Floor(FloorArgs),
    /// Aggregate evaluation reports into one CSV table.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
#[group(id = "model", required = true, multiple = false)]
struct ModelArgs {
    /// Model configuration file (key = value lines).
    #[arg(long, group = "model")]
    config: Option<PathBuf>,
    /// Built-in model: sim23, sim27 or sim33.
    #[arg(long, group = "model", value_parser = parse_preset)]
    preset: Option<Preset>,
}

impl ModelArgs {
    fn load(&self) -> Result<SimConfig> {
        match (&self.config, self.preset) {
            (Some(path), _) => SimConfig::load(path),
            (None, Some(p)) => Ok(p.config()),
            (None, None) => unreachable!("clap enforces one of --config/--preset"),
        }
    }
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Parameter shifts, e.g. `t0=-6,prevalence=+0.1,edge_noise=+0.2`.
    #[arg(long, value_parser = parse_perturbation, allow_hyphen_values = true)]
    perturb: Option<Perturbation>,
}

#[derive(Debug, Args)]
struct EstimatorArgs {
    #[arg(long, default_value_t = DEFAULT_SEARCH_RADIUS)]
    search_radius: f64,
    #[arg(long, default_value_t = HistogramSpec::default().lo)]
    hist_lo: f64,
    #[arg(long, default_value_t = HistogramSpec::default().hi)]
    hist_hi: f64,
    #[arg(long, default_value_t = HistogramSpec::default().bin_width)]
    bin_width: f64,
    #[arg(long, default_value_t = HistogramSpec::default().smoothing_epsilon)]
    epsilon: f64,
    /// Block size of the pooled-pixel features used by `ffd`.
    #[arg(long, default_value_t = 32)]
    block: usize,
}

impl EstimatorArgs {
    fn settings(&self) -> std::result::Result<EstimatorSettings, String> {
        let histogram = HistogramSpec {
            lo: self.hist_lo,
            hi: self.hist_hi,
            bin_width: self.bin_width,
            smoothing_epsilon: self.epsilon,
        };
        histogram.validate().map_err(|e| e.to_string())?;
        if !(self.search_radius > 0.0) {
            return Err("--search-radius must be > 0".into());
        }
        if self.block == 0 {
            return Err("--block must be > 0".into());
        }
        Ok(EstimatorSettings {
            histogram,
            search_radius: self.search_radius,
            extractor: FeatureExtractor::DownsampledPixels { block: self.block },
        })
    }
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long, default_value_t = DEFAULT_SEARCH_RADIUS)]
    search_radius: f64,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long = "cand")]
    candidate: PathBuf,
    /// Comma-separated subset of kl, js, ffd.
    #[arg(long, value_delimiter = ',', value_parser = parse_metric, default_value = "kl,js,ffd")]
    metrics: Vec<Metric>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    #[command(flatten)]
    estimator: EstimatorArgs,
    /// Noise-floor JSON written by `angiosim floor`.
    #[arg(long)]
    floor_from: Option<PathBuf>,
    /// Row label in aggregated tables (default: candidate directory name).
    #[arg(long)]
    label: Option<String>,
}

#[derive(Debug, Args)]
struct FloorArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    reps: usize,
    #[arg(long, value_parser = parse_metric)]
    metric: Metric,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    estimator: EstimatorArgs,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Report files or glob patterns.
    #[arg(long, num_args = 1.., required = true)]
    runs: Vec<String>,
    #[arg(long)]
    out: PathBuf,
}

fn parse_preset(s: &str) -> std::result::Result<Preset, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_metric(s: &str) -> std::result::Result<Metric, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_perturbation(s: &str) -> std::result::Result<Perturbation, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match worker_pool() {
        Ok(Some(pool)) => pool.install(|| dispatch(cli.command)),
        Ok(None) => dispatch(cli.command),
        Err(msg) => Err(Failure::Usage(msg)),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn worker_pool() -> std::result::Result<Option<rayon::ThreadPool>, String> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map(Some)
        .map_err(|e| e.to_string())
}

fn dispatch(command: Command) -> CmdResult {
    match command {
        Command::Generate(a) => cmd_generate(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Floor(a) => cmd_floor(a),
        Command::Report(a) => cmd_report(a),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn cmd_generate(a: GenerateArgs) -> CmdResult {
    if a.count == 0 {
        return Err(Failure::Usage("--count must be at least 1".into()));
    }
    let mut config = a.model.load()?;
    if let Some(p) = &a.perturb {
        config = config.perturbed(p)?;
    }
    let manifest = dataset::generate_batch(&config, a.count, a.seed, &a.out)?;
    println!(
        "generated {} images in {}",
        manifest.entries.len(),
        a.out.display()
    );
    println!("aneurysm fraction: {:.4}", manifest.aneurysm_fraction());
    println!("config digest: {}", manifest.config_digest);
    Ok(())
}

fn cmd_estimate(a: EstimateArgs) -> CmdResult {
    if !a.input.is_dir() {
        return Err(Failure::Runtime(Error::validation(format!(
            "{}: not a readable directory",
            a.input.display()
        ))));
    }
    let batch = morphology::estimate_batch(&a.input, a.threshold, a.search_radius)?;
    batch.save_csv(&a.out)?;
    for (file, err) in &batch.errors {
        eprintln!("warning: {file}: {err}");
    }
    let samples = batch.samples(a.input.display().to_string());
    println!("images: {}", batch.records.len());
    println!("invalid: {}", batch.invalid_count());
    println!("unreadable: {}", batch.errors.len());
    println!("mean thickness: {:.4} px", samples.mean());
    println!("std thickness: {:.4} px", samples.std());
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs) -> CmdResult {
    let settings = a.estimator.settings().map_err(Failure::Usage)?;
    let mut metrics = a.metrics.clone();
    metrics.dedup();
    let label = a.label.clone().unwrap_or_else(|| {
        a.candidate
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| a.candidate.display().to_string())
    });
    let mut rep = report::evaluate(
        &a.reference,
        &a.candidate,
        &metrics,
        a.threshold,
        &settings,
        label,
    )?;
    if let Some(path) = &a.floor_from {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let floor: FloorResult = serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.clone(),
            message: e.to_string(),
        })?;
        rep.attach_floor(&floor)?;
    }
    write_file(&a.out, &rep.to_json())?;
    let csv_path = a.out.with_extension("csv");
    write_file(&csv_path, &format!("{CSV_HEADER}\n{}\n", rep.csv_row()))?;
    print_report(&rep);
    Ok(())
}

fn print_report(r: &DivergenceReport) {
    println!("n_ref: {}  n_cand: {}", r.n_ref, r.n_cand);
    for m in [Metric::Kl, Metric::Js, Metric::Frechet] {
        if let Some(v) = r.metric(m) {
            println!("{m}: {v:.6}");
        }
    }
    if let (Some(f), Some(above)) = (&r.noise_floor, r.above_floor) {
        println!(
            "{} floor: {:.6} ± {:.6}; above floor (3σ): {above}",
            f.metric, f.mean, f.std
        );
    }
}

fn cmd_floor(a: FloorArgs) -> CmdResult {
    if a.n < 100 {
        return Err(Failure::Usage(format!(
            "--n must be at least 100, got {}",
            a.n
        )));
    }
    if a.reps == 0 {
        return Err(Failure::Usage("--reps must be at least 1".into()));
    }
    let settings = a.estimator.settings().map_err(Failure::Usage)?;
    let config = a.model.load()?;
    let floor = stats::noise_floor(&config, a.n, a.reps, a.metric, a.seed, &settings)?;
    let mut json = serde_json::to_string_pretty(&floor).expect("serializable");
    json.push('\n');
    write_file(&a.out, &json)?;
    println!(
        "{} floor over {} replicates at n = {}: {:.6} ± {:.6}",
        floor.metric, floor.replicates, floor.n, floor.mean, floor.std
    );
    if let Some(w) = &floor.warning {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn cmd_report(a: ReportArgs) -> CmdResult {
    let mut paths = Vec::new();
    for pattern in &a.runs {
        let matches = glob::glob(pattern)
            .map_err(|e| Failure::Usage(format!("bad pattern {pattern:?}: {e}")))?;
        let mut found: Vec<PathBuf> = matches.filter_map(|m| m.ok()).collect();
        if found.is_empty() && Path::new(pattern).is_file() {
            found.push(PathBuf::from(pattern));
        }
        paths.extend(found);
    }
    paths.sort();
    paths.dedup();
    if paths.is_empty() {
        return Err(Failure::Runtime(Error::validation(format!(
            "no report files match {:?}",
            a.runs
        ))));
    }
    let table = report::aggregate_reports(&paths)?;
    write_file(&a.out, &table)?;
    println!(
        "aggregated {} reports into {}",
        paths.len(),
        a.out.display()
    );
    Ok(())
}
