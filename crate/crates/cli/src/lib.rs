//! Command-line front end for `gridcpd`.

pub mod error;
pub mod input;
pub mod monitor;
pub mod settings;

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};

use clap::{Args, Parser, Subcommand};
use gridcpd::calibration::{calibrate, CalibrationSpec};
use gridcpd::grid::{dynamic_grid, static_grid};
use gridcpd::simharness::{benchmark_costs, estimate_delay, StreamModel, StreamSpec};
use serde::Serialize;

pub use error::{CliError, CliResult};
use settings::Settings;

#[derive(Debug, Parser)]
#[command(name = "gridcpd", version, about = "Online changepoint detection on a geometric grid")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monitor a delimited stream and print one JSON line per alarm.
    Monitor(MonitorArgs),
    /// Choose leading constants by Monte Carlo on null streams.
    Calibrate(CalibrateArgs),
    /// Estimate detection delay on simulated streams.
    Simulate(SimulateArgs),
    /// Measure update time and storage as the stream grows.
    Bench(BenchArgs),
    /// Print the grid of candidate lags at one time.
    Grid(GridArgs),
}

/// Detector options; each overrides the same key in `--config`.
#[derive(Debug, Args, Default)]
pub struct DetectorArgs {
    /// Flat key = value configuration file.
    #[arg(long)]
    pub config: Option<String>,
    /// uni_mean, chad_mean, cov_opnorm, poisson_rate or expfam_lr.
    #[arg(long)]
    pub kind: Option<String>,
    /// Observation dimension; defaults to the input width when monitoring.
    #[arg(long)]
    pub p: Option<usize>,
    /// Nominal false-alarm level inside the threshold.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Leading threshold constant (dense branch for chad_mean).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Sparse-branch constant of chad_mean in calibrated mode.
    #[arg(long)]
    pub lambda_sparse: Option<f64>,
    /// Noise standard deviation of the mean detectors.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// theory or calibrated.
    #[arg(long)]
    pub mode: Option<String>,
    /// Treat the pre-change mean as zero.
    #[arg(long)]
    pub known_pre_mean: bool,
    /// dynamic, static or full.
    #[arg(long)]
    pub grid: Option<String>,
    /// Longest stream the static or full grid must hold.
    #[arg(long)]
    pub horizon_cap: Option<usize>,
    /// Fixed noise level of cov_opnorm instead of the running estimate.
    #[arg(long)]
    pub sigma_cov_fixed: Option<f64>,
    /// poisson or gaussian.
    #[arg(long)]
    pub expfam: Option<String>,
    /// Known standard deviation of the gaussian family.
    #[arg(long)]
    pub expfam_sigma: Option<f64>,
    /// Detector label used in outputs.
    #[arg(long)]
    pub id: Option<String>,
}

impl DetectorArgs {
    fn settings(&self) -> CliResult<Settings> {
        let mut s = Settings::load(self.config.as_deref())?;
        s.set("kind", self.kind.as_ref());
        s.set("p", self.p);
        s.set("delta", self.delta);
        s.set("lambda", self.lambda);
        s.set("lambda_sparse", self.lambda_sparse);
        s.set("sigma", self.sigma);
        s.set("mode", self.mode.as_ref());
        s.flag("known_pre_mean", self.known_pre_mean);
        s.set("grid", self.grid.as_ref());
        s.set("horizon_cap", self.horizon_cap);
        s.set("sigma_cov_fixed", self.sigma_cov_fixed);
        s.set("expfam", self.expfam.as_ref());
        s.set("expfam_sigma", self.expfam_sigma);
        s.set("id", self.id.as_ref());
        Ok(s)
    }
}

#[derive(Debug, Args)]
pub struct MonitorArgs {
    #[command(flatten)]
    pub detector: DetectorArgs,
    /// Input file; standard input when absent.
    #[arg(long)]
    pub input: Option<String>,
    /// Alarm output file; standard output when absent.
    #[arg(long)]
    pub output: Option<String>,
    /// Field delimiter (a single character, or `tab`).
    #[arg(long)]
    pub delimiter: Option<String>,
    /// Skip the first line.
    #[arg(long)]
    pub header: bool,
    /// Treat the first column as an identifier copied into alarm records.
    #[arg(long)]
    pub id_col: bool,
    /// Comma-separated steps: baseline_normalize, first_difference.
    #[arg(long)]
    pub preprocess: Option<String>,
    /// Rows used to estimate the noise level before monitoring starts.
    #[arg(long)]
    pub training_prefix: Option<usize>,
    /// Reset after each alarm and keep monitoring.
    #[arg(long)]
    pub auto_reset: bool,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub detector: DetectorArgs,
    #[arg(long, default_value_t = 1000)]
    pub horizon: usize,
    #[arg(long, default_value_t = 1000)]
    pub replications: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Leave the per-stream maxima out of the report.
    #[arg(long)]
    pub no_samples: bool,
    #[arg(long)]
    pub output: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub detector: DetectorArgs,
    /// gauss_mean, gauss_cov or poisson.
    #[arg(long, default_value = "gauss_mean")]
    pub model: String,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long)]
    pub tau: Option<usize>,
    /// Comma-separated change magnitudes (gauss_mean), variance scales
    /// (gauss_cov) or post-change rates (poisson).
    #[arg(long, default_value = "1")]
    pub phi: String,
    /// Number of coordinates that change (gauss_mean).
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Noise standard deviation (gauss_mean).
    #[arg(long, default_value_t = 1.0)]
    pub noise: f64,
    /// Pre-change rate (poisson).
    #[arg(long, default_value_t = 1.0)]
    pub rate1: f64,
    #[arg(long, default_value_t = 500)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Calibrate with this many null streams before simulating.
    #[arg(long)]
    pub calibrate: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Write `phi,mean_delay` rows to this file.
    #[arg(long)]
    pub emit_csv: Option<String>,
    #[arg(long)]
    pub output: Option<String>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub detector: DetectorArgs,
    /// Comma-separated increasing times.
    #[arg(long, default_value = "1000,10000,100000")]
    pub checkpoints: String,
    #[arg(long, default_value_t = 3)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write `t,update_ns,stored_scalars` rows to this file.
    #[arg(long)]
    pub emit_csv: Option<String>,
    #[arg(long)]
    pub output: Option<String>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub t: usize,
    /// Print the static grid instead of the dynamic one.
    #[arg(long = "static")]
    pub static_grid: bool,
}

fn open_output(path: Option<&str>) -> CliResult<Option<BufWriter<File>>> {
    path.map(|p| {
        File::create(p)
            .map(BufWriter::new)
            .map_err(|e| CliError::input(format!("cannot create `{p}`: {e}")))
    })
    .transpose()
}

fn write_json<T: Serialize>(value: &T, path: Option<&str>, stdout: &mut dyn Write) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value)?;
    match open_output(path)? {
        Some(mut f) => {
            writeln!(f, "{text}")?;
            f.flush()?;
        }
        None => writeln!(stdout, "{text}")?,
    }
    Ok(())
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> CliResult<Vec<T>> {
    s.split(',')
        .map(|x| x.trim().parse::<T>().map_err(|_| CliError::input(format!("invalid {what} `{x}`"))))
        .collect()
}

fn write_csv(path: &str, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::input(format!("cannot create `{path}`: {e}")))?;
    let io = |e: csv::Error| CliError::Internal(format!("csv write failed: {e}"));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

fn run_monitor(args: MonitorArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let mut s = args.detector.settings()?;
    s.set("input", args.input.as_ref());
    s.set("output", args.output.as_ref());
    s.set("delimiter", args.delimiter.as_ref());
    s.flag("header", args.header);
    s.flag("id_col", args.id_col);
    s.set("preprocess", args.preprocess.as_ref());
    s.set("training_prefix", args.training_prefix);
    s.flag("auto_reset", args.auto_reset);

    let input: Box<dyn Read> = match s.raw("input") {
        Some(p) => Box::new(BufReader::new(
            File::open(p).map_err(|e| CliError::input(format!("cannot open `{p}`: {e}")))?,
        )),
        None => Box::new(std::io::stdin().lock()),
    };
    match open_output(s.raw("output"))? {
        Some(mut f) => monitor::monitor(&s, input, &mut f).map(|_| ()),
        None => monitor::monitor(&s, input, stdout).map(|_| ()),
    }
}

fn run_calibrate(args: CalibrateArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let cfg = args.detector.settings()?.detector(None)?;
    let mut spec = CalibrationSpec::new(cfg, args.horizon, args.replications, args.alpha, args.seed);
    spec.threads = args.threads;
    let mut report = calibrate(&spec)?;
    if args.no_samples {
        report.samples.clear();
        report.sparse_samples = None;
    }
    write_json(&report, args.output.as_deref(), stdout)
}

fn stream_spec(args: &SimulateArgs, p: usize, magnitude: f64) -> StreamSpec {
    let model = match args.model.as_str() {
        "gauss_cov" => StreamModel::GaussCov { sigma1: None, scale: Some(magnitude), sigma2: None },
        "poisson" => StreamModel::Poisson { rate1: args.rate1, rate2: magnitude },
        _ => StreamModel::GaussMean { mu1: None, phi: magnitude, k: args.k, sigma: args.noise },
    };
    StreamSpec { model, p, tau: args.tau, n: args.n }
}

#[derive(Serialize)]
struct SimulationOutput {
    lambda: f64,
    lambda_sparse: Option<f64>,
    reports: Vec<gridcpd::DelayReport>,
}

fn run_simulate(args: SimulateArgs, stdout: &mut dyn Write) -> CliResult<()> {
    if !["gauss_mean", "gauss_cov", "poisson"].contains(&args.model.as_str()) {
        return Err(CliError::input(format!("unknown model `{}`", args.model)));
    }
    let mut cfg = args.detector.settings()?.detector(None)?;
    let magnitudes: Vec<f64> = parse_list(&args.phi, "magnitude")?;
    if let Some(k) = args.calibrate {
        let null = stream_spec(&args, cfg.p, if args.model == "poisson" { args.rate1 } else { 0.0 });
        let null = match null.model {
            StreamModel::GaussCov { .. } => StreamSpec::gauss_cov_scaled(cfg.p, args.n, None, 1.0),
            _ => StreamSpec { tau: None, ..null },
        };
        let mut spec = CalibrationSpec::new(cfg.clone(), args.n, k, args.alpha, args.seed.wrapping_add(1));
        spec.null_model = null;
        spec.threads = args.threads;
        cfg = calibrate(&spec)?.apply(cfg);
    }
    let mut reports = Vec::with_capacity(magnitudes.len());
    for &m in &magnitudes {
        reports.push(estimate_delay(&cfg, &stream_spec(&args, cfg.p, m), args.runs, args.seed, args.threads)?);
    }
    if let Some(path) = &args.emit_csv {
        let rows: Vec<Vec<String>> = magnitudes
            .iter()
            .zip(&reports)
            .map(|(m, r)| vec![m.to_string(), r.mean_delay.map_or(String::from("NaN"), |d| d.to_string())])
            .collect();
        write_csv(path, &["phi", "mean_delay"], &rows)?;
    }
    let out = SimulationOutput { lambda: cfg.lambda, lambda_sparse: cfg.lambda_sparse, reports };
    write_json(&out, args.output.as_deref(), stdout)
}

fn run_bench(args: BenchArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let cfg = args.detector.settings()?.detector(None)?;
    let checkpoints: Vec<usize> = parse_list(&args.checkpoints, "checkpoint")?;
    let report = benchmark_costs(&cfg, &checkpoints, args.repetitions, args.seed)?;
    if let Some(path) = &args.emit_csv {
        let rows: Vec<Vec<String>> = report
            .points
            .iter()
            .map(|p| vec![p.t.to_string(), p.update_ns.to_string(), p.stored_scalars.to_string()])
            .collect();
        write_csv(path, &["t", "update_ns", "stored_scalars"], &rows)?;
    }
    write_json(&report, args.output.as_deref(), stdout)
}

fn run_grid(args: GridArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let grid = if args.static_grid { static_grid(args.t)? } else { dynamic_grid(args.t)? };
    for g in grid {
        writeln!(stdout, "{g}")?;
    }
    Ok(())
}

/// Runs one parsed command, writing normal output to `stdout`.
pub fn run(cli: Cli, stdout: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::Monitor(a) => run_monitor(a, stdout),
        Command::Calibrate(a) => run_calibrate(a, stdout),
        Command::Simulate(a) => run_simulate(a, stdout),
        Command::Bench(a) => run_bench(a, stdout),
        Command::Grid(a) => run_grid(a, stdout),
    }
}
