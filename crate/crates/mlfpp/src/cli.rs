//! The `mlfpp` command line.
//!
//! Exit codes: 0 on success, 2 when estimation ran but did not converge
//! (or a seasonal fit is missing more than half of the days), 1 on any
//! input, usage or I/O error.
//!
//! `--config FILE` reads a TOML file whose keys mirror the long flags of the
//! chosen subcommand (`-` or `_` separators, arrays for lists, `true` for
//! switches). Top-level keys apply first, then a table named after the
//! subcommand; flags given on the command line win over both.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use mlfpp_core::dist::sample;
use mlfpp_core::estimators::estimate;
use mlfpp_core::seasonal::{PermutationConfig, ReturnTimeSeries, DEFAULT_BANDWIDTH};
use mlfpp_core::{Admissibility, Method, MlfParams, OptimizerConfig, QuantileSet, WeightedSample};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::{self, fmt_float, CsvOut};
use crate::pot::{self, ExceedanceRule};
use crate::seasonal::{daily_table, fit_seasonal_par, permutation_test_par, write_daily_csv, DEFAULT_ALPHA, DEFAULT_HORIZON_HOURS, DEFAULT_LEVEL};
use crate::simlab::{self, MethodSpec, PAPER_REPLICATES};

/// Environment variable holding the worker-thread count.
pub const THREADS_ENV: &str = "MLFPP_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

/// Printed when QB runs with a quantile set that may not identify `(β, σ)`.
pub const ADMISSIBILITY_WARNING: &str = "quantile set admissibility not established";

#[derive(Debug, Parser)]
#[command(name = "mlfpp", version, about = "Fit, simulate and test seasonal fractional Poisson processes", args_override_self = true)]
struct Cli {
    /// TOML file with default flag values for the subcommand.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Directory receiving every output file (created if missing).
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    output_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate (β, σ) from a return-time CSV.
    #[command(args_override_self = true)]
    Fit(FitArgs),
    /// Monte Carlo study over a settings grid.
    #[command(args_override_self = true)]
    Sweep(SweepArgs),
    /// Daily seasonal estimates from observations or return times.
    #[command(args_override_self = true)]
    Seasonal(SeasonalArgs),
    /// Permutation test of seasonal stability between two periods.
    #[command(args_override_self = true)]
    Permtest(PermtestArgs),
    /// Sensitivity curves for one or more estimators.
    #[command(args_override_self = true)]
    Sensitivity(SensitivityArgs),
}

const COMMANDS: [&str; 5] = ["fit", "sweep", "seasonal", "permtest", "sensitivity"];

fn parse_quantiles(s: &str) -> std::result::Result<QuantileSet, String> {
    let alphas = s
        .split(',')
        .map(|a| a.trim().parse::<f64>().map_err(|_| format!("invalid level {a:?}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    QuantileSet::new(alphas).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Return-time CSV (`return_time_hours`, optional `weight`).
    #[arg(value_name = "INPUT")]
    input_pos: Option<PathBuf>,
    #[arg(long = "input", hide = true)]
    input_opt: Option<PathBuf>,
    /// Estimator: lm, ml, cm, qls or qb.
    #[arg(long, default_value = "qb")]
    method: Method,
    /// Quantile levels for qb/qls, comma separated [default: qb 0.1,0.3,0.5,0.8,0.925 (study default); qls 0.1,0.3,0.5,0.7,0.9 (artifact default)].
    #[arg(long, value_parser = parse_quantiles)]
    quantiles: Option<QuantileSet>,
    /// Ignore a `weight` column.
    #[arg(long)]
    unweighted: bool,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Optimizer iteration limit [artifact default].
    #[arg(long, default_value_t = OptimizerConfig::default().max_iter)]
    max_iter: usize,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Use the 9 × 9 × 4 grid of the simulation study (324 settings).
    #[arg(long)]
    paper_grid: bool,
    /// Tail parameters (ignored with --paper-grid) [artifact default].
    #[arg(long, value_delimiter = ',', default_value = "0.7,0.9")]
    betas: Vec<f64>,
    /// Scale parameters (ignored with --paper-grid) [artifact default].
    #[arg(long, value_delimiter = ',', default_value = "50")]
    sigmas: Vec<f64>,
    /// Sample sizes (ignored with --paper-grid) [artifact default].
    #[arg(long, value_delimiter = ',', default_value = "200")]
    sizes: Vec<usize>,
    /// Datasets per setting (study default).
    #[arg(long, default_value_t = PAPER_REPLICATES)]
    replicates: usize,
    /// Estimators, comma separated [artifact default].
    #[arg(long, value_delimiter = ',', default_value = "lm,ml,cm,qls,qb")]
    methods: Vec<Method>,
    /// Quantile levels for qb (study default when absent).
    #[arg(long, value_parser = parse_quantiles)]
    qb_quantiles: Option<QuantileSet>,
    /// Quantile levels for qls (artifact default when absent).
    #[arg(long, value_parser = parse_quantiles)]
    qls_quantiles: Option<QuantileSet>,
    /// Master seed [artifact default].
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Leave the timing column empty so reruns are byte-identical.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Debug, Args)]
struct PotArgs {
    /// POT quantile level (study default).
    #[arg(long, default_value_t = DEFAULT_LEVEL)]
    level: f64,
    /// Exceedance rule at the threshold: strict or weak [artifact default].
    #[arg(long, default_value = "strict")]
    rule: ExceedanceRule,
    /// Sampling cadence in hours [default: median time step].
    #[arg(long)]
    cadence: Option<f64>,
}

#[derive(Debug, Args)]
struct SeasonalArgs {
    /// Observation CSV (`timestamp,value`) or return-time CSV
    /// (`return_time_hours,start_day`).
    #[arg(value_name = "INPUT")]
    input_pos: Option<PathBuf>,
    #[arg(long = "input", hide = true)]
    input_opt: Option<PathBuf>,
    /// Grid manifest (`lat,lon,path`) of observation files, instead of INPUT.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[command(flatten)]
    pot: PotArgs,
    /// Kernel bandwidth c in days; the window spans 45 days either side (study default).
    #[arg(long, default_value_t = DEFAULT_BANDWIDTH)]
    bandwidth: f64,
    /// Estimator (study default).
    #[arg(long, default_value = "qb")]
    method: Method,
    /// Quantile levels for qb/qls, comma separated [default: per method, as for `fit`].
    #[arg(long, value_parser = parse_quantiles)]
    quantiles: Option<QuantileSet>,
    /// Horizon in hours for the exceedance probability and frequency (study default).
    #[arg(long, default_value_t = DEFAULT_HORIZON_HOURS)]
    horizon: f64,
    /// Return-time quantile level (study default).
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
}

#[derive(Debug, Args)]
struct PermtestArgs {
    /// Observation CSV (`timestamp,value`) or event CSV (`timestamp` only).
    #[arg(value_name = "INPUT")]
    input_pos: Option<PathBuf>,
    #[arg(long = "input", hide = true)]
    input_opt: Option<PathBuf>,
    #[command(flatten)]
    pot: PotArgs,
    /// First year of the second period [default: the later half of the years].
    #[arg(long)]
    split_year: Option<i32>,
    /// Number of random year reassignments (study default).
    #[arg(long = "permutations", visible_alias = "B", default_value_t = 1000)]
    permutations: usize,
    /// Kernel bandwidth in days (study default).
    #[arg(long, default_value_t = DEFAULT_BANDWIDTH)]
    bandwidth: f64,
    /// Estimator (study default).
    #[arg(long, default_value = "qb")]
    method: Method,
    /// Quantile levels for qb/qls, comma separated [default: per method, as for `fit`].
    #[arg(long, value_parser = parse_quantiles)]
    quantiles: Option<QuantileSet>,
    /// Master seed [artifact default].
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct SensitivityArgs {
    /// Estimators, comma separated [artifact default].
    #[arg(long, value_delimiter = ',', default_value = "lm,ml,cm,qls,qb")]
    methods: Vec<Method>,
    /// Base sample size (study default).
    #[arg(long, default_value_t = 200)]
    n: usize,
    /// Base tail parameter (study default).
    #[arg(long, default_value_t = 0.9)]
    beta: f64,
    /// Base scale parameter (study default).
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Contamination points between the 0.001 and 0.999 quantiles [artifact default].
    #[arg(long, default_value_t = 100)]
    grid_size: usize,
    /// Quantile levels for qb (study default when absent).
    #[arg(long, value_parser = parse_quantiles)]
    qb_quantiles: Option<QuantileSet>,
    /// Quantile levels for qls (artifact default when absent).
    #[arg(long, value_parser = parse_quantiles)]
    qls_quantiles: Option<QuantileSet>,
    /// Seed of the base sample [artifact default].
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return EXIT_ERROR;
    }
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = raw.trim().parse().map_err(|_| Error::Config(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    // a pool already built by an earlier call in this process is kept
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn dispatch(cli: Cli) -> Result<i32> {
    fs::create_dir_all(&cli.output_dir).map_err(|e| Error::io(&cli.output_dir, e))?;
    let out = cli.output_dir.as_path();
    match cli.command {
        Command::Fit(a) => cmd_fit(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::Seasonal(a) => cmd_seasonal(a, out),
        Command::Permtest(a) => cmd_permtest(a, out),
        Command::Sensitivity(a) => cmd_sensitivity(a, out),
    }
}

fn input_path(pos: Option<PathBuf>, opt: Option<PathBuf>) -> Result<PathBuf> {
    pos.or(opt).ok_or_else(|| Error::Config("an input file is required".into()))
}

fn warn_admissibility(method: Method, qs: Option<&QuantileSet>) {
    if method == Method::Qb && qs.is_some_and(|q| q.admissibility() == Admissibility::NotEstablished) {
        eprintln!("warning: {ADMISSIBILITY_WARNING}");
    }
}

#[derive(Debug, Serialize)]
struct FitReport {
    method: Method,
    beta: f64,
    sigma: f64,
    objective: f64,
    converged: bool,
    iterations: usize,
    evaluations: usize,
    wall_time_ms: f64,
    quantiles: Option<Vec<f64>>,
    admissibility: Option<Admissibility>,
    n: usize,
}

fn cmd_fit(a: FitArgs, out_dir: &Path) -> Result<i32> {
    let path = input_path(a.input_pos, a.input_opt)?;
    let table = io::read_return_times(&path)?;
    if table.return_times.len() < 2 {
        return Err(Error::TooFewEvents { found: table.return_times.len(), needed: 2 });
    }
    let sample = match (&table.weights, a.unweighted) {
        (Some(w), false) => {
            let total: f64 = w.iter().sum();
            if total.is_nan() || total <= 0.0 {
                return Err(Error::Config("weights sum to zero".into()));
            }
            WeightedSample::with_weights(table.return_times.clone(), w.iter().map(|x| x / total).collect())?
        }
        _ => WeightedSample::new(table.return_times.clone())?,
    };
    warn_admissibility(a.method, a.quantiles.as_ref());
    let cfg = OptimizerConfig { max_iter: a.max_iter, ..OptimizerConfig::default() };
    cfg.validate()?;
    let r = estimate(a.method, &sample, a.quantiles.as_ref(), &cfg)?;
    let report = FitReport {
        method: r.method,
        beta: r.params.beta,
        sigma: r.params.sigma,
        objective: r.objective_value,
        converged: r.converged,
        iterations: r.iterations,
        evaluations: r.evaluations,
        wall_time_ms: r.wall_time.as_secs_f64() * 1e3,
        quantiles: r.quantile_set.as_ref().map(|q| q.alphas().to_vec()),
        admissibility: r.admissibility,
        n: sample.len(),
    };
    let mut stdout = std::io::stdout().lock();
    let written = match a.format {
        Format::Json => writeln!(stdout, "{}", serde_json::to_string_pretty(&report).map_err(|e| Error::Serialize(e.to_string()))?),
        Format::Text => {
            let quantiles = report.quantiles.as_ref().map(|q| q.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
            writeln!(
                stdout,
                "method: {}\nbeta: {}\nsigma: {}\nobjective: {}\nconverged: {}\niterations: {}\nwall_time_ms: {:.3}{}",
                report.method,
                report.beta,
                report.sigma,
                report.objective,
                report.converged,
                report.iterations,
                report.wall_time_ms,
                quantiles.map(|q| format!("\nquantiles: {q}")).unwrap_or_default(),
            )
        }
    };
    written.map_err(|e| Error::io("<stdout>", e))?;
    io::write_json(&out_dir.join("fit.json"), &report)?;
    Ok(if r.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

#[derive(Debug, Serialize)]
struct SweepRow {
    beta: f64,
    sigma: f64,
    n: usize,
    method: Method,
    quantiles: Option<Vec<f64>>,
    mse_beta: Option<f64>,
    mse_sigma: Option<f64>,
    rmse_beta: Option<f64>,
    rmse_sigma: Option<f64>,
    bias_beta: Option<f64>,
    bias_sigma: Option<f64>,
    mean_time_ms: Option<f64>,
    successes: usize,
    failures: usize,
}

#[derive(Debug, Serialize)]
struct SweepSummary {
    master_seed: u64,
    replicates: usize,
    settings: usize,
    rows: Vec<SweepRow>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn method_specs(methods: &[Method], qb: Option<&QuantileSet>, qls: Option<&QuantileSet>) -> Vec<MethodSpec> {
    methods
        .iter()
        .map(|&m| match (m, qb, qls) {
            (Method::Qb, Some(q), _) | (Method::Qls, _, Some(q)) => MethodSpec::with_quantiles(m, q.clone()),
            _ => MethodSpec::new(m),
        })
        .collect()
}

fn cmd_sweep(a: SweepArgs, out_dir: &Path) -> Result<i32> {
    let settings = if a.paper_grid {
        simlab::paper_grid(a.replicates, a.seed)?
    } else {
        simlab::grid(&a.betas, &a.sigmas, &a.sizes, a.replicates, a.seed)?
    };
    if settings.is_empty() {
        return Err(Error::Config("empty settings grid".into()));
    }
    warn_admissibility(Method::Qb, a.qb_quantiles.as_ref().filter(|_| a.methods.contains(&Method::Qb)));
    let specs = method_specs(&a.methods, a.qb_quantiles.as_ref(), a.qls_quantiles.as_ref());
    let cfg = OptimizerConfig::default();
    let mut rows = Vec::new();
    for st in &settings {
        let r = simlab::run_setting(st, &specs, &cfg)?;
        for m in r.methods {
            rows.push(SweepRow {
                beta: st.beta,
                sigma: st.sigma,
                n: st.n,
                method: m.method,
                quantiles: m.quantiles,
                mse_beta: finite(m.mse_beta),
                mse_sigma: finite(m.mse_sigma),
                rmse_beta: finite(m.rmse_beta),
                rmse_sigma: finite(m.rmse_sigma),
                bias_beta: finite(m.bias_beta),
                bias_sigma: finite(m.bias_sigma),
                mean_time_ms: if a.no_timing { None } else { finite(m.mean_time_seconds * 1e3) },
                successes: m.estimates.len(),
                failures: m.failures,
            });
        }
    }
    let csv_path = out_dir.join("sweep.csv");
    let mut csv = CsvOut::create(&csv_path, &["beta", "sigma", "n", "method", "mse_beta", "mse_sigma", "mean_time_ms", "failures"])?;
    for r in &rows {
        csv.row([
            fmt_float(Some(r.beta)),
            fmt_float(Some(r.sigma)),
            r.n.to_string(),
            r.method.to_string(),
            fmt_float(r.mse_beta),
            fmt_float(r.mse_sigma),
            fmt_float(r.mean_time_ms),
            r.failures.to_string(),
        ])?;
    }
    csv.finish()?;
    let json_path = out_dir.join("sweep_summary.json");
    io::write_json(&json_path, &SweepSummary { master_seed: a.seed, replicates: a.replicates, settings: settings.len(), rows })?;
    println!("{} settings written to {} and {}", settings.len(), csv_path.display(), json_path.display());
    Ok(EXIT_OK)
}

enum SeasonalInput {
    Observations,
    ReturnTimes,
    Events,
}

fn sniff(path: &Path) -> Result<SeasonalInput> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let header: Vec<&str> = text.lines().next().unwrap_or("").split(',').map(str::trim).collect();
    if header.contains(&"return_time_hours") {
        Ok(SeasonalInput::ReturnTimes)
    } else if header.contains(&"timestamp") && header.contains(&"value") {
        Ok(SeasonalInput::Observations)
    } else if header.contains(&"timestamp") {
        Ok(SeasonalInput::Events)
    } else {
        Err(Error::Parse { path: path.to_path_buf(), line: 1, message: "unrecognized header".into() })
    }
}

/// POT extraction with gap logging; returns the record and the years the
/// observations span.
fn exceedances(path: &Path, pot_args: &PotArgs) -> Result<(pot::ExceedanceRecord, std::ops::RangeInclusive<i32>)> {
    let series = io::read_observations(path, pot_args.cadence)?;
    let gaps = series.gaps();
    if !gaps.is_empty() {
        eprintln!("note: {}: {} gap(s) in the {} h cadence, first after {}", path.display(), gaps.len(), series.cadence_hours(), series.timestamps()[gaps[0] - 1]);
    }
    let e = pot::extract_exceedances(&series, pot_args.level, pot_args.rule)?;
    let years = series.years().expect("series is non-empty");
    Ok((e, years))
}

fn seasonal_series(path: &Path, pot_args: &PotArgs) -> Result<(ReturnTimeSeries, bool)> {
    match sniff(path)? {
        SeasonalInput::ReturnTimes => Ok((io::read_return_times(path)?.series()?, false)),
        SeasonalInput::Observations => Ok((pot::to_return_times(&exceedances(path, pot_args)?.0)?, true)),
        SeasonalInput::Events => Err(Error::Config("seasonal needs observations or return times".into())),
    }
}

/// Fits one series and writes its daily table; returns the missing-day count.
fn seasonal_one(a: &SeasonalArgs, series: &ReturnTimeSeries, csv: &Path) -> Result<usize> {
    let fit = fit_seasonal_par(series, a.bandwidth, a.method, a.quantiles.as_ref(), &OptimizerConfig::default())?;
    write_daily_csv(csv, &daily_table(series, &fit, a.horizon, a.alpha))?;
    Ok(fit.missing_days())
}

fn check_probability(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must lie in (0, 1)")))
    }
}

fn cmd_seasonal(a: SeasonalArgs, out_dir: &Path) -> Result<i32> {
    check_probability("alpha", a.alpha)?;
    check_probability("level", a.pot.level)?;
    if a.horizon.is_nan() || a.horizon <= 0.0 {
        return Err(Error::Config("horizon must be positive".into()));
    }
    warn_admissibility(a.method, a.quantiles.as_ref());
    let half = usize::from(mlfpp_core::seasonal::DAYS) / 2;
    if let Some(manifest) = &a.manifest {
        let points = io::read_manifest(manifest)?;
        let mut summary = CsvOut::create(&out_dir.join("grid_summary.csv"), &["lat", "lon", "path", "return_times", "missing_days", "output"])?;
        let mut worst = 0;
        for (i, p) in points.iter().enumerate() {
            let name = format!("seasonal_{i:04}.csv");
            let (series, _) = seasonal_series(&p.path, &a.pot)?;
            let missing = seasonal_one(&a, &series, &out_dir.join(&name))?;
            worst = worst.max(missing);
            summary.row([fmt_float(Some(p.lat)), fmt_float(Some(p.lon)), p.path.display().to_string(), series.len().to_string(), missing.to_string(), name])?;
        }
        summary.finish()?;
        return Ok(if worst > half { EXIT_NOT_CONVERGED } else { EXIT_OK });
    }
    let path = input_path(a.input_pos.clone(), a.input_opt.clone())?;
    let (series, derived) = seasonal_series(&path, &a.pot)?;
    if derived {
        io::write_return_times(&out_dir.join("return_times.csv"), &series)?;
    }
    let csv = out_dir.join("seasonal.csv");
    let missing = seasonal_one(&a, &series, &csv)?;
    println!("{} return times; {} of 365 days without estimate; written to {}", series.len(), missing, csv.display());
    if missing > half {
        eprintln!("error: more than half of the days have no estimate");
        return Ok(EXIT_NOT_CONVERGED);
    }
    Ok(EXIT_OK)
}

/// Event CSV: a `timestamp` column of event times; the years are those
/// containing events.
fn read_events(path: &Path) -> Result<(pot::ExceedanceRecord, std::ops::RangeInclusive<i32>, Vec<i32>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    let header: Vec<&str> = lines.next().map(|(_, l)| l.split(',').map(str::trim).collect()).unwrap_or_default();
    let col = header.iter().position(|h| *h == "timestamp").ok_or_else(|| Error::Parse { path: path.to_path_buf(), line: 1, message: "missing column `timestamp`".into() })?;
    let mut times = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let raw = line.split(',').nth(col).unwrap_or("");
        let t = io::parse_timestamp(raw).ok_or_else(|| Error::Parse { path: path.to_path_buf(), line: i as u64 + 1, message: format!("invalid timestamp {raw:?}") })?;
        if times.last().is_some_and(|&p| p >= t) {
            return Err(Error::Parse { path: path.to_path_buf(), line: i as u64 + 1, message: "timestamps must be strictly increasing".into() });
        }
        times.push(t);
    }
    use chrono::Datelike;
    let mut years: Vec<i32> = times.iter().map(|t| t.year()).collect();
    years.dedup();
    let span = match (years.first(), years.last()) {
        (Some(&a), Some(&b)) => a..=b,
        _ => return Err(Error::TooFewEvents { found: 0, needed: 2 }),
    };
    let e = pot::ExceedanceRecord { event_values: vec![f64::NAN; times.len()], event_times: times, threshold: f64::NAN, quantile_level: f64::NAN };
    Ok((e, span, years))
}

fn cmd_permtest(a: PermtestArgs, out_dir: &Path) -> Result<i32> {
    let path = input_path(a.input_pos, a.input_opt)?;
    warn_admissibility(a.method, a.quantiles.as_ref());
    let years = match sniff(&path)? {
        SeasonalInput::Observations => {
            check_probability("level", a.pot.level)?;
            let (e, span) = exceedances(&path, &a.pot)?;
            pot::year_events(&e, span)?
        }
        SeasonalInput::Events => {
            let (e, span, present) = read_events(&path)?;
            pot::year_events(&e, span)?.into_iter().filter(|y| present.contains(&y.year())).collect()
        }
        SeasonalInput::ReturnTimes => return Err(Error::Config("permtest needs event times (observations or events)".into())),
    };
    let events: usize = years.iter().map(|y| y.hours().len()).sum();
    if events < 2 {
        return Err(Error::TooFewEvents { found: events, needed: 2 });
    }
    let first_half_years = match a.split_year {
        Some(split) => {
            let k = years.iter().filter(|y| y.year() < split).count();
            if k == 0 || k == years.len() {
                return Err(Error::Config(format!("split year {split} leaves one period empty")));
            }
            Some(k)
        }
        None => None,
    };
    let cfg = PermutationConfig {
        bandwidth: a.bandwidth,
        method: a.method,
        quantiles: a.quantiles,
        permutations: a.permutations,
        seed: a.seed,
        optimizer: OptimizerConfig::default(),
        first_half_years,
    };
    let result = match permutation_test_par(years, cfg) {
        Ok(r) => r,
        Err(Error::Core(e @ mlfpp_core::Error::Permutation(_))) => {
            eprintln!("error: {e}");
            return Ok(EXIT_NOT_CONVERGED);
        }
        Err(e) => return Err(e),
    };
    let json = out_dir.join("permtest.json");
    io::write_json(&json, &result)?;
    println!(
        "p_beta = {} (reject: {}), p_sigma = {} (reject: {}); written to {}",
        result.p_value_beta,
        result.reject_beta,
        result.p_value_sigma,
        result.reject_sigma,
        json.display()
    );
    Ok(EXIT_OK)
}

fn cmd_sensitivity(a: SensitivityArgs, out_dir: &Path) -> Result<i32> {
    let base = MlfParams::new(a.beta, a.sigma)?;
    if a.n < 2 {
        return Err(Error::Config("n must be at least 2".into()));
    }
    let x = sample(base, a.n, a.seed)?;
    let grid = simlab::contamination_grid(base, a.grid_size)?;
    let cfg = OptimizerConfig::default();
    let csv_path = out_dir.join("sensitivity.csv");
    let mut csv = CsvOut::create(&csv_path, &["method", "x", "sc_beta", "sc_sigma"])?;
    let mut gaps = 0;
    for spec in method_specs(&a.methods, a.qb_quantiles.as_ref(), a.qls_quantiles.as_ref()) {
        let curve = simlab::sensitivity_curve(&spec, &x, &grid, &cfg)?;
        gaps += curve.gaps().len();
        for i in 0..curve.x.len() {
            csv.row([spec.method.to_string(), fmt_float(Some(curve.x[i])), fmt_float(curve.sc_beta[i]), fmt_float(curve.sc_sigma[i])])?;
        }
    }
    csv.finish()?;
    if gaps > 0 {
        eprintln!("note: {gaps} contamination point(s) without a fit (empty fields)");
    }
    println!("written to {}", csv_path.display());
    Ok(EXIT_OK)
}

/// Splices the flags of a `--config` file in right after the subcommand
/// name, skipping any flag the command line already sets.
fn expand_config(mut args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut config = None;
    for (i, a) in args.iter().enumerate() {
        let s = a.to_string_lossy();
        if s == "--config" {
            config = args.get(i + 1).map(PathBuf::from);
        } else if let Some(p) = s.strip_prefix("--config=") {
            config = Some(PathBuf::from(p));
        }
    }
    let Some(config) = config else { return Ok(args) };
    let Some(sub) = args.iter().position(|a| COMMANDS.contains(&a.to_string_lossy().as_ref())) else { return Ok(args) };
    let name = args[sub].to_string_lossy().into_owned();
    let text = fs::read_to_string(&config).map_err(|e| Error::io(&config, e))?;
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(format!("{}: {e}", config.display())))?;
    let given: Vec<String> = args[sub + 1..]
        .iter()
        .filter_map(|a| a.to_str()?.strip_prefix("--").map(|f| f.split('=').next().unwrap_or(f).to_owned()))
        .collect();
    let mut extra = Vec::new();
    let scoped = table.get(&name).and_then(toml::Value::as_table);
    let top = table.iter().filter(|(k, v)| !v.is_table() && k.as_str() != "config");
    for (key, value) in top.chain(scoped.into_iter().flatten()) {
        let name = key.replace('_', "-");
        if given.contains(&name) {
            continue;
        }
        let flag = format!("--{name}");
        match value {
            toml::Value::Boolean(true) => extra.push(OsString::from(flag)),
            toml::Value::Boolean(false) => {}
            toml::Value::Array(items) => {
                let joined = items.iter().map(toml_scalar).collect::<Result<Vec<_>>>()?.join(",");
                extra.extend([OsString::from(flag), OsString::from(joined)]);
            }
            v => extra.extend([OsString::from(flag), OsString::from(toml_scalar(v)?)]),
        }
    }
    args.splice(sub + 1..sub + 1, extra);
    Ok(args)
}

fn toml_scalar(v: &toml::Value) -> Result<String> {
    match v {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Integer(i) => Ok(i.to_string()),
        toml::Value::Float(f) => Ok(f.to_string()),
        other => Err(Error::Config(format!("unsupported config value {other}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn config_flags_precede_explicit_ones() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.toml");
        std::fs::write(&cfg, "seed = 5\nmethods = [\"lm\", \"qb\"]\n[sweep]\nno_timing = true\nreplicates = 3\n").unwrap();
        let args: Vec<OsString> = ["mlfpp", "sweep", "--config", cfg.to_str().unwrap(), "--seed", "9"].iter().map(OsString::from).collect();
        let expanded = expand_config(args).unwrap();
        let cli = Cli::try_parse_from(expanded).unwrap();
        let Command::Sweep(s) = cli.command else { panic!() };
        assert_eq!(s.seed, 9);
        assert_eq!(s.methods, vec![Method::Lm, Method::Qb]);
        assert_eq!(s.replicates, 3);
        assert!(s.no_timing);
    }

    #[test]
    fn list_parsers() {
        assert!(parse_quantiles("0.3,x").is_err());
        assert_eq!(parse_quantiles("0.3, 0.7").unwrap().alphas(), &[0.3, 0.7]);
    }
}
