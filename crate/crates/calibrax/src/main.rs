use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use calibrax::bench::{
    run_ead_benchmark, run_metric_benchmark, BenchmarkConfig, BenchmarkReport,
};
use calibrax::calibrators::{
    apply_map, fit_histogram_binning, fit_isotonic, fit_platt, fit_temperature, fit_tpm,
    CalibrationMap, MapInput,
};
use calibrax::data::{ingest_logits, load_logits, load_pairs, pairs_to_csv, save_pairs};
use calibrax::error::{Error, Result};
use calibrax::estimator::{estimate_curve, CurveEstimate, EstimatorConfig};
use calibrax::metrics::{ece_bin, ece_debiased, ece_sweep, ks_error, tce_bpm, MetricConfig};
use calibrax::prior::{PriorCurveParams, TrueDistributionSpec};
use calibrax::simulator::{simulate, SimulationRequest};
use calibrax::Real;

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "calibrax", version, about = "Confidence-calibration toolkit")]
struct Cli {
    /// Default seed for seeded subcommands.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Suppress progress notes on standard error.
    #[arg(long, global = true)]
    quiet: bool,
    /// Output format for report-style artifacts.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Convert logit records (JSON lines) to confidence/hit pairs.
    IngestLogits(IngestArgs),
    /// Sample a synthetic dataset from a known true distribution.
    Simulate(SimulateArgs),
    /// Fit the calibration curve to a pairs file.
    Estimate(EstimateArgs),
    /// Compute calibration metrics on a pairs file.
    Metrics(MetricsArgs),
    /// Fit a calibration map on one file and apply it to another.
    Calibrate(CalibrateArgs),
    /// Run the metric or curve-recovery benchmark.
    Benchmark(BenchmarkArgs),
    /// Evaluate a fitted curve on a uniform grid.
    CurveEval(CurveEvalArgs),
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Built-in name (D1..D5) or a path to a distribution-spec JSON file.
    #[arg(long)]
    dist: String,
    #[arg(long)]
    n: usize,
    /// Overrides the global --seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// "auto" or comma-separated equal-mass bin counts.
    #[arg(long, default_value = "auto")]
    schemes: String,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Comma-separated metric names: ece, debiased, sweep, ks, tcebpm.
    #[arg(long, default_value = "ece,debiased,sweep,ks,tcebpm")]
    metrics: String,
    #[arg(long, default_value_t = 15)]
    bins: usize,
    #[arg(long, default_value_t = 1)]
    p: u32,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Tpm,
    Hb,
    Temp,
    Platt,
    Isotonic,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long, value_enum)]
    method: Method,
    /// Pairs CSV, or logits JSONL for --method temp.
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    apply: PathBuf,
    /// Remapped pairs CSV.
    #[arg(long)]
    out: PathBuf,
    /// Bin count for --method hb.
    #[arg(long)]
    bins: Option<usize>,
    /// Also write the fitted map as kind-tagged JSON.
    #[arg(long)]
    map_out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BenchKind {
    Metrics,
    Ead,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(long, value_enum)]
    kind: BenchKind,
    /// Comma-separated built-in names (D1..D5).
    #[arg(long, default_value = "D1,D2,D3,D4,D5")]
    dists: String,
    /// lo:hi:step range or comma-separated sizes.
    #[arg(long, default_value = "500:5000:500")]
    sizes: String,
    #[arg(long, default_value_t = 100)]
    runs: usize,
    /// Overrides the global --seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    /// Optional per-trial CSV dump.
    #[arg(long)]
    per_trial: Option<PathBuf>,
}

#[derive(Args)]
struct CurveEvalArgs {
    /// Curve JSON: an estimate file or bare {alpha, beta, c} parameters.
    #[arg(long)]
    curve: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    grid: u64,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}: {}", e.code(), e);
            ExitCode::FAILURE
        }
    }
}

fn configure_threads() {
    if let Ok(v) = std::env::var("CALIBRAX_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::IngestLogits(args) => cmd_ingest(&args),
        Command::Simulate(args) => cmd_simulate(&args, cli.seed),
        Command::Estimate(args) => cmd_estimate(&args, cli.quiet),
        Command::Metrics(args) => cmd_metrics(&args, cli.format),
        Command::Calibrate(args) => cmd_calibrate(&args),
        Command::Benchmark(args) => cmd_benchmark(&args, cli.seed, cli.quiet),
        Command::CurveEval(args) => cmd_curve_eval(&args),
    }
}

/// Write atomically: temp file in the destination directory, then rename.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = path.with_extension(format!("tmp-{}", std::process::id()));
    if let Some(dir) = dir {
        if !dir.exists() {
            std::fs::create_dir_all(dir).map_err(io_err)?;
        }
    }
    std::fs::write(&tmp, contents).map_err(io_err)?;
    std::fs::rename(&tmp, path).map_err(io_err)
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

fn cmd_ingest(args: &IngestArgs) -> Result<()> {
    let records = load_logits(&args.input)?;
    let dataset = ingest_logits(&records)?;
    write_atomic(&args.out, &pairs_to_csv(&dataset))
}

fn load_spec(dist: &str) -> Result<TrueDistributionSpec> {
    if let Some(spec) = TrueDistributionSpec::builtin(dist) {
        return Ok(spec);
    }
    let path = Path::new(dist);
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let raw: TrueDistributionSpec = serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    // revalidate the grid invariant on externally supplied curves
    TrueDistributionSpec::new(raw.curve, raw.confidence)
}

fn cmd_simulate(args: &SimulateArgs, global_seed: u64) -> Result<()> {
    let spec = load_spec(&args.dist)?;
    let dataset = simulate(&SimulationRequest {
        spec,
        n: args.n,
        seed: args.seed.unwrap_or(global_seed),
    })?;
    write_atomic(&args.out, &pairs_to_csv(&dataset))
}

#[derive(Serialize, Deserialize)]
struct CurveFile {
    schema_version: u32,
    #[serde(flatten)]
    estimate: CurveEstimate,
}

fn parse_schemes(text: &str) -> Result<Option<Vec<usize>>> {
    if text == "auto" {
        return Ok(None);
    }
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidParameter(format!("bad scheme count '{t}'")))
        })
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

fn cmd_estimate(args: &EstimateArgs, quiet: bool) -> Result<()> {
    let dataset = load_pairs(&args.input)?;
    let config = EstimatorConfig {
        scheme_counts: parse_schemes(&args.schemes)?,
        ..EstimatorConfig::default()
    };
    let estimate = estimate_curve(&dataset, &config)?;
    if estimate.diagnostics.scheme_fallback && !quiet {
        eprintln!(
            "note: dataset too small for the standard scheme range; using single scheme {:?}",
            estimate.diagnostics.scheme_counts
        );
    }
    write_atomic(
        &args.out,
        &to_json(&CurveFile {
            schema_version: SCHEMA_VERSION,
            estimate,
        }),
    )
}

#[derive(Serialize)]
struct MetricsReport {
    schema_version: u32,
    bins: usize,
    p: u32,
    n: usize,
    metrics: BTreeMap<String, Real>,
}

fn cmd_metrics(args: &MetricsArgs, format: Format) -> Result<()> {
    let dataset = load_pairs(&args.input)?;
    let metric_config = MetricConfig {
        bins: args.bins,
        p: args.p,
        ..MetricConfig::default()
    };
    let mut metrics = BTreeMap::new();
    for name in args.metrics.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let value = match name {
            "ece" => ece_bin(&dataset, &metric_config)?,
            "debiased" => ece_debiased(&dataset, &metric_config)?,
            "sweep" => ece_sweep(&dataset, args.p)?,
            "ks" => ks_error(&dataset)?,
            "tcebpm" => tce_bpm(&dataset, &EstimatorConfig::default(), &metric_config)?,
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "unknown metric '{name}' (expected ece, debiased, sweep, ks, tcebpm)"
                )))
            }
        };
        metrics.insert(name.to_string(), value);
    }
    let report = MetricsReport {
        schema_version: SCHEMA_VERSION,
        bins: args.bins,
        p: args.p,
        n: dataset.len(),
        metrics,
    };
    let artifact = match format {
        Format::Json => to_json(&report),
        Format::Csv => {
            let mut s = String::from("metric,value\n");
            for (k, v) in &report.metrics {
                s.push_str(&format!("{k},{v}\n"));
            }
            s
        }
    };
    match &args.out {
        Some(path) => write_atomic(path, &artifact),
        None => {
            print!("{artifact}");
            Ok(())
        }
    }
}

fn cmd_calibrate(args: &CalibrateArgs) -> Result<()> {
    let (map, output) = match args.method {
        Method::Temp => {
            let train = load_logits(&args.train)?;
            let map = fit_temperature(&train)?;
            let apply_records = load_logits(&args.apply)?;
            let out = apply_map(&map, MapInput::Logits(&apply_records))?;
            (map, out)
        }
        _ => {
            let train = load_pairs(&args.train)?;
            let map = match args.method {
                Method::Tpm => fit_tpm(&train, &EstimatorConfig::default())?,
                Method::Hb => fit_histogram_binning(&train, args.bins.unwrap_or(15))?,
                Method::Platt => fit_platt(&train)?,
                Method::Isotonic => fit_isotonic(&train)?,
                Method::Temp => unreachable!(),
            };
            let apply_pairs = load_pairs(&args.apply)?;
            let out = apply_map(&map, MapInput::Pairs(&apply_pairs))?;
            (map, out)
        }
    };
    if let Some(map_path) = &args.map_out {
        #[derive(Serialize)]
        struct MapFile<'a> {
            schema_version: u32,
            #[serde(flatten)]
            map: &'a CalibrationMap,
        }
        write_atomic(
            map_path,
            &to_json(&MapFile {
                schema_version: SCHEMA_VERSION,
                map: &map,
            }),
        )?;
    }
    save_pairs(&output, &args.out)
}

fn parse_sizes(text: &str) -> Result<Vec<usize>> {
    let bad = |t: &str| Error::InvalidParameter(format!("bad size specification '{t}'"));
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(bad(text));
        }
        let lo: usize = parts[0].trim().parse().map_err(|_| bad(text))?;
        let hi: usize = parts[1].trim().parse().map_err(|_| bad(text))?;
        let step: usize = parts[2].trim().parse().map_err(|_| bad(text))?;
        if step == 0 || lo == 0 || hi < lo {
            return Err(bad(text));
        }
        return Ok((lo..=hi).step_by(step).collect());
    }
    text.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| bad(t)))
        .collect()
}

fn per_trial_csv(report: &BenchmarkReport) -> String {
    let mut s = String::from("spec,size,series,run,value\n");
    let dump = |s: &mut String, spec: &str, size: usize, series: &str, stats: &calibrax::bench::ArmStats| {
        // successful values are ordered by run; interleave failure markers
        let mut run = 0usize;
        let mut vi = 0usize;
        let total = stats.values.len() + stats.failed_runs.len();
        while run < total {
            if stats.failed_runs.contains(&run) {
                s.push_str(&format!("{spec},{size},{series},{run},failed\n"));
            } else {
                s.push_str(&format!("{spec},{size},{series},{run},{}\n", stats.values[vi]));
                vi += 1;
            }
            run += 1;
        }
    };
    for cell in &report.metric_cells {
        dump(
            &mut s,
            &cell.spec,
            cell.size,
            &format!("{:?}", cell.metric).to_lowercase(),
            &cell.stats,
        );
    }
    for cell in &report.ead_cells {
        dump(&mut s, &cell.spec, cell.size, "ours", &cell.ours);
        dump(&mut s, &cell.spec, cell.size, "histogram", &cell.histogram);
    }
    s
}

fn cmd_benchmark(args: &BenchmarkArgs, global_seed: u64, quiet: bool) -> Result<()> {
    let specs = args
        .dists
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|name| {
            TrueDistributionSpec::builtin(name)
                .map(|spec| (name.to_string(), spec))
                .ok_or_else(|| Error::InvalidParameter(format!("unknown distribution '{name}'")))
        })
        .collect::<Result<Vec<_>>>()?;
    let config = BenchmarkConfig {
        sizes: parse_sizes(&args.sizes)?,
        runs: args.runs,
        base_seed: args.seed.unwrap_or(global_seed),
        ..BenchmarkConfig::new(specs)
    };
    if !quiet {
        eprintln!(
            "running {} benchmark: {} spec(s) x {} size(s) x {} run(s)",
            match args.kind {
                BenchKind::Metrics => "metrics",
                BenchKind::Ead => "ead",
            },
            config.specs.len(),
            config.sizes.len(),
            config.runs
        );
    }
    let report = match args.kind {
        BenchKind::Metrics => run_metric_benchmark(&config)?,
        BenchKind::Ead => run_ead_benchmark(&config)?,
    };
    if let Some(path) = &args.per_trial {
        write_atomic(path, &per_trial_csv(&report))?;
    }
    write_atomic(&args.out, &to_json(&report))
}

fn cmd_curve_eval(args: &CurveEvalArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.curve).map_err(|source| Error::Io {
        path: args.curve.clone(),
        source,
    })?;
    let params = serde_json::from_str::<CurveFile>(&text)
        .map(|f| f.estimate.params)
        .or_else(|_| serde_json::from_str::<PriorCurveParams>(&text))
        .map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
    // reject out-of-family parameters from hand-edited files
    let params = PriorCurveParams::new(params.alpha, params.beta, params.c)?;
    let mut out = String::from("s,g\n");
    for i in 0..=args.grid {
        let s = i as Real / args.grid as Real;
        out.push_str(&format!("{s},{}\n", params.eval(s)?));
    }
    write_atomic(&args.out, &out)
}
