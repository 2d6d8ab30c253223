//! Command-line front end: `estimate`, `trials`, `boundary`, `generate` and
//! `bench`.
//!
//! Results go to stdout, diagnostics to stderr. Exit codes: 0 success,
//! 1 usage or I/O error, 2 degenerate data.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{ArgAction, Args, Parser, Subcommand};
use cnmbi_core::datasets::{
    generate_blobs, generate_scattered_noise_blobs, generate_scenario, generate_unbalanced, read_csv, write_csv,
    ColumnSelector, ScenarioFamily,
};
use cnmbi_core::sweep::{run_trials, PreparedSweep, TrialsReport};
use cnmbi_core::{boundary_degree, core_subset, Dataset64, DistanceIndex64, KMeansConfig, Normalization, SweepConfig};
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DEGENERATE: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] cnmbi_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_degenerate() => EXIT_DEGENERATE,
            _ => EXIT_USAGE,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "cnmbi", version, about = "Estimate the number of clusters in numeric data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "CNMBI_THREADS")]
    pub threads: Option<usize>,
    /// Log progress to stderr; repeat for more detail.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep k and report the estimated cluster count.
    Estimate(EstimateArgs),
    /// Repeat the estimate under different seeds; report NC and ACC.
    Trials(TrialsArgs),
    /// Export per-point boundary degrees.
    Boundary(BoundaryArgs),
    /// Write a synthetic dataset as CSV.
    Generate(GenerateArgs),
    /// Run the robustness scenario matrix.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// CSV file with one point per row.
    #[arg(long)]
    pub input: PathBuf,
    /// Label column, by zero-based index or header name; excluded from features.
    #[arg(long)]
    pub label_col: Option<ColumnSelector>,
    /// Feature scaling: none, minmax or zscore.
    #[arg(long, default_value = "none")]
    pub normalize: Normalization,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 2)]
    pub k_min: usize,
    /// Largest k (default: floor(sqrt(n))).
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Fraction of points removed as boundary points.
    #[arg(long, default_value_t = cnmbi_core::boundary::DEFAULT_LAMBDA)]
    pub lambda: f64,
    /// Quantile of pairwise distances used as the cutoff radius.
    #[arg(long, default_value_t = cnmbi_core::density::DEFAULT_DC_PERCENTILE)]
    pub dc_percentile: f64,
    /// Skip boundary filtering.
    #[arg(long)]
    pub no_filter: bool,
    /// Match two independent K-means runs instead of density vs mean centers.
    #[arg(long)]
    pub mean_vs_mean: bool,
    /// K-means restarts per k.
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl SweepArgs {
    pub fn config(&self) -> CliResult<SweepConfig> {
        if self.restarts == 0 {
            return Err(CliError::Usage("--restarts must be at least 1".into()));
        }
        if let Some(k_max) = self.k_max {
            if self.k_min > k_max {
                return Err(CliError::Usage(format!("--k-min {} exceeds --k-max {k_max}", self.k_min)));
            }
        }
        if !(self.dc_percentile > 0.0 && self.dc_percentile <= 1.0) {
            return Err(CliError::Usage(format!("--dc-percentile {} outside (0, 1]", self.dc_percentile)));
        }
        Ok(SweepConfig {
            k_min: self.k_min,
            k_max: self.k_max,
            lambda: self.lambda,
            dc_percentile: self.dc_percentile,
            kmeans: KMeansConfig { restarts: self.restarts, ..KMeansConfig::default() },
            seed: self.seed,
            filtering_enabled: !self.no_filter,
            mean_vs_mean: self.mean_vs_mean,
            boundary_norm: 1.0,
        })
    }
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub sweep: SweepArgs,
    /// Write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the loss curve as a `k,loss` CSV.
    #[arg(long)]
    pub emit_curve: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrialsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub sweep: SweepArgs,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundaryArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = cnmbi_core::boundary::DEFAULT_LAMBDA)]
    pub lambda: f64,
    #[arg(long, default_value_t = cnmbi_core::density::DEFAULT_DC_PERCENTILE)]
    pub dc_percentile: f64,
    /// Print the N highest-phi original indices instead of the full table.
    #[arg(long)]
    pub top: Option<usize>,
    /// Write the full ranking CSV here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(subcommand)]
    pub kind: GenerateKind,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV (default: stdout).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum GenerateKind {
    /// Isotropic Gaussian blobs.
    Blobs {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 100)]
        per_cluster: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        spread: f64,
        #[arg(long, default_value_t = 7.0)]
        separation: f64,
    },
    /// A robustness scenario: noise 1-90, density 1-4 or count >= 1.
    Scenario {
        #[arg(long)]
        family: ScenarioFamily,
        #[arg(long)]
        level: u32,
    },
    /// Three clusters of unequal size and density.
    Unbalanced,
    /// Three blobs with 20% noise scattered well away from them.
    ScatteredNoise,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = cnmbi_core::boundary::DEFAULT_LAMBDA)]
    pub lambda: f64,
    #[arg(long)]
    pub no_filter: bool,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long, default_value = "bench_report.json")]
    pub out: PathBuf,
}

/// Content hash of an input file.
#[derive(Debug, Clone, Serialize)]
pub struct Fingerprint {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Provenance record written next to the primary output as `<out>.manifest.json`.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: serde_json::Value,
    pub input: Option<Fingerprint>,
    pub outputs: Vec<String>,
    pub timings_ms: serde_json::Value,
    pub version: &'static str,
}

pub fn fingerprint(path: &Path, bytes: &[u8]) -> Fingerprint {
    let digest = Sha256::digest(bytes);
    let mut hex = String::with_capacity(64);
    for b in digest {
        let _ = write!(hex, "{b:02x}");
    }
    Fingerprint { path: path.display().to_string(), bytes: bytes.len(), sha256: hex }
}

pub fn manifest_path(primary: &Path) -> PathBuf {
    let mut s = primary.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn write_file(path: &Path, contents: &[u8]) -> CliResult<()> {
    fs::write(path, contents).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn write_manifest(manifest: &RunManifest) -> CliResult<()> {
    if let Some(first) = manifest.outputs.first() {
        write_json(&manifest_path(Path::new(first)), manifest)?;
    }
    Ok(())
}

fn out_io(e: std::io::Error) -> CliError {
    CliError::Io { path: PathBuf::from("<stdout>"), source: e }
}

/// Reads and fingerprints the input CSV.
pub fn load_input(args: &InputArgs) -> CliResult<(Dataset64, Fingerprint)> {
    let bytes = fs::read(&args.input).map_err(|source| CliError::Io { path: args.input.clone(), source })?;
    let name = args.input.file_stem().map_or_else(|| "input".to_string(), |s| s.to_string_lossy().into_owned());
    let data = read_csv(bytes.as_slice(), args.label_col.as_ref(), args.normalize, name)?;
    Ok((data, fingerprint(&args.input, &bytes)))
}

#[derive(Serialize)]
struct InputEcho<'a> {
    label_col: Option<String>,
    normalize: Normalization,
    sweep: &'a SweepConfig,
}

fn echo(input: &InputArgs, sweep: &SweepConfig) -> serde_json::Value {
    serde_json::to_value(InputEcho {
        label_col: input.label_col.as_ref().map(|c| c.to_string()),
        normalize: input.normalize,
        sweep,
    })
    .unwrap_or(serde_json::Value::Null)
}

pub fn cmd_estimate(args: &EstimateArgs, out: &mut dyn Write) -> CliResult<()> {
    let config = args.sweep.config()?;
    let (data, print) = load_input(&args.input)?;
    let report = PreparedSweep::new(&data, &config)?.sweep(config.seed)?;

    writeln!(out, "K* = {}", report.k_star).map_err(out_io)?;
    writeln!(out, "n = {}, core = {}, k in [{}, {}]", report.n, report.n_core, report.k_min, report.k_max)
        .map_err(out_io)?;
    for l in &report.losses {
        writeln!(out, "k = {:>3}  loss = {:.6e}", l.k, l.loss).map_err(out_io)?;
    }
    for s in &report.skipped {
        writeln!(out, "k = {:>3}  skipped: {}", s.k, s.reason).map_err(out_io)?;
    }

    let mut outputs = Vec::new();
    if let Some(path) = &args.out {
        write_json(path, &report)?;
        outputs.push(path.display().to_string());
    }
    if let Some(path) = &args.emit_curve {
        let mut csv = String::from("k,loss\n");
        for l in &report.losses {
            let _ = writeln!(csv, "{},{}", l.k, l.loss);
        }
        write_file(path, csv.as_bytes())?;
        outputs.push(path.display().to_string());
    }
    write_manifest(&RunManifest {
        subcommand: "estimate".into(),
        config: echo(&args.input, &config),
        input: Some(print),
        outputs,
        timings_ms: serde_json::to_value(report.timings)?,
        version: env!("CARGO_PKG_VERSION"),
    })
}

#[derive(Serialize)]
struct TrialsOutput<'a> {
    config: &'a SweepConfig,
    #[serde(flatten)]
    report: &'a TrialsReport,
}

pub fn cmd_trials(args: &TrialsArgs, out: &mut dyn Write) -> CliResult<()> {
    if args.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let config = args.sweep.config()?;
    let (data, print) = load_input(&args.input)?;
    let start = Instant::now();
    let report = run_trials(&data, &config, args.trials)?;
    let elapsed = start.elapsed().as_secs_f64() * 1e3;

    writeln!(out, "NC = {}", report.nc).map_err(out_io)?;
    match report.acc {
        Some(acc) => writeln!(out, "ACC = {acc}"),
        None => writeln!(out, "ACC = unavailable (no labels)"),
    }
    .map_err(out_io)?;
    let estimates: Vec<String> = report.k_stars.iter().map(usize::to_string).collect();
    writeln!(out, "K* per trial: {}", estimates.join(" ")).map_err(out_io)?;

    let mut outputs = Vec::new();
    if let Some(path) = &args.out {
        write_json(path, &TrialsOutput { config: &config, report: &report })?;
        outputs.push(path.display().to_string());
    }
    write_manifest(&RunManifest {
        subcommand: "trials".into(),
        config: echo(&args.input, &config),
        input: Some(print),
        outputs,
        timings_ms: serde_json::json!({ "total_ms": elapsed }),
        version: env!("CARGO_PKG_VERSION"),
    })
}

fn phi_text(phi: f64) -> String {
    if phi.is_infinite() {
        "inf".into()
    } else {
        phi.to_string()
    }
}

pub fn cmd_boundary(args: &BoundaryArgs, out: &mut dyn Write) -> CliResult<()> {
    let (data, print) = load_input(&args.input)?;
    let start = Instant::now();
    let index = DistanceIndex64::build(&data, args.dc_percentile)?;
    let scores = boundary_degree(&data, &index)?;
    let (_, profile) = core_subset(&data, &scores, args.lambda)?;
    let elapsed = start.elapsed().as_secs_f64() * 1e3;

    let ranking = profile.ranking();
    let mut table = String::from("original_index,phi,neighbor_count,removed\n");
    for &i in &ranking {
        let _ = writeln!(
            table,
            "{i},{},{},{}",
            phi_text(profile.phi[i]),
            profile.neighbor_counts[i],
            !profile.core_mask[i]
        );
    }

    match args.top {
        Some(top) => {
            writeln!(out, "original_index,phi").map_err(out_io)?;
            for &i in ranking.iter().take(top) {
                writeln!(out, "{i},{}", phi_text(profile.phi[i])).map_err(out_io)?;
            }
        }
        None if args.out.is_none() => out.write_all(table.as_bytes()).map_err(out_io)?,
        None => {}
    }

    let mut outputs = Vec::new();
    if let Some(path) = &args.out {
        write_file(path, table.as_bytes())?;
        outputs.push(path.display().to_string());
    }
    write_manifest(&RunManifest {
        subcommand: "boundary".into(),
        config: serde_json::json!({
            "lambda": args.lambda,
            "dc_percentile": args.dc_percentile,
            "dc": profile.dc,
            "normalize": args.input.normalize,
        }),
        input: Some(print),
        outputs,
        timings_ms: serde_json::json!({ "total_ms": elapsed }),
        version: env!("CARGO_PKG_VERSION"),
    })
}

pub fn cmd_generate(args: &GenerateArgs, out: &mut dyn Write) -> CliResult<()> {
    let data: Dataset64 = match &args.kind {
        GenerateKind::Blobs { k, per_cluster, dim, spread, separation } => {
            generate_blobs(*k, *per_cluster, *dim, *spread, *separation, args.seed)?
        }
        GenerateKind::Scenario { family, level } => generate_scenario(*family, *level, args.seed)?,
        GenerateKind::Unbalanced => generate_unbalanced(args.seed)?,
        GenerateKind::ScatteredNoise => generate_scattered_noise_blobs(args.seed)?,
    };
    let mut buf = Vec::new();
    write_csv(&data, &mut buf)?;
    match &args.out {
        Some(path) => {
            write_file(path, &buf)?;
            writeln!(out, "wrote {} rows ({}) to {}", data.n(), data.name(), path.display()).map_err(out_io)?;
            write_manifest(&RunManifest {
                subcommand: "generate".into(),
                config: serde_json::json!({ "kind": format!("{:?}", args.kind), "seed": args.seed }),
                input: None,
                outputs: vec![path.display().to_string()],
                timings_ms: serde_json::Value::Null,
                version: env!("CARGO_PKG_VERSION"),
            })
        }
        None => out.write_all(&buf).map_err(out_io),
    }
}

/// One scenario row of the bench table.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub family: ScenarioFamily,
    pub level: u32,
    pub n: usize,
    pub true_k: Option<usize>,
    pub nc: usize,
    pub acc: Option<f64>,
    pub k_stars: Vec<usize>,
}

#[derive(Debug, Serialize)]
pub struct BenchReport {
    pub trials: usize,
    pub seed: u64,
    pub config: SweepConfig,
    pub rows: Vec<BenchRow>,
}

/// Runs every scenario in the matrix; data and trials are both seeded by `seed`.
pub fn run_bench(config: &SweepConfig, trials: usize, seed: u64) -> CliResult<BenchReport> {
    let mut rows = Vec::new();
    for family in ScenarioFamily::ALL {
        for &level in family.levels() {
            let data: Dataset64 = generate_scenario(family, level, seed)?;
            log::info!("bench {family}/{level}: n = {}", data.n());
            let report = run_trials(&data, config, trials)?;
            rows.push(BenchRow {
                family,
                level,
                n: data.n(),
                true_k: report.true_k,
                nc: report.nc,
                acc: report.acc,
                k_stars: report.k_stars,
            });
        }
    }
    Ok(BenchReport { trials, seed, config: config.clone(), rows })
}

pub fn cmd_bench(args: &BenchArgs, out: &mut dyn Write) -> CliResult<()> {
    if args.trials == 0 || args.restarts == 0 {
        return Err(CliError::Usage("--trials and --restarts must be at least 1".into()));
    }
    let config = SweepConfig {
        lambda: args.lambda,
        filtering_enabled: !args.no_filter,
        kmeans: KMeansConfig { restarts: args.restarts, ..KMeansConfig::default() },
        seed: args.seed,
        ..SweepConfig::default()
    };
    let start = Instant::now();
    let report = run_bench(&config, args.trials, args.seed)?;
    let elapsed = start.elapsed().as_secs_f64() * 1e3;

    writeln!(out, "{:<8} {:>5} {:>6} {:>6} {:>4} {:>6}", "family", "level", "n", "true_k", "NC", "ACC")
        .map_err(out_io)?;
    for r in &report.rows {
        let truth = r.true_k.map_or("-".to_string(), |k| k.to_string());
        let acc = r.acc.map_or("-".to_string(), |a| format!("{a:.2}"));
        writeln!(out, "{:<8} {:>5} {:>6} {:>6} {:>4} {:>6}", r.family.to_string(), r.level, r.n, truth, r.nc, acc)
            .map_err(out_io)?;
    }
    write_json(&args.out, &report)?;
    write_manifest(&RunManifest {
        subcommand: "bench".into(),
        config: serde_json::to_value(&config)?,
        input: None,
        outputs: vec![args.out.display().to_string()],
        timings_ms: serde_json::json!({ "total_ms": elapsed }),
        version: env!("CARGO_PKG_VERSION"),
    })
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    match &cli.command {
        Command::Estimate(a) => cmd_estimate(a, out),
        Command::Trials(a) => cmd_trials(a, out),
        Command::Boundary(a) => cmd_boundary(a, out),
        Command::Generate(a) => cmd_generate(a, out),
        Command::Bench(a) => cmd_bench(a, out),
    }
}

/// Runs a command line and returns the process exit code.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();

    // Results are buffered so the command can run inside a dedicated pool.
    let mut buffer = Vec::new();
    let result = match cli.threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli, &mut buffer)),
            Err(e) => Err(CliError::Usage(format!("thread pool: {e}"))),
        },
        None => dispatch(&cli, &mut buffer),
    };
    let result = result.and_then(|()| out.write_all(&buffer).and_then(|()| out.flush()).map_err(out_io));
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_hex() {
        let f = fingerprint(Path::new("x"), b"abc");
        assert_eq!(f.sha256, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        assert_eq!(f.bytes, 3);
    }

    #[test]
    fn manifest_sits_next_to_output() {
        assert_eq!(manifest_path(Path::new("out/r.json")), PathBuf::from("out/r.json.manifest.json"));
    }

    #[test]
    fn infinite_phi_prints_inf() {
        assert_eq!(phi_text(f64::INFINITY), "inf");
        assert_eq!(phi_text(1.5), "1.5");
    }

    #[test]
    fn sweep_args_validation() {
        let args = |k_min, k_max, restarts| SweepArgs {
            k_min,
            k_max,
            lambda: 0.1,
            dc_percentile: 0.02,
            no_filter: true,
            mean_vs_mean: false,
            restarts,
            seed: 3,
        };
        let cfg = args(2, Some(5), 4).config().unwrap();
        assert!(!cfg.filtering_enabled);
        assert_eq!((cfg.kmeans.restarts, cfg.seed, cfg.k_max), (4, 3, Some(5)));
        assert!(args(6, Some(5), 4).config().is_err());
        assert!(args(2, None, 0).config().is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Core(cnmbi_core::Error::Degenerate("x".into())).exit_code(), EXIT_DEGENERATE);
        assert_eq!(CliError::Core(cnmbi_core::Error::Empty).exit_code(), EXIT_USAGE);
        assert_eq!(CliError::Usage("x".into()).exit_code(), EXIT_USAGE);
    }
}
