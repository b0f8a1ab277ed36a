//! Batch front end: reads a scenario file, runs one experiment and writes
//! versioned CSV artifacts plus a `manifest.json` describing the run.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use risbeam_core::io;
use risbeam_core::sim::{self, BenchmarkId, DesignId, InitKind, Scenario};
use risbeam_core::{to_db, Error};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

#[derive(Debug, Parser)]
#[command(name = "risbeam", version, about = "RIS beam design and link simulation experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Scenario file (TOML)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Overrides the scenario seed
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the number of cores
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Progress messages on stderr
    #[arg(long, short, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Far-field and quadratic near-field distances
    Regime,
    /// Analytic phase profiles
    DesignAnalytic {
        /// Comma-separated design names; defaults to all analytic designs
        #[arg(long = "design", value_delimiter = ',')]
        designs: Vec<String>,
    },
    /// Penalty/SCA optimized phase profiles with their traces
    DesignOptimize {
        /// Comma-separated design names; defaults to both optimized designs
        #[arg(long = "design", value_delimiter = ',')]
        designs: Vec<String>,
    },
    /// Normalized GRCS maps over the scan grid
    Illuminate {
        /// Comma-separated design names; defaults to all analytic designs
        #[arg(long = "design", value_delimiter = ',', conflicts_with = "profile")]
        designs: Vec<String>,
        /// Profile CSV to map instead of designing one
        #[arg(long)]
        profile: Option<PathBuf>,
    },
    /// Worst-case GRCS versus area length
    RegionSweep,
    /// Mean SNR versus Rician K-factor
    SnrVsK {
        /// Comma-separated benchmark names; defaults to all
        #[arg(long = "benchmark", value_delimiter = ',')]
        benchmarks: Vec<String>,
    },
    /// Optimizer traces from the analytic and random initializations
    Convergence,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Regime => "regime",
            Command::DesignAnalytic { .. } => "design-analytic",
            Command::DesignOptimize { .. } => "design-optimize",
            Command::Illuminate { .. } => "illuminate",
            Command::RegionSweep => "region-sweep",
            Command::SnrVsK { .. } => "snr-vs-k",
            Command::Convergence => "convergence",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Usage,
    Config,
    Validation,
    Io,
    Numerical,
}

impl ErrorCategory {
    pub fn name(self) -> &'static str {
        match self {
            ErrorCategory::Usage => "usage",
            ErrorCategory::Config => "config",
            ErrorCategory::Validation => "validation",
            ErrorCategory::Io => "io",
            ErrorCategory::Numerical => "numerical",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Config => 2,
            ErrorCategory::Validation => 3,
            ErrorCategory::Io => 4,
            ErrorCategory::Numerical => 5,
            ErrorCategory::Usage => 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub category: ErrorCategory,
    pub message: String,
    /// Offending key, when known.
    pub field: Option<String>,
    /// 1-based position in the configuration text.
    pub line: Option<usize>,
    pub column: Option<usize>,
}

impl CliError {
    fn new(category: ErrorCategory, message: impl Into<String>) -> Self {
        Self { category, message: message.into(), field: None, line: None, column: None }
    }

    fn usage(message: impl Into<String>) -> Self {
        Self::new(ErrorCategory::Usage, message)
    }

    fn io(path: &Path, e: impl fmt::Display) -> Self {
        Self::new(ErrorCategory::Io, format!("{}: {e}", path.display()))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "error": {
                "category": self.category.name(),
                "message": self.message,
                "field": self.field,
                "line": self.line,
                "column": self.column,
            }
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} error: {}", self.category.name(), self.message)?;
        if let (Some(l), Some(c)) = (self.line, self.column) {
            write!(f, " (line {l}, column {c})")?;
        }
        Ok(())
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let category = match &e {
            Error::Io(_) => ErrorCategory::Io,
            Error::NotPsd { .. } | Error::Solver { .. } | Error::TooLarge(_) => ErrorCategory::Numerical,
            Error::Domain(_) | Error::DimensionMismatch { .. } | Error::InvalidParameter { .. } | Error::EmptyTargets => {
                ErrorCategory::Validation
            }
        };
        let mut out = CliError::new(category, e.to_string());
        if let Error::InvalidParameter { name, .. } = e {
            out.field = Some(name.to_string());
        }
        out
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

fn backticked(msg: &str) -> Option<String> {
    let start = msg.find('`')? + 1;
    let len = msg[start..].find('`')?;
    Some(msg[start..start + len].to_string())
}

/// Parses and validates a TOML scenario; unknown keys are rejected and
/// omitted optional sections take their defaults.
pub fn parse_config(text: &str) -> Result<Scenario, CliError> {
    let s: Scenario = toml::from_str(text).map_err(|e| {
        let mut err = CliError::new(ErrorCategory::Config, e.message().trim().to_string());
        if let Some(span) = e.span() {
            let (l, c) = line_col(text, span.start);
            err.line = Some(l);
            err.column = Some(c);
            let key = text[span.clone()].trim();
            err.field = backticked(e.message()).or_else(|| (!key.is_empty() && !key.contains('\n')).then(|| key.to_string()));
        } else {
            err.field = backticked(e.message());
        }
        err
    })?;
    s.validate()?;
    Ok(s)
}

/// One artifact written by a subcommand.
struct Artifact {
    file: String,
    bytes: Vec<u8>,
}

fn csv_artifact(file: impl Into<String>, write: impl FnOnce(&mut Vec<u8>) -> risbeam_core::Result<()>) -> Result<Artifact, CliError> {
    let mut bytes = Vec::new();
    write(&mut bytes)?;
    Ok(Artifact { file: file.into(), bytes })
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn parse_designs(names: &[String], default: &[DesignId], allowed: impl Fn(DesignId) -> bool, command: &str) -> Result<Vec<DesignId>, CliError> {
    if names.is_empty() {
        return Ok(default.to_vec());
    }
    names
        .iter()
        .map(|n| {
            let id = DesignId::parse(n).ok_or_else(|| {
                let known: Vec<&str> = DesignId::ALL.iter().map(|d| d.name()).collect();
                CliError::usage(format!("unknown design '{n}', expected one of {}", known.join(", ")))
            })?;
            if !allowed(id) {
                return Err(CliError::usage(format!("design '{n}' is not available in {command}")));
            }
            Ok(id)
        })
        .collect()
}

fn is_optimized(id: DesignId) -> bool {
    matches!(id, DesignId::OptimizedFF | DesignId::OptimizedNF)
}

const ANALYTIC: [DesignId; 4] = [DesignId::LinearFF, DesignId::QuadraticFF, DesignId::FocusNF, DesignId::WideNF];

struct Run<'a> {
    s: &'a Scenario,
    verbose: bool,
    artifacts: Vec<Artifact>,
    inputs: Vec<Value>,
    options: Value,
}

impl Run<'_> {
    fn progress(&self, msg: impl fmt::Display) {
        if self.verbose {
            eprintln!("{msg}");
        }
    }
}

fn execute(command: &Command, run: &mut Run<'_>) -> Result<(), CliError> {
    let s = run.s;
    match command {
        Command::Regime => {
            let rows = s.regime_rows()?;
            for r in &rows {
                println!("f = {} GHz, D = {:.3} m: d_FF = {:.1} m, d_qNF = {:.2} m", r.freq_ghz, r.d_m, r.d_ff_m, r.d_qnf_m);
            }
            run.artifacts.push(csv_artifact("regime.csv", |b| io::write_regime(b, &rows))?);
        }
        Command::DesignAnalytic { designs } => {
            let ids = parse_designs(designs, &ANALYTIC, |d| !is_optimized(d), "design-analytic")?;
            run.options = json!({ "designs": ids.iter().map(|d| d.name()).collect::<Vec<_>>() });
            for id in ids {
                let d = sim::design(s, id)?;
                println!("{id}: worst-case normalized GRCS {:.3} dB", sim::worst_case_db(s, &d.profile)?);
                run.artifacts.push(csv_artifact(format!("profile_{id}.csv"), |b| io::write_profile(b, &d.profile))?);
            }
        }
        Command::DesignOptimize { designs } => {
            let ids = parse_designs(designs, &[DesignId::OptimizedFF, DesignId::OptimizedNF], is_optimized, "design-optimize")?;
            run.options = json!({ "designs": ids.iter().map(|d| d.name()).collect::<Vec<_>>() });
            for id in ids {
                run.progress(format_args!("optimizing {id}"));
                let d = sim::design(s, id)?;
                let sca = d.sca.as_ref().expect("optimized designs carry a trace");
                println!(
                    "{id}: target-set value {:.3} dB after {} iterations, spatial worst case {:.3} dB",
                    to_db(sca.value),
                    sca.trace.last().iter,
                    sim::worst_case_db(s, &d.profile)?
                );
                run.artifacts.push(csv_artifact(format!("profile_{id}.csv"), |b| io::write_profile(b, &d.profile))?);
                run.artifacts.push(csv_artifact(format!("trace_{id}.csv"), |b| io::write_trace(b, &sca.trace))?);
            }
        }
        Command::Illuminate { designs, profile } => {
            let mut summaries = Vec::new();
            if let Some(path) = profile {
                let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
                run.inputs.push(json!({ "file": path.display().to_string(), "sha256": sha256_hex(&bytes) }));
                let p = io::read_profile(bytes.as_slice())?;
                let (field, summary) = sim::illumination_map(s, &p)?;
                run.artifacts.push(csv_artifact("illumination_profile.csv", |b| io::write_grcs_field(b, &field))?);
                summaries.push(("profile".to_string(), summary));
            } else {
                let ids = parse_designs(designs, &ANALYTIC, |_| true, "illuminate")?;
                run.options = json!({ "designs": ids.iter().map(|d| d.name()).collect::<Vec<_>>() });
                for id in ids {
                    run.progress(format_args!("illuminating {id}"));
                    let ill = sim::run_illumination(s, id)?;
                    run.artifacts.push(csv_artifact(format!("illumination_{id}.csv"), |b| io::write_grcs_field(b, &ill.field))?);
                    summaries.push((id.name().to_string(), ill.summary));
                }
            }
            for (name, x) in &summaries {
                println!(
                    "{name}: in-region {:.2}..{:.2} dB, leakage {:.2} dB, peak {:.2} dB at [{:.2}, {:.2}, {:.2}] m",
                    x.min_in_region_db, x.max_in_region_db, x.leakage_db, x.peak_db, x.peak_m[0], x.peak_m[1], x.peak_m[2]
                );
            }
            run.artifacts.push(csv_artifact("illumination_summary.csv", |b| io::write_illumination_summary(b, &summaries))?);
        }
        Command::RegionSweep => {
            let r = &s.experiments.sweep_r_m;
            if r.is_empty() {
                return Err(CliError {
                    field: Some("experiments.sweep_r_m".into()),
                    ..CliError::new(ErrorCategory::Validation, "region-sweep needs at least one area length")
                });
            }
            run.progress(format_args!("sweeping {} area lengths", r.len()));
            let rows = sim::run_region_sweep(s, r)?;
            for row in &rows {
                println!("R = {} m, {}: {:.3} dB", row.r_m, row.design, row.min_grcs_db);
            }
            run.artifacts.push(csv_artifact("region_sweep.csv", |b| io::write_sweep(b, &rows))?);
        }
        Command::SnrVsK { benchmarks } => {
            let ids = if benchmarks.is_empty() {
                BenchmarkId::ALL.to_vec()
            } else {
                benchmarks
                    .iter()
                    .map(|n| BenchmarkId::parse(n).ok_or_else(|| CliError::usage(format!("unknown benchmark '{n}'"))))
                    .collect::<Result<_, _>>()?
            };
            run.options = json!({ "benchmarks": ids.iter().map(|b| b.name()).collect::<Vec<_>>() });
            run.progress(format_args!("{} trials x {} K values", s.trials, s.multipath.k_db.len()));
            let r = sim::run_snr_vs_k(s, &s.multipath.k_db, &ids)?;
            for p in &r.points {
                let se = p.std_err_db.map_or(String::new(), |e| format!(" ± {e:.2}"));
                println!("K = {} dB, {}: {:.2}{se} dB", p.k_db, p.benchmark, p.mean_snr_db);
            }
            run.artifacts.push(csv_artifact("snr_vs_k.csv", |b| io::write_snr(b, &r))?);
        }
        Command::Convergence => {
            let n = s.experiments.random_inits;
            run.progress(format_args!("analytic + {n} random initializations"));
            let runs = sim::run_convergence(s, n, s.seed)?;
            for r in &runs {
                let last = r.outcome.trace.last();
                println!(
                    "{}: {:.3} dB, rank residual {:.3e} after {} iterations",
                    r.init,
                    to_db(r.outcome.value),
                    last.rank_residual,
                    last.iter
                );
                let name = match r.init {
                    InitKind::Analytic => "trace_analytic.csv".to_string(),
                    InitKind::Random { seed } => format!("trace_random_{seed}.csv"),
                };
                run.artifacts.push(csv_artifact(name, |b| io::write_trace(b, &r.outcome.trace))?);
            }
        }
    }
    Ok(())
}

/// Summary of a finished run.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub files: Vec<String>,
}

/// Runs one subcommand: loads the scenario, executes on a pool of
/// `--workers` threads and writes the artifacts and `manifest.json`.
pub fn dispatch(cli: &Cli) -> Result<RunReport, CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::usage("--config <path> is required"))?;
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut s = parse_config(&text)?;
    if let Some(seed) = cli.seed {
        s.seed = seed;
    }
    if cli.workers == Some(0) {
        return Err(CliError::usage("--workers must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::new(ErrorCategory::Usage, e.to_string()))?;
    let mut run = Run { s: &s, verbose: cli.verbose, artifacts: Vec::new(), inputs: Vec::new(), options: json!({}) };
    pool.install(|| execute(&cli.command, &mut run))?;

    fs::create_dir_all(&cli.out).map_err(|e| CliError::io(&cli.out, e))?;
    let mut outputs = Vec::new();
    for a in &run.artifacts {
        let p = cli.out.join(&a.file);
        fs::write(&p, &a.bytes).map_err(|e| CliError::io(&p, e))?;
        outputs.push(json!({ "file": a.file, "sha256": sha256_hex(&a.bytes) }));
    }
    let scenario = serde_json::to_value(&s).map_err(|e| CliError::new(ErrorCategory::Io, e.to_string()))?;
    let manifest = json!({
        "tool": "risbeam",
        "version": env!("CARGO_PKG_VERSION"),
        "core_version": risbeam_core::VERSION,
        "subcommand": cli.command.name(),
        "options": run.options,
        "config": {
            "file": path.file_name().map(|f| f.to_string_lossy().into_owned()),
            "sha256": sha256_hex(text.as_bytes()),
        },
        "inputs": run.inputs,
        "seed": s.seed,
        "scenario": scenario,
        "outputs": outputs,
    });
    let mut body = serde_json::to_string_pretty(&manifest).expect("manifest is plain JSON");
    body.push('\n');
    let mp = cli.out.join("manifest.json");
    fs::write(&mp, body).map_err(|e| CliError::io(&mp, e))?;
    let mut files: Vec<String> = run.artifacts.iter().map(|a| a.file.clone()).collect();
    files.push("manifest.json".into());
    Ok(RunReport { out_dir: cli.out.clone(), files })
}

/// Parses arguments, dispatches and returns the process exit code. Errors
/// go to stderr as a single JSON object.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                return 0;
            }
            let err = CliError::usage(e.kind().to_string());
            eprintln!("{}", err.to_json());
            if e.use_stderr() {
                let _ = e.print();
            }
            return err.category.exit_code();
        }
    };
    match dispatch(&cli) {
        Ok(report) => {
            if cli.verbose {
                eprintln!("wrote {} files to {}", report.files.len(), report.out_dir.display());
            }
            0
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.category.exit_code()
        }
    }
}
