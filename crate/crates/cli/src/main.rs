use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use compress_cert::bounds::BoundTable;
use compress_cert::compression::{CheckConfig, Property};
use compress_cert::exec::with_threads;
use compress_cert::experiments::validation::{validate_scheme, Expectation, ValidationOptions, ValidationOutcome, ValidationScheme};
use compress_cert::experiments::{
    coverage_report, run_trials, write_trials_csv, ExperimentConfig, ExperimentError, TrialResult, TrialStats,
};
use compress_cert::{Execution, Precision};
use serde::Deserialize;
use serde_json::json;

const SEED_ENV: &str = "COMPRESS_CERT_SEED";

/// Confidence bounds for compression schemes: tables, property checks and Monte Carlo runs.
#[derive(Debug, Parser)]
#[command(name = "compress-cert", version)]
struct Cli {
    /// Worker threads for parallel stages (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate eps_k, the interval bounds and the explicit envelope for k = 0..N.
    Bounds(BoundsArgs),
    /// Check compression properties of a reference scheme on random samples.
    Validate(ValidateArgs),
    /// Run a Monte Carlo experiment from a JSON config.
    Simulate(SimulateArgs),
    /// Recompute the coverage summary of an existing trials CSV.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct BoundsArgs {
    /// Training-sample size N.
    #[arg(long)]
    n: u64,
    /// Confidence parameter; one table is written per value.
    #[arg(long, required = true)]
    delta: Vec<f64>,
    /// Output path; `_delta<value>` is inserted before the extension.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long, value_parser = parse_scheme)]
    scheme: ValidationScheme,
    /// Property to check (repeatable); defaults to every property the scheme supports.
    #[arg(long, value_parser = parse_property)]
    property: Vec<Property>,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Training multiset size; defaults to the scheme's reference size.
    #[arg(long)]
    sample_size: Option<usize>,
    /// Check the augmented scheme instead.
    #[arg(long)]
    augment: bool,
    /// Succeed with exit 3 when every documented failure is exhibited.
    #[arg(long)]
    expect_fail: bool,
    /// JSON report path; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Trials CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Summary JSON path; defaults to the CSV path with extension `summary.json`.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// The config the trials were produced with.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    trials: PathBuf,
    /// Summary JSON path; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_scheme(s: &str) -> Result<ValidationScheme, String> {
    s.parse()
}

fn parse_property(s: &str) -> Result<Property, String> {
    s.parse()
}

#[derive(Debug)]
enum Failure {
    Io(String),
    Usage(String),
    Check(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Check(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Io(m) | Failure::Usage(m) | Failure::Check(m) => m,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> Failure + '_ {
    move |e| Failure::Io(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(io_err(path))
}

fn pretty(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn seed_override(flag: Option<u64>) -> Result<Option<u64>, Failure> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::Usage(format!("{SEED_ENV}: expected an unsigned integer, got `{v}`"))),
        Err(_) => Ok(flag),
    }
}

fn delta_path(out: &Path, delta: f64) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}_delta{delta:e}.{}", ext.to_string_lossy()),
        None => format!("{stem}_delta{delta:e}"),
    };
    out.with_file_name(name)
}

fn cmd_bounds(a: &BoundsArgs) -> Result<u8, Failure> {
    if a.n == 0 {
        return Err(Failure::Usage("--n: must be at least 1".into()));
    }
    if let Some(d) = a.delta.iter().find(|d| !(**d > 0.0 && **d < 1.0)) {
        return Err(Failure::Usage(format!("--delta: must lie in (0, 1), got {d}")));
    }
    for &d in &a.delta {
        let table = BoundTable::compute(a.n, d, &Precision::default(), Execution::Parallel)
            .map_err(|e| Failure::Io(format!("bound computation failed: {e}")))?;
        let path = delta_path(&a.out, d);
        let mut buf = Vec::new();
        table.write_csv(&mut buf).map_err(io_err(&path))?;
        write_file(&path, &buf)?;
        println!("{}", path.display());
    }
    Ok(0)
}

fn cmd_validate(a: &ValidateArgs) -> Result<u8, Failure> {
    let props: Vec<Property> = if a.property.is_empty() {
        Property::ALL
            .into_iter()
            .filter(|&p| a.scheme.expectation(p, a.augment).is_some())
            .collect()
    } else {
        a.property.clone()
    };
    let opts = ValidationOptions {
        check: CheckConfig {
            trials: a.trials,
            seed: seed_override(Some(a.seed))?.unwrap_or(a.seed),
            exec: Execution::Parallel,
            ..CheckConfig::default()
        },
        sample_size: a.sample_size,
        augment: a.augment,
    };
    let outcomes = validate_scheme(a.scheme, &props, &opts).map_err(Failure::Usage)?;
    let report = pretty(&outcomes);
    match &a.out {
        Some(path) => write_file(path, report.as_bytes())?,
        None => print!("{report}"),
    }
    for o in &outcomes {
        eprintln!(
            "{} {}: {} violations in {} trials (documented: {})",
            o.scheme,
            o.report.property,
            o.report.violations,
            o.report.trials,
            expectation_name(o.expectation)
        );
    }
    let broken: Vec<&ValidationOutcome> = outcomes
        .iter()
        .filter(|o| o.expectation == Expectation::Holds && o.report.violations > 0)
        .collect();
    if !broken.is_empty() {
        let names: Vec<&str> = broken.iter().map(|o| o.report.property.as_str()).collect();
        return Err(Failure::Check(format!("documented properties violated: {}", names.join(", "))));
    }
    if !a.expect_fail {
        return Ok(0);
    }
    let expected: Vec<&ValidationOutcome> = outcomes.iter().filter(|o| o.expectation == Expectation::Fails).collect();
    if expected.is_empty() {
        return Err(Failure::Check("--expect-fail: none of the requested properties is documented to fail".into()));
    }
    if let Some(o) = expected.iter().find(|o| o.report.violations == 0) {
        return Err(Failure::Check(format!(
            "--expect-fail: no counterexample to {} in {} trials",
            o.report.property, o.report.trials
        )));
    }
    let counterexamples: Vec<_> = expected
        .iter()
        .map(|o| json!({ "property": o.report.property, "counterexample": o.report.counterexample }))
        .collect();
    if a.out.is_some() {
        print!("{}", pretty(&counterexamples));
    }
    Ok(3)
}

fn expectation_name(e: Expectation) -> &'static str {
    match e {
        Expectation::Holds => "holds",
        Expectation::Fails => "fails",
        Expectation::Undocumented => "undocumented",
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut de = serde_json::Deserializer::from_str(&text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let field = e.path().to_string();
        if field == "." {
            Failure::Usage(format!("{}: {}", path.display(), e.inner()))
        } else {
            Failure::Usage(format!("{}: {field}: {}", path.display(), e.inner()))
        }
    })?;
    cfg.validate().map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    Ok(cfg)
}

fn summary_path(a: &SimulateArgs) -> PathBuf {
    a.summary.clone().unwrap_or_else(|| a.out.with_extension("summary.json"))
}

fn cmd_simulate(a: &SimulateArgs) -> Result<u8, Failure> {
    let mut cfg = load_config(&a.config)?;
    if let Some(seed) = seed_override(a.seed)? {
        cfg.seed = seed;
    }
    let results = run_trials(&cfg, Execution::Parallel).map_err(|e| match e {
        ExperimentError::Config(m) => Failure::Usage(format!("{}: {m}", a.config.display())),
        other => Failure::Io(other.to_string()),
    })?;
    let mut csv = Vec::new();
    write_trials_csv(&results, &mut csv).map_err(io_err(&a.out))?;
    write_file(&a.out, &csv)?;
    let summary = coverage_report(&results, cfg.n, cfg.delta);
    let path = summary_path(a);
    write_file(&path, pretty(&json!({ "config": cfg, "summary": summary })).as_bytes())?;
    println!("{}", path.display());
    Ok(0)
}

#[derive(Debug, Deserialize)]
struct TrialRow {
    trial: usize,
    seed: u64,
    k: Option<u64>,
    risk_hat: Option<f64>,
    phi_hat: Option<f64>,
    eps: Option<f64>,
    eps_low: Option<f64>,
    eps_up: Option<f64>,
    inside: String,
}

impl TrialRow {
    fn into_result(self) -> Option<TrialResult> {
        let stats = match (self.k, self.risk_hat, self.phi_hat, self.eps, self.eps_low, self.eps_up, self.inside.as_str()) {
            (Some(k), Some(risk_hat), Some(phi_hat), Some(eps), Some(eps_low), Some(eps_up), "true" | "false") => Ok(TrialStats {
                k,
                risk_hat,
                phi_hat,
                eps,
                eps_low,
                eps_up,
                inside: self.inside == "true",
            }),
            (None, None, None, None, None, None, "error") => Err("error".to_string()),
            _ => return None,
        };
        Some(TrialResult {
            trial: self.trial,
            seed: self.seed,
            outcome: stats,
        })
    }
}

fn cmd_report(a: &ReportArgs) -> Result<u8, Failure> {
    let cfg = load_config(&a.config)?;
    let text = fs::read(&a.trials).map_err(io_err(&a.trials))?;
    let mut reader = csv::Reader::from_reader(text.as_slice());
    let mut results = Vec::new();
    for (line, row) in reader.deserialize::<TrialRow>().enumerate() {
        let bad = || Failure::Usage(format!("{}: malformed row {}", a.trials.display(), line + 2));
        let row = row.map_err(|_| bad())?;
        results.push(row.into_result().ok_or_else(bad)?);
    }
    let summary = pretty(&coverage_report(&results, cfg.n, cfg.delta));
    match &a.out {
        Some(path) => write_file(path, summary.as_bytes())?,
        None => print!("{summary}"),
    }
    Ok(0)
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    match &cli.command {
        Command::Bounds(a) => cmd_bounds(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Report(a) => cmd_report(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let outcome = with_threads(cli.jobs, || run(&cli));
    let _ = io::stdout().flush();
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
