//! `riskfair` command-line tool.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 invalid input
//! data, 3 runtime failure.

mod render;

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use riskfair::audit::{emit_report, run_audit, AuditConfig, AuditError, CurveKind, MetricKind};
use riskfair::bench::{
    generate_two_group_example, run_bias_study, write_bias_long, write_bias_summary, write_ground_truth,
    BiasStudyConfig, BiasStudyResult, TWO_GROUP_ATTRIBUTE,
};
use riskfair::data::DataError;

#[derive(Debug, Parser)]
#[command(name = "riskfair", version, about = "Group-wise audits of risk score models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Audit a scored test set across protected groups.
    Audit(AuditArgs),
    /// Run the calibration-metric sample-size bias study.
    BenchBias(BenchBiasArgs),
    /// Generate the two-group example and audit it.
    BenchTwogroup(TwoGroupArgs),
    /// Draw curve files as SVG images.
    Render(RenderArgs),
}

#[derive(Debug, Args)]
struct AuditArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input CSV with score, outcome and attribute columns.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Bootstrap replicates per group; 0 reports point estimates only.
    #[arg(long)]
    bootstrap: Option<usize>,
    #[arg(long)]
    ci_level: Option<f64>,
    #[arg(long)]
    min_group_size: Option<usize>,
    #[arg(long)]
    max_combo: Option<usize>,
    /// Comma-separated subset of drmsce, ece-baselines, auroc, auprg, eur.
    #[arg(long, value_delimiter = ',')]
    metrics: Option<Vec<String>>,
    /// Comma-separated subset of reliability, roc, prg, representation, histogram.
    #[arg(long, value_delimiter = ',')]
    curves: Option<Vec<String>>,
    /// Comma-separated sensitive attribute columns.
    #[arg(long, value_delimiter = ',')]
    attributes: Option<Vec<String>>,
    #[arg(long)]
    score_column: Option<String>,
    #[arg(long)]
    outcome_column: Option<String>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct BenchBiasArgs {
    /// TOML study configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long)]
    repetitions: Option<usize>,
}

#[derive(Debug, Args)]
struct TwoGroupArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 20_000)]
    n_per_group: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    bootstrap: Option<usize>,
    /// Only write the dataset.
    #[arg(long)]
    no_audit: bool,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct RenderArgs {
    /// A curve CSV file, or an audit output directory.
    #[arg(long)]
    input: PathBuf,
    /// Output SVG file (single input file only); defaults to the input with
    /// an `.svg` extension.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Runtime(m) => m,
        }
    }
}

impl From<AuditError> for Failure {
    fn from(e: AuditError) -> Self {
        let msg = e.to_string();
        match e {
            AuditError::Config(_) | AuditError::Group(_) => Failure::Usage(msg),
            AuditError::Data(DataError::Io(_)) | AuditError::Io { .. } | AuditError::Runtime(_) => {
                Failure::Runtime(msg)
            }
            AuditError::Data(_) => Failure::Data(msg),
        }
    }
}

fn io_failure(path: &Path) -> impl FnOnce(std::io::Error) -> Failure + '_ {
    move |e| Failure::Runtime(format!("{}: {e}", path.display()))
}

fn parse_list<T>(items: &[String], parse: fn(&str) -> Option<T>, what: &str) -> Result<Vec<T>, Failure> {
    items
        .iter()
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| parse(s).ok_or_else(|| Failure::Usage(format!("unknown {what} '{s}'"))))
        .collect()
}

/// Flags take precedence over the configuration file, which takes
/// precedence over built-in defaults.
fn audit_config(args: &AuditArgs) -> Result<AuditConfig, Failure> {
    let mut c = match &args.config {
        Some(p) => AuditConfig::from_file(p)?,
        None => AuditConfig::default(),
    };
    if let Some(v) = &args.input {
        c.input.path = Some(v.clone());
    }
    if let Some(v) = &args.out {
        c.output_dir = Some(v.clone());
    }
    if let Some(v) = args.seed {
        c.seed = v;
    }
    if let Some(v) = args.bootstrap {
        c.bootstrap.n_replicates = v;
    }
    if let Some(v) = args.ci_level {
        c.bootstrap.ci_level = v;
    }
    if let Some(v) = args.min_group_size {
        c.groups.min_group_size = v;
    }
    if let Some(v) = args.max_combo {
        c.groups.max_combination = v;
    }
    if let Some(v) = &args.metrics {
        c.metrics = parse_list(v, MetricKind::parse, "metric")?;
    }
    if let Some(v) = &args.curves {
        c.curves.kinds = parse_list(v, CurveKind::parse, "curve kind")?;
    }
    if let Some(v) = &args.attributes {
        c.groups.sensitive_attributes = v
            .iter()
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
    }
    if let Some(v) = &args.score_column {
        c.input.score_column = v.clone();
    }
    if let Some(v) = &args.outcome_column {
        c.input.outcome_column = v.clone();
    }
    if let Some(v) = args.workers {
        c.workers = Some(v);
    }
    c.validate()?;
    Ok(c)
}

fn audit_and_emit(config: &AuditConfig) -> Result<(), Failure> {
    let out = config
        .output_dir
        .clone()
        .ok_or_else(|| Failure::Usage("no output directory given (--out or output_dir)".into()))?;
    let report = run_audit(config)?;
    let files = emit_report(&report, &out)?;
    eprintln!(
        "audited {} rows in {} groups; wrote {} files to {}",
        report.n_rows,
        report.n_groups,
        files.len(),
        out.display()
    );
    Ok(())
}

fn cmd_audit(args: &AuditArgs) -> Result<(), Failure> {
    audit_and_emit(&audit_config(args)?)
}

fn cmd_bench_bias(args: &BenchBiasArgs) -> Result<(), Failure> {
    let mut cfg = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
            BiasStudyConfig::from_toml_str(&text).map_err(Failure::Usage)?
        }
        None => BiasStudyConfig::default(),
    };
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = &args.sizes {
        cfg.sample_sizes = v.clone();
    }
    if let Some(v) = args.repetitions {
        cfg.n_repetitions = v;
    }
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let result = run_bias_study(&cfg).map_err(|e| Failure::Runtime(e.to_string()))?;
    fs::create_dir_all(&args.out).map_err(io_failure(&args.out))?;
    type Writer = fn(&BiasStudyResult, BufWriter<fs::File>) -> Result<(), DataError>;
    let writers: [(&str, Writer); 3] = [
        ("bias_study.csv", |r, w| write_bias_long(r, w)),
        ("bias_summary.csv", |r, w| write_bias_summary(r, w)),
        ("ground_truth.csv", |r, w| write_ground_truth(r, w)),
    ];
    for (name, write) in writers {
        let path = args.out.join(name);
        let file = fs::File::create(&path).map_err(io_failure(&path))?;
        write(&result, BufWriter::new(file)).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    }
    eprintln!("wrote {} study cells to {}", result.cells.len(), args.out.display());
    Ok(())
}

fn cmd_two_group(args: &TwoGroupArgs) -> Result<(), Failure> {
    if args.n_per_group < 1 {
        return Err(Failure::Usage("--n-per-group must be at least 1".into()));
    }
    let dataset =
        generate_two_group_example(args.n_per_group, args.seed).map_err(|e| Failure::Runtime(e.to_string()))?;
    fs::create_dir_all(&args.out).map_err(io_failure(&args.out))?;
    let data_path = args.out.join("two_group.csv");
    let file = fs::File::create(&data_path).map_err(io_failure(&data_path))?;
    dataset
        .write_table(BufWriter::new(file), "score", "outcome")
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    if args.no_audit {
        return Ok(());
    }
    let mut cfg = AuditConfig {
        seed: args.seed,
        output_dir: Some(args.out.join("audit")),
        workers: args.workers,
        ..AuditConfig::default()
    };
    cfg.input.path = Some(data_path);
    cfg.groups.sensitive_attributes = vec![TWO_GROUP_ATTRIBUTE.to_string()];
    if let Some(b) = args.bootstrap {
        cfg.bootstrap.n_replicates = b;
    }
    cfg.validate()?;
    audit_and_emit(&cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Audit(a) => cmd_audit(a),
        Command::BenchBias(a) => cmd_bench_bias(a),
        Command::BenchTwogroup(a) => cmd_two_group(a),
        Command::Render(a) => render::run(&a.input, a.out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
