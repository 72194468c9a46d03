//! `noniid`: ingest rating datasets, run grid-searched model comparisons and
//! render their reports.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context as _, Result};
use clap::{Args, Parser, Subcommand};

use config::{load_dataset, ConfigError, DatasetConfig, DiscretizeConfig, ExperimentConfig, Format, ItemAttributes};
use noniid_core::eval::{render_delimited, render_table, run_experiment_with_artifacts, EvalReport, ModelRow};
use noniid_core::store::{validate_dataset, write_canonical};

/// Overrides the configured output directory of `run`.
const OUT_DIR_ENV: &str = "NONIID_OUT_DIR";

const EXIT_IO: u8 = 2;
const EXIT_VALIDATION: u8 = 3;
const EXIT_CONFIG: u8 = 4;
const EXIT_PARTIAL: u8 = 5;

#[derive(Parser)]
#[command(name = "noniid", version, about = "Coupled recommender experiments")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a dataset to the canonical directory layout.
    Ingest(IngestArgs),
    /// Run the experiment described by a config file.
    Run(RunArgs),
    /// Render metrics files as one comparison table.
    Report(ReportArgs),
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long, value_enum)]
    format: Format,
    /// Input directory.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output directory for the canonical dataset.
    #[arg(long)]
    out: PathBuf,
    /// Fail on ratings whose user or item has no attribute row.
    #[arg(long)]
    strict: bool,
    #[arg(long, value_enum, default_value = "derived")]
    item_attributes: ItemAttributes,
    /// csv: header schema of users.csv, e.g. `age:numeric,gender:categorical`.
    #[arg(long)]
    user_schema: Option<String>,
    /// csv: header schema of items.csv.
    #[arg(long)]
    item_schema: Option<String>,
    /// csv: rating scale bounds.
    #[arg(long, num_args = 2, value_names = ["MIN", "MAX"], default_values_t = [1.0, 5.0])]
    scale: Vec<f64>,
    /// Bin a numeric attribute, e.g. `user:age=cuts:18,25,35,45,56`.
    #[arg(long, value_name = "SIDE:ATTR=STRATEGY")]
    discretize: Vec<DiscretizeConfig>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Repeat the run for each split seed, one subdirectory per seed.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    /// Model the improvement columns compare against.
    #[arg(long)]
    reference: Option<String>,
}

#[derive(Args)]
struct ReportArgs {
    /// metrics.json files.
    #[arg(required = true)]
    files: Vec<PathBuf>,
    #[arg(long)]
    reference: Option<String>,
    /// Emit delimiter-separated values instead of an aligned table.
    #[arg(long)]
    delimiter: Option<char>,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use noniid_core::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Io { .. } => EXIT_IO,
                E::Config(_) => EXIT_CONFIG,
                _ => EXIT_VALIDATION,
            };
        }
        if cause.is::<ConfigError>() || cause.is::<toml::de::Error>() {
            return EXIT_CONFIG;
        }
        if cause.is::<std::io::Error>() {
            return EXIT_IO;
        }
    }
    1
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn ingest(args: IngestArgs) -> Result<ExitCode> {
    let dataset = DatasetConfig {
        format: args.format,
        path: args.input,
        strict: args.strict,
        item_attributes: args.item_attributes,
        user_schema: args.user_schema,
        item_schema: args.item_schema,
        scale: [args.scale[0], args.scale[1]],
    };
    let ds = load_dataset(&dataset, &args.discretize)?;
    let report = validate_dataset(&ds);
    write_canonical(&ds, &args.out)?;
    write(&args.out.join("validation.txt"), &report.to_string())?;
    println!(
        "{} ratings, {} users, {} items -> {}",
        ds.ratings.len(),
        ds.users.len(),
        ds.items.len(),
        args.out.display()
    );
    if !report.is_clean() {
        eprintln!("{report}");
    }
    Ok(ExitCode::SUCCESS)
}

fn default_reference(report: &EvalReport, explicit: Option<&str>) -> Option<String> {
    explicit
        .map(str::to_owned)
        .or_else(|| report.row("cmf").map(|r| r.model.clone()))
}

/// One experiment into `out`; returns whether any model failed.
fn run_once(cfg: &ExperimentConfig, out: &Path, reference: Option<&str>) -> Result<bool> {
    let ds = load_dataset(&cfg.dataset, &cfg.discretize)?;
    let artifacts = out.join("artifacts");
    fs::create_dir_all(&artifacts).with_context(|| format!("creating {}", artifacts.display()))?;
    write(&out.join("config.toml"), &cfg.to_toml())?;
    write(&out.join("validation.txt"), &validate_dataset(&ds).to_string())?;
    let report = run_experiment_with_artifacts(&ds, &cfg.model_list(), &cfg.split, Some(&artifacts))?;
    write(&out.join("metrics.json"), &report.to_json())?;
    let timings = serde_json::to_string_pretty(&report.timings)? + "\n";
    write(&out.join("timings.json"), &timings)?;
    let rows: Vec<&ModelRow> = report.rows.iter().collect();
    let table = render_table(&rows, default_reference(&report, reference).as_deref());
    write(&out.join("report.txt"), &table)?;
    print!("{table}");
    for row in report.rows.iter().filter(|r| r.failed()) {
        eprintln!("model {} failed: {}", row.model, row.error.as_deref().unwrap_or(""));
    }
    Ok(report.any_failed())
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(dir) = std::env::var_os(OUT_DIR_ENV) {
        cfg.output.dir = PathBuf::from(dir);
    }
    let out = cfg.output.dir.clone();
    let reference = args.reference.as_deref();
    let mut failed = false;
    if args.seeds.is_empty() {
        failed |= run_once(&cfg, &out, reference)?;
    } else {
        for seed in &args.seeds {
            cfg.split.seed = *seed;
            let dir = out.join(format!("seed-{seed}"));
            println!("# split seed {seed}");
            failed |= run_once(&cfg, &dir, reference)?;
        }
    }
    Ok(if failed {
        ExitCode::from(EXIT_PARTIAL)
    } else {
        ExitCode::SUCCESS
    })
}

fn report(args: ReportArgs) -> Result<ExitCode> {
    let mut rows: Vec<ModelRow> = Vec::new();
    for path in &args.files {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let report = EvalReport::from_json(&text).with_context(|| format!("in {}", path.display()))?;
        for mut row in report.rows {
            if rows.iter().any(|r| r.model == row.model) {
                let stem = path.parent().and_then(Path::file_name).unwrap_or_default();
                row.model = format!("{}@{}", row.model, stem.to_string_lossy());
            }
            rows.push(row);
        }
    }
    let refs: Vec<&ModelRow> = rows.iter().collect();
    let reference = args
        .reference
        .or_else(|| rows.iter().find(|r| r.model == "cmf").map(|r| r.model.clone()));
    match args.delimiter {
        Some(d) => print!("{}", render_delimited(&refs, reference.as_deref(), d)),
        None => print!("{}", render_table(&refs, reference.as_deref())),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Ingest(args) => ingest(args),
        Command::Run(args) => run(args),
        Command::Report(args) => report(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
