use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};

use lumiere_core::config::{load_scenario, ScenarioConfig};
use lumiere_core::error::{ConfigError, SimError};
use lumiere_core::experiment::{
    check_seeds, compare_jobs, load_experiment, parse_seed_range, run_jobs, write_csv, ExperimentSpec, Job,
};
use lumiere_core::metrics::{check_lemma_suite, MetricsRow};
use lumiere_core::sim::run;

/// Exit status for malformed input.
const EXIT_CONFIG: u8 = 2;
/// Exit status for a lemma failure or a violated delivery contract.
const EXIT_FAILED: u8 = 1;

#[derive(Parser)]
#[command(name = "lumiere", version, about = "Simulate and check Byzantine view synchronizers")]
struct Cli {
    /// Omit the `# generated_at_unix=...` line from CSV outputs.
    #[arg(long, global = true)]
    no_timestamp: bool,
    /// Run length after GST in units of n·Γ; overrides scenario horizons.
    #[arg(long, global = true, value_name = "M")]
    horizon_multiplier: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// One run: writes trace.jsonl and metrics.csv.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, env = "LUMIERE_OUT_DIR", default_value = "out")]
        out: PathBuf,
    },
    /// All runs of an experiment spec into one CSV.
    Sweep {
        #[arg(long)]
        experiment: PathBuf,
        /// Defaults to $LUMIERE_OUT_DIR, then the spec's `out`, then `out`.
        #[arg(long, env = "LUMIERE_OUT_DIR")]
        out: Option<PathBuf>,
    },
    /// Lemma suite only, over a half-open seed range `a..b`.
    Check {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_parser = parse_seed_range)]
        seeds: std::ops::Range<u64>,
    },
    /// Every experiment run under Lumiere, LP22 and Basic Lumiere, as CSV on stdout.
    Compare {
        #[arg(long)]
        experiment: PathBuf,
    },
}

enum Failure {
    Config(String),
    Failed(String),
}

impl Failure {
    fn config(path: &Path, e: ConfigError) -> Self {
        let loc = match e.line {
            Some(l) => format!("{}:{l}", path.display()),
            None => path.display().to_string(),
        };
        let ptr = if e.pointer.is_empty() { "/" } else { &e.pointer };
        Failure::Config(format!("{loc}: {ptr}: {}", e.message))
    }

    fn sim(path: &Path, e: SimError) -> Self {
        match e {
            SimError::Config(c) => Failure::config(path, c),
            other => Failure::Failed(other.to_string()),
        }
    }

    fn io(what: &Path, e: io::Error) -> Self {
        Failure::Config(format!("{}: {e}", what.display()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Failed(msg)) => {
            eprintln!("failed: {msg}");
            ExitCode::from(EXIT_FAILED)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    match &cli.cmd {
        Cmd::Run { scenario, seed, out } => cmd_run(cli, scenario, *seed, out),
        Cmd::Sweep { experiment, out } => cmd_sweep(cli, experiment, out.as_deref()),
        Cmd::Check { scenario, seeds } => cmd_check(cli, scenario, seeds.clone()),
        Cmd::Compare { experiment } => cmd_compare(cli, experiment),
    }
}

fn scenario_name(path: &Path) -> String {
    path.file_stem().map_or_else(|| "scenario".into(), |s| s.to_string_lossy().into_owned())
}

fn load(cli: &Cli, path: &Path) -> Result<ScenarioConfig, Failure> {
    let mut cfg = load_scenario(path).map_err(|e| Failure::config(path, e))?;
    if let Some(m) = cli.horizon_multiplier {
        cfg.horizon = Some(cfg.horizon_for(m));
    }
    Ok(cfg)
}

fn load_spec(cli: &Cli, path: &Path) -> Result<(ExperimentSpec, Vec<Job>), Failure> {
    let mut spec = load_experiment(path).map_err(|e| Failure::config(path, e))?;
    if cli.horizon_multiplier.is_some() {
        spec.horizon_multiplier = cli.horizon_multiplier;
    }
    let jobs = spec.jobs().map_err(|e| Failure::config(path, e))?;
    Ok((spec, jobs))
}

fn preamble(cli: &Cli) -> Option<String> {
    if cli.no_timestamp {
        return None;
    }
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    Some(format!("generated_at_unix={secs}"))
}

fn emit_csv(cli: &Cli, rows: &[MetricsRow], path: &Path) -> Result<(), Failure> {
    let file = File::create(path).map_err(|e| Failure::io(path, e))?;
    write_csv(rows, BufWriter::new(file), preamble(cli).as_deref())
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn failed_rows(rows: &[MetricsRow]) -> Result<(), Failure> {
    let bad: Vec<String> = rows
        .iter()
        .filter(|r| r.verdict != "pass")
        .map(|r| format!("{} seed {} ({})", r.scenario, r.seed, r.synchronizer))
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Failure::Failed(format!("lemma suite failed for {}", bad.join(", "))))
    }
}

fn cmd_run(cli: &Cli, scenario: &Path, seed: u64, out: &Path) -> Result<(), Failure> {
    let mut cfg = load(cli, scenario)?;
    cfg.seed = seed;
    fs::create_dir_all(out).map_err(|e| Failure::io(out, e))?;
    let res = run(&cfg).map_err(|e| Failure::sim(scenario, e))?;
    let trace_path = out.join("trace.jsonl");
    let file = File::create(&trace_path).map_err(|e| Failure::io(&trace_path, e))?;
    res.trace
        .write_jsonl(BufWriter::new(file))
        .map_err(|e| Failure::io(&trace_path, e))?;
    let row = MetricsRow::from_run(&scenario_name(scenario), &res);
    emit_csv(cli, std::slice::from_ref(&row), &out.join("metrics.csv"))?;
    println!(
        "{} seed {}: {} honest QCs, {} honest sends, verdict {}, trace {}",
        row.scenario, row.seed, row.qcs, row.honest_sends, row.verdict, row.trace_hash
    );
    let report = check_lemma_suite(&res);
    match report.violations.first() {
        None => Ok(()),
        Some(v) => Err(Failure::Failed(format!("seed {seed}: {v}"))),
    }
}

fn cmd_sweep(cli: &Cli, experiment: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let (spec, jobs) = load_spec(cli, experiment)?;
    let out = out.map_or_else(|| PathBuf::from(spec.out.as_deref().unwrap_or("out")), Path::to_path_buf);
    let out = out.as_path();
    fs::create_dir_all(out).map_err(|e| Failure::io(out, e))?;
    let rows = run_jobs(&jobs).map_err(|e| Failure::sim(experiment, e))?;
    let path = out.join(format!("{}.csv", spec.name));
    emit_csv(cli, &rows, &path)?;
    println!("{} runs -> {}", rows.len(), path.display());
    failed_rows(&rows)
}

fn cmd_check(cli: &Cli, scenario: &Path, seeds: std::ops::Range<u64>) -> Result<(), Failure> {
    let cfg = load(cli, scenario)?;
    let reports = check_seeds(&cfg, seeds.clone()).map_err(|e| Failure::sim(scenario, e))?;
    let mut first = None;
    for (seed, rep) in &reports {
        if let Some(v) = rep.violations.first() {
            println!("seed {seed}: FAIL {} violation(s), first: {v}", rep.violations.len());
            first.get_or_insert(format!("seed {seed}: {v}"));
        }
    }
    let bad = reports.iter().filter(|r| !r.1.passed()).count();
    println!("{} seeds checked ({}..{}), {bad} failing", reports.len(), seeds.start, seeds.end);
    match first {
        None => Ok(()),
        Some(msg) => Err(Failure::Failed(msg)),
    }
}

fn cmd_compare(cli: &Cli, experiment: &Path) -> Result<(), Failure> {
    let (_, jobs) = load_spec(cli, experiment)?;
    let rows = run_jobs(&compare_jobs(&jobs)).map_err(|e| Failure::sim(experiment, e))?;
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    write_csv(&rows, &mut lock, preamble(cli).as_deref()).map_err(|e| Failure::Config(e.to_string()))?;
    lock.flush().map_err(|e| Failure::Config(e.to_string()))?;
    failed_rows(&rows)
}
