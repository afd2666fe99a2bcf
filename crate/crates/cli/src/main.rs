use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mixlin::harness::output::{emit_coverage, emit_outputs, emit_sweep, emit_verify, plot_from_csv};
use mixlin::harness::{run_coverage, run_replications, run_sweep, run_verify, ExperimentConfig};
use mixlin::policy::{write_decisions_csv, DecisionRow};
use mixlin::{Error, Result};

#[derive(Parser)]
#[command(name = "mixlin", version, about = "Linear bandits under mixing noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Key/value config file; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Overrides `reps`.
    #[arg(long, global = true)]
    reps: Option<usize>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run replications; writes rounds.csv, summary.json, decisions.csv and plots.
    Run,
    /// Uniform-in-time coverage frequency; writes coverage.json and coverage.svg.
    Coverage,
    /// Regret against horizon over `sweep.T`; writes sweep.csv, sweep.json and sweep.svg.
    Sweep,
    /// Deterministic inequality checks; exits 1 on any violation.
    Verify,
    /// Rebuilds plots from `<out>/rounds.csv`.
    Plot,
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path).map_err(input_error)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(reps) = cli.reps {
        cfg.replications = reps;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Unreadable inputs are configuration errors, not violations.
fn input_error(e: Error) -> Error {
    match e {
        Error::Io { .. } => Error::Config(e.to_string()),
        other => other,
    }
}

fn workers(cli: &Cli) -> usize {
    cli.workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1)
}

fn write_decisions(path: &Path, rows: &[DecisionRow]) -> Result<()> {
    let mut buf = Vec::new();
    write_decisions_csv(&mut buf, rows).map_err(|e| Error::io(path, e))?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

fn execute(cli: &Cli) -> Result<()> {
    let cfg = load(cli)?;
    let workers = workers(cli);
    let out = cli.out.as_path();
    match cli.command {
        Command::Run => {
            let results = run_replications(&cfg, workers)?;
            let files = emit_outputs(&cfg, &results, out)?;
            let first = &results[0];
            let rows: Vec<DecisionRow> = first
                .rounds
                .iter()
                .enumerate()
                .map(|(i, r)| DecisionRow {
                    t: i + 1,
                    chosen: r.chosen,
                    ucb: r.ucb,
                    regret: first.trace.instantaneous[i],
                    cumulative: first.trace.cumulative[i],
                })
                .collect();
            write_decisions(&out.join("decisions.csv"), &rows)?;
            let mean = results.iter().map(|r| r.total_regret()).sum::<f64>() / results.len() as f64;
            let covered = results.iter().filter(|r| r.all_covered()).count();
            println!(
                "{} replications, d = {}, mean Reg(T) = {mean:.3}, covered {covered}/{}",
                results.len(),
                first.delay,
                results.len()
            );
            println!("wrote {}", files.summary_json.display());
        }
        Command::Coverage => {
            let report = run_coverage(&cfg, workers)?;
            emit_coverage(&report, cfg.delta, out)?;
            println!(
                "d = {}, coverage {}/{} = {:.4} (95% CI [{:.4}, {:.4}]), target {:.2}",
                report.delay,
                report.covered,
                report.replications,
                report.frequency,
                report.ci_low,
                report.ci_high,
                1.0 - cfg.delta
            );
            println!(
                "Reg(T) within worst-case bound: {}/{}",
                report.within_worst_case, report.replications
            );
        }
        Command::Sweep => {
            let report = run_sweep(&cfg, workers)?;
            emit_sweep(&report, out)?;
            for table in &report.tables {
                let slope = table.slope.map_or("n/a".to_string(), |s| format!("{s:.3}"));
                println!("{}: log-log slope {slope}", table.policy.as_str());
            }
        }
        Command::Verify => {
            let report = run_verify(&cfg, workers)?;
            emit_verify(&report, out)?;
            println!(
                "{} traces checked, {} violations",
                report.traces.len(),
                report.violations.len()
            );
            report.into_result()?;
        }
        Command::Plot => {
            let delta = cli.config.as_ref().map(|_| cfg.delta);
            let csv = out.join("rounds.csv");
            if !csv.is_file() {
                return Err(Error::Config(format!("{}: not found", csv.display())));
            }
            plot_from_csv(&csv, out, delta)?;
            println!("plots written to {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 1 })
        }
    }
}
