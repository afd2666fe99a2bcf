//! CSV, JSON and SVG artefacts.
//!
//! Files written by [`emit_outputs`]:
//!
//! | file           | contents                                                      |
//! |----------------|---------------------------------------------------------------|
//! | `rounds.csv`   | `rep,t,R_t,Reg,beta_sq,coverage,potential_term`, `T` rows per replication |
//! | `summary.json` | [`Summary`]                                                   |
//! | `regret.svg`   | mean `Reg(t)` with the 10–90% band across replications        |
//! | `coverage.svg` | uniform-coverage frequency against `1 − δ`                    |

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::svg::{bar_plot, line_plot, Series};
use super::{
    potential_bound, quantile, wilson_interval, CoverageReport, ExperimentConfig, ReplicationResult, SweepReport,
    VerifyReport,
};
use crate::error::{Error, Result};

/// Points per curve in the regret plot.
const PLOT_POINTS: usize = 400;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretStats {
    pub mean: f64,
    pub median: f64,
    pub q10: f64,
    pub q90: f64,
    pub min: f64,
    pub max: f64,
}

impl RegretStats {
    pub fn from_values(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Self {
            mean: v.iter().sum::<f64>() / v.len().max(1) as f64,
            median: quantile(&v, 0.5),
            q10: quantile(&v, 0.1),
            q90: quantile(&v, 0.9),
            min: v.first().copied().unwrap_or(0.0),
            max: v.last().copied().unwrap_or(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flags {
    /// Uniform coverage frequency `≥ 1 − δ`.
    pub coverage_at_least_1_minus_delta: bool,
    /// `Reg(T) ≤` worst-case bound on a fraction `≥ 1 − δ` of replications.
    pub worst_case_bound_holds: bool,
    /// Elliptical potential sum within its bound on every replication.
    pub potential_bound_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config: ExperimentConfig,
    pub replications: usize,
    pub horizon: usize,
    pub delay: usize,
    pub regret: RegretStats,
    pub covered: usize,
    pub coverage_frequency: f64,
    pub coverage_ci: (f64, f64),
    pub worst_case_bound: Option<f64>,
    pub within_worst_case: usize,
    pub gap_bounds: Option<RegretStats>,
    pub potential_bound: f64,
    pub max_potential_sum: f64,
    pub flags: Flags,
}

pub fn summarize(config: &ExperimentConfig, results: &[ReplicationResult]) -> Result<Summary> {
    let first = results
        .first()
        .ok_or_else(|| Error::InvalidParameter("no replication results".into()))?;
    let n = results.len();
    let regrets: Vec<f64> = results.iter().map(ReplicationResult::total_regret).collect();
    let covered = results.iter().filter(|r| r.all_covered()).count();
    let within = results
        .iter()
        .filter(|r| r.worst_case_bound.is_some_and(|b| r.total_regret() <= b))
        .count();
    let gaps: Option<Vec<f64>> = results.iter().map(|r| r.gap_bound).collect();
    let pot_bound = potential_bound(first.delay, config.dim, config.horizon, config.lambda());
    let max_pot = results
        .iter()
        .map(|r| r.potential.iter().sum::<f64>())
        .fold(0.0, f64::max);
    let frequency = covered as f64 / n as f64;
    Ok(Summary {
        config: config.clone(),
        replications: n,
        horizon: config.horizon,
        delay: first.delay,
        regret: RegretStats::from_values(&regrets),
        covered,
        coverage_frequency: frequency,
        coverage_ci: wilson_interval(covered, n),
        worst_case_bound: first.worst_case_bound,
        within_worst_case: within,
        gap_bounds: gaps.map(|g| RegretStats::from_values(&g)),
        potential_bound: pot_bound,
        max_potential_sum: max_pot,
        flags: Flags {
            coverage_at_least_1_minus_delta: frequency >= 1.0 - config.delta,
            worst_case_bound_holds: within as f64 >= (1.0 - config.delta) * n as f64,
            potential_bound_holds: max_pot <= pot_bound,
        },
    })
}

pub fn write_rounds_csv<W: Write>(mut out: W, results: &[ReplicationResult]) -> std::io::Result<()> {
    writeln!(out, "rep,t,R_t,Reg,beta_sq,coverage,potential_term")?;
    for r in results {
        for i in 0..r.rounds.len() {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.replication,
                i + 1,
                r.trace.instantaneous[i],
                r.trace.cumulative[i],
                r.beta_sq[i],
                u8::from(r.covered[i]),
                r.potential[i]
            )?;
        }
    }
    Ok(())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Mean and 10–90% band of `Reg(t)` across replications, thinned to
/// about [`PLOT_POINTS`] rounds. `curves[rep][t − 1] = Reg(t)`.
pub fn regret_series(curves: &[Vec<f64>]) -> Series {
    let horizon = curves.iter().map(Vec::len).min().unwrap_or(0);
    let step = horizon.div_ceil(PLOT_POINTS).max(1);
    let mut series = Series {
        label: format!("mean Reg(t), 10-90% band, {} replications", curves.len()),
        ..Series::default()
    };
    let mut ts: Vec<usize> = (step..=horizon).step_by(step).collect();
    if ts.last() != Some(&horizon) && horizon > 0 {
        ts.push(horizon);
    }
    for t in ts {
        let mut col: Vec<f64> = curves.iter().map(|c| c[t - 1]).collect();
        col.sort_by(f64::total_cmp);
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        series.points.push((t as f64, mean));
        series.band.push((t as f64, quantile(&col, 0.1), quantile(&col, 0.9)));
    }
    series
}

pub fn regret_svg(curves: &[Vec<f64>]) -> String {
    line_plot(
        "Cumulative regret",
        "round t",
        "Reg(t)",
        &[regret_series(curves)],
        false,
    )
}

pub fn coverage_svg(frequency: f64, delta: f64) -> String {
    bar_plot(
        "Uniform coverage of the confidence sequence",
        "frequency",
        &[("theta* in C_t for all t".into(), frequency)],
        Some(1.0 - delta),
    )
}

/// Paths written by [`emit_outputs`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFiles {
    pub rounds_csv: PathBuf,
    pub summary_json: PathBuf,
    pub regret_svg: PathBuf,
    pub coverage_svg: PathBuf,
}

/// Writes the per-round CSV, the JSON summary and both plots into `dir`.
/// Nothing is written when `results` is empty.
pub fn emit_outputs(config: &ExperimentConfig, results: &[ReplicationResult], dir: &Path) -> Result<OutputFiles> {
    let summary = summarize(config, results)?;
    ensure_dir(dir)?;
    let files = OutputFiles {
        rounds_csv: dir.join("rounds.csv"),
        summary_json: dir.join("summary.json"),
        regret_svg: dir.join("regret.svg"),
        coverage_svg: dir.join("coverage.svg"),
    };
    let mut csv = Vec::new();
    write_rounds_csv(&mut csv, results).map_err(|e| Error::io(&files.rounds_csv, e))?;
    write_file(&files.rounds_csv, &csv)?;
    write_json(&files.summary_json, &summary)?;
    let curves: Vec<Vec<f64>> = results.iter().map(|r| r.trace.cumulative.clone()).collect();
    write_file(&files.regret_svg, regret_svg(&curves).as_bytes())?;
    write_file(
        &files.coverage_svg,
        coverage_svg(summary.coverage_frequency, config.delta).as_bytes(),
    )?;
    Ok(files)
}

pub fn emit_coverage(report: &CoverageReport, delta: f64, dir: &Path) -> Result<()> {
    ensure_dir(dir)?;
    write_json(&dir.join("coverage.json"), report)?;
    write_file(
        &dir.join("coverage.svg"),
        coverage_svg(report.frequency, delta).as_bytes(),
    )
}

pub fn emit_sweep(report: &SweepReport, dir: &Path) -> Result<()> {
    ensure_dir(dir)?;
    let mut csv = String::from("policy,T,delay,mean,median,q10,q90\n");
    let mut series = Vec::new();
    for table in &report.tables {
        let name = table.policy.as_str();
        for r in &table.rows {
            csv.push_str(&format!(
                "{name},{},{},{},{},{},{}\n",
                r.horizon, r.delay, r.mean, r.median, r.q10, r.q90
            ));
        }
        let slope = table.slope.map(|s| format!(" (slope {s:.3})")).unwrap_or_default();
        series.push(Series {
            label: format!("{name}{slope}"),
            points: table.rows.iter().map(|r| (r.horizon as f64, r.mean)).collect(),
            band: table.rows.iter().map(|r| (r.horizon as f64, r.q10, r.q90)).collect(),
        });
    }
    write_file(&dir.join("sweep.csv"), csv.as_bytes())?;
    write_json(&dir.join("sweep.json"), report)?;
    let svg = line_plot("Regret against horizon", "T", "mean Reg(T)", &series, true);
    write_file(&dir.join("sweep.svg"), svg.as_bytes())
}

pub fn emit_verify(report: &VerifyReport, dir: &Path) -> Result<()> {
    ensure_dir(dir)?;
    write_json(&dir.join("verify.json"), report)
}

/// Rebuilds `regret.svg` (and `coverage.svg` when `delta` is given) from a
/// `rounds.csv` written by [`emit_outputs`].
pub fn plot_from_csv(csv_path: &Path, dir: &Path, delta: Option<f64>) -> Result<()> {
    let text = std::fs::read_to_string(csv_path).map_err(|e| Error::io(csv_path, e))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header != "rep,t,R_t,Reg,beta_sq,coverage,potential_term" {
        return Err(Error::Config(format!("{}: not a rounds CSV", csv_path.display())));
    }
    let mut curves: Vec<Vec<f64>> = Vec::new();
    let mut covered: Vec<bool> = Vec::new();
    let mut last_rep = None;
    for (n, line) in lines.enumerate() {
        let bad = || Error::Config(format!("{}: malformed row {}", csv_path.display(), n + 2));
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(bad());
        }
        let rep: u64 = f[0].parse().map_err(|_| bad())?;
        let reg: f64 = f[3].parse().map_err(|_| bad())?;
        let cov = f[5] == "1";
        if last_rep != Some(rep) {
            curves.push(Vec::new());
            covered.push(true);
            last_rep = Some(rep);
        }
        curves.last_mut().expect("pushed above").push(reg);
        *covered.last_mut().expect("pushed above") &= cov;
    }
    if curves.is_empty() {
        return Err(Error::Config(format!("{}: no rows", csv_path.display())));
    }
    ensure_dir(dir)?;
    write_file(&dir.join("regret.svg"), regret_svg(&curves).as_bytes())?;
    if let Some(delta) = delta {
        let freq = covered.iter().filter(|&&c| c).count() as f64 / covered.len() as f64;
        write_file(&dir.join("coverage.svg"), coverage_svg(freq, delta).as_bytes())?;
    }
    Ok(())
}
