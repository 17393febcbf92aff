//! Benchmark statistics and sweeps: shifted geometric means, per-model
//! win/loss calls, winning-thread histograms, CSV/JSON reports.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mps::read_mps_file;
use crate::race::{run_race, threshold_label, Mode, RaceConfig, RaceStatus};

/// `exp(mean(ln(t + shift))) - shift`.
pub fn shifted_geomean(times: &[f64], shift: f64) -> Result<f64> {
    if times.is_empty() {
        return Err(Error::InvalidConfig("shifted geometric mean of an empty list".into()));
    }
    if !(shift > 0.0) {
        return Err(Error::InvalidConfig("shift must be positive".into()));
    }
    if let Some(t) = times.iter().find(|t| !(**t >= 0.0)) {
        return Err(Error::InvalidConfig(format!("negative or non-finite time {t}")));
    }
    let mean = times.iter().map(|t| (t + shift).ln()).sum::<f64>() / times.len() as f64;
    Ok(mean.exp() - shift)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Win,
    Loss,
    Tie,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Win => "win",
            Verdict::Loss => "loss",
            Verdict::Tie => "tie",
        })
    }
}

/// A win is at least 10% faster than the baseline, a loss at least 10%
/// slower.
pub fn classify_win_loss(baseline: f64, candidate: f64) -> Verdict {
    if candidate <= 0.9 * baseline {
        Verdict::Win
    } else if candidate >= 1.1 * baseline {
        Verdict::Loss
    } else {
        Verdict::Tie
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Solved,
    TimeLimit,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub model: String,
    pub mode: Mode,
    pub wall_seconds: f64,
    pub status: RunStatus,
    pub winner: Option<String>,
    pub pdhg_iterations: usize,
    pub crossover_pivots: usize,
    pub absolute_violation: Option<f64>,
    pub objective: Option<f64>,
    pub message: Option<String>,
}

impl BenchRecord {
    /// Time charged to the run: wall time when solved, the limit otherwise.
    pub fn charged_seconds(&self, time_limit: f64) -> f64 {
        match self.status {
            RunStatus::Solved => self.wall_seconds,
            _ => time_limit,
        }
    }

    pub fn failed(model: &str, mode: Mode, message: String) -> Self {
        Self {
            model: model.into(),
            mode,
            wall_seconds: 0.0,
            status: RunStatus::Failed,
            winner: None,
            pdhg_iterations: 0,
            crossover_pivots: 0,
            absolute_violation: None,
            objective: None,
            message: Some(message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub model: String,
    pub baseline_seconds: f64,
    pub concurrent_seconds: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub shift: f64,
    pub time_limit: f64,
    /// How runs without a verified solution enter the statistics.
    pub unsolved_convention: String,
    pub sgm_baseline: f64,
    pub sgm_concurrent: f64,
    /// Baseline mean over concurrent mean; above 1 favours concurrent.
    pub performance_ratio: f64,
    pub wins: usize,
    pub losses: usize,
    pub ties: usize,
    /// Winning crossover per solved concurrent run, by launch threshold.
    pub histogram: BTreeMap<String, usize>,
    pub comparisons: Vec<ModelComparison>,
    pub records: Vec<BenchRecord>,
}

/// Pairs baseline and concurrent records by model and computes the summary.
/// Models missing either mode are skipped.
pub fn summarize(records: &[BenchRecord], shift: f64, time_limit: f64, thresholds: &[f64]) -> Result<BenchSummary> {
    let mut histogram: BTreeMap<String, usize> = thresholds.iter().map(|&t| (threshold_label(Some(t)), 0)).collect();
    histogram.insert(threshold_label(None), 0);

    let mut models: Vec<&str> = Vec::new();
    for r in records {
        if !models.contains(&r.model.as_str()) {
            models.push(&r.model);
        }
    }
    let find = |model: &str, mode: Mode| records.iter().find(|r| r.model == model && r.mode == mode);

    let mut comparisons = Vec::new();
    let (mut base_t, mut cand_t) = (Vec::new(), Vec::new());
    for model in models {
        let (Some(b), Some(c)) = (find(model, Mode::Baseline), find(model, Mode::Concurrent)) else {
            continue;
        };
        let (tb, tc) = (b.charged_seconds(time_limit), c.charged_seconds(time_limit));
        base_t.push(tb);
        cand_t.push(tc);
        comparisons.push(ModelComparison {
            model: model.into(),
            baseline_seconds: tb,
            concurrent_seconds: tc,
            verdict: classify_win_loss(tb, tc),
        });
        if c.status == RunStatus::Solved {
            if let Some(w) = &c.winner {
                *histogram.entry(w.clone()).or_insert(0) += 1;
            }
        }
    }
    let (sgm_baseline, sgm_concurrent) = if comparisons.is_empty() {
        (0.0, 0.0)
    } else {
        (shifted_geomean(&base_t, shift)?, shifted_geomean(&cand_t, shift)?)
    };
    let performance_ratio = if sgm_concurrent > 0.0 {
        sgm_baseline / sgm_concurrent
    } else if sgm_baseline == sgm_concurrent {
        1.0
    } else {
        f64::INFINITY
    };
    let count = |v: Verdict| comparisons.iter().filter(|c| c.verdict == v).count();
    Ok(BenchSummary {
        shift,
        time_limit,
        unsolved_convention: "time-limit and failed runs are charged the time limit".into(),
        sgm_baseline,
        sgm_concurrent,
        performance_ratio,
        wins: count(Verdict::Win),
        losses: count(Verdict::Loss),
        ties: count(Verdict::Tie),
        histogram,
        comparisons,
        records: records.to_vec(),
    })
}

/// Something that can solve one model in one mode.
pub trait Runner {
    fn run(&mut self, model: &Path, mode: Mode) -> BenchRecord;
}

/// Runs the real race on each model.
pub struct RaceRunner {
    pub config: RaceConfig<f64>,
}

pub fn model_name(path: &Path) -> String {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    name.trim_end_matches(".gz").trim_end_matches(".mps").to_string()
}

impl Runner for RaceRunner {
    fn run(&mut self, model: &Path, mode: Mode) -> BenchRecord {
        let name = model_name(model);
        let lp = match read_mps_file::<f64>(model) {
            Ok(lp) => lp,
            Err(e) => return BenchRecord::failed(&name, mode, e.to_string()),
        };
        let cfg = RaceConfig {
            mode,
            ..self.config.clone()
        };
        match run_race(&lp, &cfg) {
            Ok(out) => BenchRecord {
                model: name,
                mode,
                wall_seconds: out.wall_seconds,
                status: match out.status {
                    RaceStatus::Solved => RunStatus::Solved,
                    RaceStatus::TimeLimit => RunStatus::TimeLimit,
                    RaceStatus::Failed => RunStatus::Failed,
                },
                winner: out.winner.clone(),
                pdhg_iterations: out.pdhg_iterations,
                crossover_pivots: out.crossover_pivots(),
                absolute_violation: out.solution.as_ref().map(|s| s.absolute_violation),
                objective: out.solution.as_ref().map(|s| s.objective),
                message: out.failure.clone(),
            },
            Err(e) => BenchRecord::failed(&name, mode, e.to_string()),
        }
    }
}

/// `.mps` and `.mps.gz` files directly inside `dir`, sorted by name.
pub fn list_models(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let n = p.to_string_lossy();
            p.is_file() && (n.ends_with(".mps") || n.ends_with(".mps.gz"))
        })
        .collect();
    out.sort();
    Ok(out)
}

/// Runs every model in `dir` in both modes, sequentially.
pub fn run_benchmark(
    dir: &Path,
    runner: &mut dyn Runner,
    shift: f64,
    time_limit: f64,
    thresholds: &[f64],
) -> Result<BenchSummary> {
    let models = list_models(dir)?;
    let mut records = Vec::with_capacity(2 * models.len());
    for path in &models {
        for mode in [Mode::Baseline, Mode::Concurrent] {
            records.push(runner.run(path, mode));
        }
    }
    summarize(&records, shift, time_limit, thresholds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            _ => Err(Error::UnknownFormat(s.into())),
        }
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// JSON carries the whole summary; CSV has one row per compared model.
pub fn emit_report(summary: &BenchSummary, format: &str) -> Result<Vec<u8>> {
    match format.parse::<ReportFormat>()? {
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(summary)?;
            out.push(b'\n');
            Ok(out)
        }
        ReportFormat::Csv => {
            let mut out =
                String::from("model,baseline_seconds,baseline_status,concurrent_seconds,concurrent_status,winner,verdict\n");
            for c in &summary.comparisons {
                let rec = |mode| summary.records.iter().find(|r| r.model == c.model && r.mode == mode);
                let status = |r: Option<&BenchRecord>| match r.map(|r| r.status) {
                    Some(RunStatus::Solved) => "solved",
                    Some(RunStatus::TimeLimit) => "time-limit",
                    Some(RunStatus::Failed) | None => "failed",
                };
                let b = rec(Mode::Baseline);
                let k = rec(Mode::Concurrent);
                let winner = k.and_then(|r| r.winner.clone()).unwrap_or_default();
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    csv_field(&c.model),
                    c.baseline_seconds,
                    status(b),
                    c.concurrent_seconds,
                    status(k),
                    csv_field(&winner),
                    c.verdict
                ));
            }
            Ok(out.into_bytes())
        }
    }
}
