use std::path::Path;

use ccpdhg::bench::{run_benchmark, shifted_geomean, summarize, BenchRecord, RaceRunner, RunStatus, Runner, Verdict};
use ccpdhg::race::{Mode, RaceConfig};
use proptest::prelude::*;

fn record(model: &str, mode: Mode, t: f64, status: RunStatus, winner: Option<&str>) -> BenchRecord {
    BenchRecord {
        model: model.into(),
        mode,
        wall_seconds: t,
        status,
        winner: winner.map(Into::into),
        pdhg_iterations: 0,
        crossover_pivots: 0,
        absolute_violation: None,
        objective: None,
        message: None,
    }
}

proptest! {
    #[test]
    fn geomean_is_symmetric_and_monotone(
        mut times in prop::collection::vec(0.0..1000.0f64, 1..20),
        shift in 0.1..10.0f64,
        k in 0usize..20,
        bump in 0.0..50.0f64,
    ) {
        let g = shifted_geomean(&times, shift).unwrap();
        let mut rev = times.clone();
        rev.reverse();
        let r = shifted_geomean(&rev, shift).unwrap();
        prop_assert!((g - r).abs() <= 1e-9 * (1.0 + g));
        let lo = times.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = times.iter().cloned().fold(0.0, f64::max);
        prop_assert!(g >= lo - 1e-9 && g <= hi + 1e-9);
        let k = k % times.len();
        times[k] += bump;
        prop_assert!(shifted_geomean(&times, shift).unwrap() >= g - 1e-9);
    }

    #[test]
    fn histogram_counts_solved_concurrent_runs(
        runs in prop::collection::vec((0.0..100.0f64, 0.0..100.0f64, 0usize..3, 0usize..3), 1..15),
    ) {
        let labels = ["1e-2", "1e-3", "main"];
        let mut records = Vec::new();
        for (i, &(tb, tc, w, s)) in runs.iter().enumerate() {
            let name = format!("m{i}");
            records.push(record(&name, Mode::Baseline, tb, RunStatus::Solved, Some("main")));
            let status = [RunStatus::Solved, RunStatus::TimeLimit, RunStatus::Failed][s];
            let winner = (status == RunStatus::Solved).then_some(labels[w]);
            records.push(record(&name, Mode::Concurrent, tc, status, winner));
        }
        let s = summarize(&records, 1.0, 100.0, &[1e-2, 1e-3]).unwrap();
        let solved = runs.iter().filter(|r| r.3 == 0).count();
        prop_assert_eq!(s.histogram.values().sum::<usize>(), solved);
        prop_assert_eq!(s.wins + s.losses + s.ties, runs.len());
        prop_assert!((s.performance_ratio - s.sgm_baseline / s.sgm_concurrent).abs() <= 1e-12 * s.performance_ratio.max(1.0)
            || s.sgm_concurrent == 0.0);
    }
}

/// Replays fixed times per mode.
struct Scripted {
    baseline: f64,
    concurrent: Option<f64>,
}

impl Runner for Scripted {
    fn run(&mut self, model: &Path, mode: Mode) -> BenchRecord {
        let name = ccpdhg::bench::model_name(model);
        match (mode, self.concurrent) {
            (Mode::Baseline, _) => record(&name, mode, self.baseline, RunStatus::Solved, Some("main")),
            (Mode::Concurrent, Some(t)) => record(&name, mode, t, RunStatus::Solved, Some("1e-2")),
            (Mode::Concurrent, None) => record(&name, mode, 0.0, RunStatus::TimeLimit, None),
        }
    }
}

fn model_dir(n: usize) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/lp");
    for name in ["afiro", "blending", "sctest"].iter().take(n) {
        std::fs::copy(src.join(format!("{name}.mps")), dir.path().join(format!("{name}.mps"))).unwrap();
    }
    dir
}

#[test]
fn identical_times_are_all_ties() {
    let dir = model_dir(3);
    let mut runner = Scripted { baseline: 2.0, concurrent: Some(2.0) };
    let s = run_benchmark(dir.path(), &mut runner, 1.0, 3600.0, &[1e-2]).unwrap();
    assert_eq!(s.performance_ratio, 1.0);
    assert_eq!((s.wins, s.losses, s.ties), (0, 0, 3));
}

#[test]
fn timeout_in_concurrent_mode_is_charged_the_limit() {
    let dir = model_dir(1);
    let mut runner = Scripted { baseline: 5.0, concurrent: None };
    let s = run_benchmark(dir.path(), &mut runner, 1.0, 60.0, &[1e-2]).unwrap();
    assert_eq!(s.comparisons[0].concurrent_seconds, 60.0);
    assert_eq!(s.comparisons[0].verdict, Verdict::Loss);
    assert!((s.sgm_concurrent - 60.0).abs() < 1e-9);
}

#[test]
fn real_sweep_over_tiny_models() {
    let dir = model_dir(3);
    std::fs::write(dir.path().join("broken.mps"), "NAME broken\nROWS\n N obj\nCOLUMNS\n x obj one\nENDATA\n").unwrap();
    let mut runner = RaceRunner { config: RaceConfig { threads: Some(2), ..RaceConfig::default() } };
    let s = run_benchmark(dir.path(), &mut runner, 1.0, 3600.0, &[1e-2, 1e-3, 1e-4, 1e-5]).unwrap();
    assert_eq!(s.records.len(), 8);
    let broken: Vec<_> = s.records.iter().filter(|r| r.model == "broken").collect();
    assert!(broken.iter().all(|r| r.status == RunStatus::Failed && r.message.is_some()));
    assert_eq!(s.comparisons.iter().find(|c| c.model == "broken").unwrap().baseline_seconds, 3600.0);
    let solved = s.records.iter().filter(|r| r.mode == Mode::Concurrent && r.status == RunStatus::Solved).count();
    assert_eq!(solved, 3);
    assert_eq!(s.histogram.values().sum::<usize>(), solved);
    assert!(s.performance_ratio > 0.0);
}
