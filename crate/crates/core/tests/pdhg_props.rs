mod common;

use std::sync::atomic::AtomicBool;

use ccpdhg::kkt::relative_report;
use ccpdhg::pdhg::{pdhg_step, restart_if_improved, run_pdhg, PdhgConfig, PdhgState, Snapshot, StopReason};
use ccpdhg::standard::to_standard_form;
use ccpdhg::{Iterate, Lp, Tolerances};
use common::strategies::feasible_lp;
use proptest::prelude::*;

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// The three relative conditions, computed densely from the definitions on
/// an equality-form LP.
fn three_conditions(lp: &Lp, it: &Iterate<f64>) -> (f64, f64, f64) {
    let a = lp.matrix.to_dense();
    let (m, n) = (lp.nrows(), lp.ncols());
    let rp: Vec<f64> = (0..m).map(|i| lp.rhs[i] - (0..n).map(|j| a[i][j] * it.x[j]).sum::<f64>()).collect();
    let rd: Vec<f64> = (0..n).map(|j| (0..m).map(|i| a[i][j] * it.y[i]).sum::<f64>() + it.z[j] - lp.objective[j]).collect();
    let primal: f64 = (0..n).map(|j| lp.objective[j] * it.x[j]).sum();
    let mut dual: f64 = (0..m).map(|i| lp.rhs[i] * it.y[i]).sum();
    for j in 0..n {
        let z = it.z[j];
        if z > 0.0 && lp.col_lower[j].is_finite() {
            dual += lp.col_lower[j] * z;
        } else if z < 0.0 && lp.col_upper[j].is_finite() {
            dual += lp.col_upper[j] * z;
        }
    }
    (
        norm2(&rp) / (1.0 + norm2(&lp.rhs)),
        norm2(&rd) / (1.0 + norm2(&lp.objective)),
        (primal - dual).abs() / (1.0 + primal.abs() + dual.abs()),
    )
}

fn in_bounds(lp: &Lp, x: &[f64]) -> bool {
    x.iter().enumerate().all(|(j, &v)| lp.col_lower[j] <= v && v <= lp.col_upper[j])
}

fn config() -> PdhgConfig {
    PdhgConfig { max_iterations: 200_000, ..PdhgConfig::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn converged_runs_satisfy_all_three_conditions((lp, _) in feasible_lp()) {
        let std = to_standard_form(&lp).lp;
        let tol = Tolerances::default();
        let thresholds = [1e-1, 1e-2, 1e-3, 1e-4];
        let mut snaps: Vec<Snapshot<f64>> = Vec::new();
        let mut sink = |s: Snapshot<f64>| snaps.push(s);
        let out = run_pdhg(&std, &config(), &tol, &thresholds, &mut sink, &AtomicBool::new(false)).unwrap();
        prop_assert_eq!(out.stop, StopReason::Converged);
        let (p, d, g) = three_conditions(&std, &out.iterate);
        prop_assert!(p <= tol.eps_rel && d <= tol.eps_rel && g <= tol.eps_rel, "{} {} {}", p, d, g);
        prop_assert!(in_bounds(&std, &out.iterate.x));

        let mut last = f64::INFINITY;
        for s in &snaps {
            prop_assert!(thresholds.contains(&s.threshold));
            prop_assert!(s.threshold < last);
            last = s.threshold;
            prop_assert!(s.report.maxresid_rel <= s.threshold);
            let fresh = relative_report(&std, &s.iterate).unwrap().maxresid_rel;
            prop_assert!((fresh - s.report.maxresid_rel).abs() <= 1e-9 * fresh);
            prop_assert!(in_bounds(&std, &s.iterate.x));
        }
    }

    #[test]
    fn runs_are_bit_identical((lp, _) in feasible_lp(), seed in 0u64..50) {
        let std = to_standard_form(&lp).lp;
        let cfg = PdhgConfig { seed, max_iterations: 5_000, ..PdhgConfig::default() };
        let run = || {
            let mut snaps = Vec::new();
            let mut sink = |s: Snapshot<f64>| snaps.push((s.threshold, s.iterate));
            let out = run_pdhg(&std, &cfg, &Tolerances::default(), &[1e-2, 1e-3], &mut sink, &AtomicBool::new(false)).unwrap();
            (out.iterate, out.iterations, out.restarts, snaps)
        };
        prop_assert_eq!(run(), run());
    }

    #[test]
    fn restart_residuals_never_increase((lp, _) in feasible_lp()) {
        let std = to_standard_form(&lp).lp;
        let cfg = PdhgConfig::default();
        let mut s = PdhgState::initialize(&std, &cfg);
        let norm = ccpdhg::pdhg::estimate_matrix_norm(&std.matrix, 1000, 7);
        let mut history = Vec::new();
        for _ in 0..100 {
            for _ in 0..cfg.eval_every {
                pdhg_step(&std, &mut s).unwrap();
            }
            prop_assert!(s.tau * s.sigma * norm * norm <= 1.0 + 1e-6);
            prop_assert!(in_bounds(&std, &s.current.x));
            s.current_report = Some(relative_report(&std, &s.current).unwrap());
            s.average_report = Some(relative_report(&std, &s.average(&std)).unwrap());
            if restart_if_improved(&mut s, &cfg) {
                history.push(s.last_restart_resid);
            }
        }
        for w in history.windows(2) {
            prop_assert!(w[1] <= w[0], "restart residuals {:?}", history);
        }
    }
}
