//! From an approximate primal-dual point to a verified basic optimal
//! solution: guess which columns are basic, build a nonsingular basis around
//! the guess, clean it up with the primal simplex, and check the result
//! against the LP data alone.

use std::cmp::Ordering as CmpOrdering;
use std::fmt;
use std::sync::atomic::AtomicBool;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kkt::Iterate;
use crate::lp::LinearProgram;
use crate::scalar::Scalar;
use crate::simplex::{
    default_status, independent_columns, primal_simplex, verify_basis, Basis, SimplexOptions, SimplexStatus,
    VarStatus,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColumnGuess {
    CandidateBasic,
    AtLower,
    AtUpper,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub guess: Vec<ColumnGuess>,
    /// Candidate-basic columns, most interior first.
    pub ranked: Vec<usize>,
}

/// Splits columns by complementarity. A column whose distance to its
/// nearest finite bound is at most `max(|z_j|, eps)` is snapped to a bound
/// (the one the sign of `z_j` points at when that bound is finite);
/// everything else, free columns included, is a basis candidate. Candidates
/// are ranked by bound distance times column norm, then smaller `|z_j|`,
/// then index.
pub fn guess_partition<T: Scalar>(lp: &LinearProgram<T>, it: &Iterate<T>, eps: T) -> Partition {
    let n = lp.ncols();
    let mut guess = Vec::with_capacity(n);
    let mut scored: Vec<(T, T, usize)> = Vec::new();
    for j in 0..n {
        let (lo, hi) = (lp.col_lower[j], lp.col_upper[j]);
        let (x, z) = (it.x[j], it.z[j]);
        let dl = if lo.is_finite() { (x - lo).abs() } else { T::infinity() };
        let du = if hi.is_finite() { (hi - x).abs() } else { T::infinity() };
        let d = dl.min(du);
        let snap = lo == hi || (d.is_finite() && d <= z.abs().max(eps));
        if snap {
            let g = if z > T::zero() && lo.is_finite() {
                ColumnGuess::AtLower
            } else if z < T::zero() && hi.is_finite() {
                ColumnGuess::AtUpper
            } else if dl <= du {
                ColumnGuess::AtLower
            } else {
                ColumnGuess::AtUpper
            };
            guess.push(g);
        } else {
            guess.push(ColumnGuess::CandidateBasic);
            scored.push((d * lp.matrix.col_norm2(j), z.abs(), j));
        }
    }
    scored.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(CmpOrdering::Equal)
            .then(a.1.partial_cmp(&b.1).unwrap_or(CmpOrdering::Equal))
            .then(a.2.cmp(&b.2))
    });
    Partition {
        guess,
        ranked: scored.into_iter().map(|s| s.2).collect(),
    }
}

/// Picks `nrows` independent columns: ranked candidates first, then the
/// slack basis (singleton columns or logicals) to cover what is left.
/// Nonbasic columns take the bound their guess names.
pub fn build_basis<T: Scalar>(lp: &LinearProgram<T>, partition: &Partition, it: Option<&Iterate<T>>) -> Basis {
    let (m, n) = (lp.nrows(), lp.ncols());
    let mut order = partition.ranked.clone();
    order.extend(Basis::slack_basis(lp).basic);
    order.extend(n..n + m);
    let basic = independent_columns(lp, &order, T::lit(1e-9));
    let mut status: Vec<VarStatus> = (0..n + m)
        .map(|j| {
            if j >= n {
                return VarStatus::Fixed;
            }
            let (lo, hi) = (lp.col_lower[j], lp.col_upper[j]);
            let want = match partition.guess[j] {
                ColumnGuess::AtLower => VarStatus::AtLower,
                ColumnGuess::AtUpper => VarStatus::AtUpper,
                ColumnGuess::CandidateBasic => match it {
                    Some(it) if lo.is_finite() && hi.is_finite() => {
                        if (it.x[j] - lo).abs() <= (hi - it.x[j]).abs() {
                            VarStatus::AtLower
                        } else {
                            VarStatus::AtUpper
                        }
                    }
                    _ => default_status(lo, hi),
                },
            };
            match want {
                _ if lo == hi => VarStatus::Fixed,
                VarStatus::AtLower if lo.is_finite() => want,
                VarStatus::AtUpper if hi.is_finite() => want,
                _ => default_status(lo, hi),
            }
        })
        .collect();
    for &j in &basic {
        status[j] = VarStatus::Basic;
    }
    Basis { basic, status }
}

#[derive(Debug, Clone)]
pub struct CrossoverTask<'a, T> {
    /// Equality-form LP in its unscaled form.
    pub lp: &'a LinearProgram<T>,
    pub snapshot: Iterate<T>,
    /// Residual level the snapshot was launched at.
    pub threshold: T,
    pub eps_abs: T,
    pub options: SimplexOptions,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossoverResult<T> {
    pub threshold: T,
    pub basis: Basis,
    pub iterate: Iterate<T>,
    pub objective: T,
    pub absolute_violation: T,
    pub pivots: usize,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureKind {
    Cancelled,
    IterationLimit,
    Numerical,
    Unbounded,
    Infeasible,
    /// Cleanup finished but the basis did not pass verification.
    NotVerified,
}

impl fmt::Display for FailureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailureKind::Cancelled => "cancelled",
            FailureKind::IterationLimit => "iteration-limit",
            FailureKind::Numerical => "numerical",
            FailureKind::Unbounded => "unbounded",
            FailureKind::Infeasible => "infeasible",
            FailureKind::NotVerified => "not-verified",
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossoverFailure {
    pub kind: FailureKind,
    pub threshold: f64,
    pub pivots: usize,
    pub wall_seconds: f64,
    pub message: String,
}

impl fmt::Display for CrossoverFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "crossover from {:e} failed ({}): {}", self.threshold, self.kind, self.message)
    }
}

impl std::error::Error for CrossoverFailure {}

/// Result of checking a basis against the LP.
#[derive(Debug, Clone)]
pub struct Verification<T> {
    pub optimal: bool,
    pub violation: T,
    pub iterate: Option<Iterate<T>>,
    pub diagnostic: Option<String>,
}

/// Recomputes the basic solution of `basis` from the LP alone and accepts
/// it when it is primal and dual feasible within `eps_abs`. Nonbasic columns
/// sit exactly at bounds, so complementarity holds by construction.
pub fn verify_basic_optimal<T: Scalar>(lp: &LinearProgram<T>, basis: &Basis, eps_abs: T) -> Verification<T> {
    match verify_basis(lp, basis, eps_abs) {
        Ok((optimal, it, violation)) => Verification {
            optimal,
            violation,
            iterate: Some(it),
            diagnostic: None,
        },
        Err(e) => Verification {
            optimal: false,
            violation: T::infinity(),
            iterate: None,
            diagnostic: Some(e.to_string()),
        },
    }
}

/// Partition guess, basis construction, simplex cleanup and verification.
/// `cancel` is polled before every pivot.
pub fn run_crossover<T: Scalar>(
    task: &CrossoverTask<'_, T>,
    cancel: &AtomicBool,
) -> std::result::Result<CrossoverResult<T>, CrossoverFailure> {
    let start = Instant::now();
    let lp = task.lp;
    let fail = |kind, pivots, message: String, elapsed: Duration| CrossoverFailure {
        kind,
        threshold: task.threshold.as_f64(),
        pivots,
        wall_seconds: elapsed.as_secs_f64(),
        message,
    };
    if let Err(e) = task.snapshot.check_dims(lp) {
        return Err(fail(FailureKind::Numerical, 0, e.to_string(), start.elapsed()));
    }
    let partition = guess_partition(lp, &task.snapshot, task.eps_abs);
    let basis = build_basis(lp, &partition, Some(&task.snapshot));
    let res = match primal_simplex(lp, &basis, &task.options, cancel) {
        Ok(r) => r,
        Err(e) => {
            let kind = match e {
                Error::Unbounded { .. } => FailureKind::Unbounded,
                Error::Infeasible { .. } => FailureKind::Infeasible,
                _ => FailureKind::Numerical,
            };
            return Err(fail(kind, 0, e.to_string(), start.elapsed()));
        }
    };
    let pivots = res.stats.pivots;
    match res.status {
        SimplexStatus::Optimal => {}
        SimplexStatus::Cancelled => {
            return Err(fail(FailureKind::Cancelled, pivots, "cancelled".into(), start.elapsed()));
        }
        SimplexStatus::IterationLimit => {
            return Err(fail(
                FailureKind::IterationLimit,
                pivots,
                "pivot limit reached".into(),
                start.elapsed(),
            ));
        }
    }
    let check = verify_basic_optimal(lp, &res.basis, task.eps_abs);
    match check.iterate {
        Some(iterate) if check.optimal => {
            let objective = crate::scalar::dot(&lp.objective, &iterate.x);
            Ok(CrossoverResult {
                threshold: task.threshold,
                basis: res.basis,
                iterate,
                objective,
                absolute_violation: check.violation,
                pivots,
                wall_seconds: start.elapsed().as_secs_f64(),
            })
        }
        _ => Err(fail(
            FailureKind::NotVerified,
            pivots,
            check
                .diagnostic
                .unwrap_or_else(|| format!("absolute violation {:e}", check.violation.as_f64())),
            start.elapsed(),
        )),
    }
}

/// Convenience wrapper: crossover from `it` with default simplex options.
pub fn crossover_from<T: Scalar>(
    lp: &LinearProgram<T>,
    it: &Iterate<T>,
    threshold: T,
    eps_abs: T,
) -> Result<CrossoverResult<T>> {
    let task = CrossoverTask {
        lp,
        snapshot: it.clone(),
        threshold,
        eps_abs,
        options: SimplexOptions {
            eps_abs: eps_abs.as_f64(),
            ..SimplexOptions::default()
        },
    };
    run_crossover(&task, &AtomicBool::new(false)).map_err(|f| Error::Numerical {
        iteration: f.pivots,
        message: f.to_string(),
    })
}
