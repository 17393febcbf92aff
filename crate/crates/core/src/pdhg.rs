//! Restarted PDHG on an equality-form LP with bounded variables.
//!
//! One iteration, with primal weight `w` and step sizes
//! `tau = eta / (w ‖A‖)`, `sigma = eta w / ‖A‖`:
//!
//! ```text
//! x+ = proj_[l,u](x - tau (c - A^T y))
//! y+ = y + sigma (b - A (2 x+ - x))
//! z+ = c - A^T y+, keeping only the signs backed by finite bounds
//! ```
//!
//! The loop runs on a Ruiz-scaled copy of the problem but every residual it
//! reports, every snapshot it emits and the iterate it returns are in the
//! unscaled space. Scaling factors are powers of two, so the translation is
//! exact.

use std::fmt;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kkt::{relative_report, relative_report_with_products, Iterate, ResidualReport, Tolerances};
use crate::lp::LinearProgram;
use crate::scalar::{norm2, Scalar};
use crate::scaling::{ruiz_scale, ScalingInfo, DEFAULT_RUIZ_ITERATIONS};
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdhgConfig {
    /// `eta` in `(0, 1]`; `tau * sigma * ‖A‖² = eta²`.
    pub step_scale: f64,
    /// Initial primal weight. `None` uses `‖c‖ / ‖b‖` (or 1).
    pub primal_weight: Option<f64>,
    /// Re-estimate the primal weight from the movement between restarts.
    pub adaptive_primal_weight: bool,
    /// Weight of the new estimate when the primal weight is updated.
    pub primal_weight_smoothing: f64,
    /// Restart when the candidate residual drops to this fraction of the
    /// residual at the last restart.
    pub restart_beta: f64,
    /// Also restart below this fraction once the candidate stops improving.
    pub restart_necessary: f64,
    /// Also restart (without losing ground) once this fraction of all
    /// iterations has passed since the last restart.
    pub restart_artificial: f64,
    /// Iterations between residual evaluations. Termination, threshold
    /// launches and restarts are all decided at evaluations.
    pub eval_every: usize,
    pub norm_iterations: usize,
    pub ruiz_iterations: usize,
    pub max_iterations: usize,
    pub time_limit: Option<Duration>,
    pub seed: u64,
    /// Emit an iteration log line every this many iterations.
    pub log_every: Option<usize>,
    /// Threads for the `A^T y` kernel. The result does not depend on it.
    pub threads: usize,
}

impl Default for PdhgConfig {
    fn default() -> Self {
        Self {
            step_scale: 0.9,
            primal_weight: None,
            adaptive_primal_weight: true,
            primal_weight_smoothing: 0.5,
            restart_beta: 0.2,
            restart_necessary: 0.8,
            restart_artificial: 0.36,
            eval_every: 64,
            norm_iterations: 100,
            ruiz_iterations: DEFAULT_RUIZ_ITERATIONS,
            max_iterations: 1_000_000,
            time_limit: None,
            seed: 0,
            log_every: None,
            threads: 1,
        }
    }
}

impl PdhgConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_scale > 0.0 && self.step_scale <= 1.0) {
            return Err(Error::InvalidConfig("step_scale must lie in (0, 1]".into()));
        }
        if !(self.restart_beta > 0.0 && self.restart_beta < 1.0) {
            return Err(Error::InvalidConfig("restart_beta must lie in (0, 1)".into()));
        }
        if !(self.restart_necessary >= self.restart_beta && self.restart_necessary < 1.0) {
            return Err(Error::InvalidConfig("restart_necessary must lie in [restart_beta, 1)".into()));
        }
        if !(self.primal_weight_smoothing >= 0.0 && self.primal_weight_smoothing <= 1.0) {
            return Err(Error::InvalidConfig("primal_weight_smoothing must lie in [0, 1]".into()));
        }
        if self.eval_every == 0 {
            return Err(Error::InvalidConfig("eval_every must be at least 1".into()));
        }
        if let Some(w) = self.primal_weight {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidConfig("primal_weight must be positive".into()));
            }
        }
        if self.norm_iterations == 0 {
            return Err(Error::InvalidConfig("norm_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Converged,
    IterationLimit,
    TimeLimit,
    Cancelled,
    WonByCrossover,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::Converged => "converged",
            StopReason::IterationLimit => "iteration limit",
            StopReason::TimeLimit => "time limit",
            StopReason::Cancelled => "cancelled",
            StopReason::WonByCrossover => "won-by-crossover",
        })
    }
}

/// Which of the two candidate points a snapshot or result was taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IterateKind {
    Current,
    Average,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot<T> {
    pub threshold: T,
    pub iterate: Iterate<T>,
    pub report: ResidualReport<T>,
    pub kind: IterateKind,
    pub elapsed: Duration,
}

/// One row of the iteration log.
#[derive(Debug, Clone, Copy)]
pub struct IterationLog<T> {
    pub iteration: usize,
    pub rel_primal: T,
    pub rel_dual: T,
    pub rel_gap: T,
    pub elapsed: Duration,
}

impl<T: Scalar> fmt::Display for IterationLog<T> {
    /// `iteration\trel_primal\trel_dual\trel_gap\telapsed_seconds`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{:.6e}\t{:.6e}\t{:.6e}\t{:.6}",
            self.iteration,
            self.rel_primal,
            self.rel_dual,
            self.rel_gap,
            self.elapsed.as_secs_f64()
        )
    }
}

/// Receiver for threshold snapshots and log lines.
pub trait SnapshotSink<T> {
    fn snapshot(&mut self, snap: Snapshot<T>);
    fn log(&mut self, _line: &IterationLog<T>) {}
}

impl<T, F: FnMut(Snapshot<T>)> SnapshotSink<T> for F {
    fn snapshot(&mut self, snap: Snapshot<T>) {
        self(snap)
    }
}

/// Sink that drops everything.
pub struct NoSink;

impl<T> SnapshotSink<T> for NoSink {
    fn snapshot(&mut self, _snap: Snapshot<T>) {}
}

/// Walks a decreasing list of thresholds the way the launch rule does: at
/// most one threshold fires per check, and only once the residual is at or
/// below it. A residual that jumps past several thresholds fires them on
/// consecutive checks.
#[derive(Debug, Clone)]
pub struct ThresholdTracker<T> {
    thresholds: Vec<T>,
    next: usize,
}

impl<T: Scalar> ThresholdTracker<T> {
    pub fn new(thresholds: &[T]) -> Self {
        Self {
            thresholds: thresholds.to_vec(),
            next: 0,
        }
    }

    pub fn check(&mut self, maxresid: T) -> Option<T> {
        let t = *self.thresholds.get(self.next)?;
        if maxresid <= t {
            self.next += 1;
            Some(t)
        } else {
            None
        }
    }

    pub fn fired(&self) -> usize {
        self.next
    }
}

/// Largest singular value of `A` by power iteration on `A^T A` from a seeded
/// random start. Returns zero for an all-zero matrix.
pub fn estimate_matrix_norm<T: Scalar>(a: &SparseMatrix<T>, iterations: usize, seed: u64) -> T {
    let n = a.ncols();
    if n == 0 || a.nnz() == 0 {
        return T::zero();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<T> = (0..n).map(|_| T::lit(rng.random_range(-1.0..1.0))).collect();
    let mut nv = norm2(&v);
    if nv == T::zero() {
        v = vec![T::one(); n];
        nv = norm2(&v);
    }
    v.iter_mut().for_each(|x| *x /= nv);
    let mut av = vec![T::zero(); a.nrows()];
    let mut w = vec![T::zero(); n];
    let mut sigma = T::zero();
    for _ in 0..iterations.max(1) {
        a.matvec_into(&v, &mut av);
        sigma = norm2(&av);
        a.matvec_transpose_into(&av, &mut w);
        let nw = norm2(&w);
        if nw == T::zero() {
            break;
        }
        for (vi, &wi) in v.iter_mut().zip(&w) {
            *vi = wi / nw;
        }
    }
    a.matvec_into(&v, &mut av);
    sigma.max(norm2(&av))
}

#[inline]
fn backed_reduced_cost<T: Scalar>(g: T, lo: T, hi: T) -> T {
    if (g > T::zero() && lo.is_finite()) || (g < T::zero() && hi.is_finite()) {
        g
    } else {
        T::zero()
    }
}

/// Iteration state, in the (scaled) working space of the LP it was built for.
#[derive(Debug, Clone)]
pub struct PdhgState<T> {
    pub current: Iterate<T>,
    pub tau: T,
    pub sigma: T,
    pub primal_weight: T,
    pub norm_estimate: T,
    pub iteration: usize,
    pub restarts: usize,
    pub since_restart: usize,
    avg_x: Vec<T>,
    avg_y: Vec<T>,
    ax: Vec<T>,
    aty: Vec<T>,
    avg_ax: Vec<T>,
    avg_aty: Vec<T>,
    /// Latest evaluation of the current point.
    pub current_report: Option<ResidualReport<T>>,
    /// Latest evaluation of the running average.
    pub average_report: Option<ResidualReport<T>>,
    pub last_restart_resid: T,
    pub best_resid: T,
    prev_candidate_resid: T,
    restart_x: Vec<T>,
    restart_y: Vec<T>,
}

impl<T: Scalar> PdhgState<T> {
    /// Zero start with explicit step sizes.
    pub fn with_steps(lp: &LinearProgram<T>, tau: T, sigma: T) -> Self {
        let (m, n) = (lp.nrows(), lp.ncols());
        let aty = vec![T::zero(); n];
        let z = (0..n)
            .map(|j| backed_reduced_cost(lp.objective[j], lp.col_lower[j], lp.col_upper[j]))
            .collect();
        Self {
            current: Iterate {
                x: vec![T::zero(); n],
                y: vec![T::zero(); m],
                z,
                k: 0,
            },
            tau,
            sigma,
            primal_weight: T::one(),
            norm_estimate: T::zero(),
            iteration: 0,
            restarts: 0,
            since_restart: 0,
            avg_x: vec![T::zero(); n],
            avg_y: vec![T::zero(); m],
            ax: vec![T::zero(); m],
            aty: aty.clone(),
            avg_ax: vec![T::zero(); m],
            avg_aty: aty,
            current_report: None,
            average_report: None,
            last_restart_resid: T::infinity(),
            best_resid: T::infinity(),
            prev_candidate_resid: T::infinity(),
            restart_x: vec![T::zero(); n],
            restart_y: vec![T::zero(); m],
        }
    }

    /// Zero start with steps from the norm estimate and primal weight.
    pub fn initialize(lp: &LinearProgram<T>, config: &PdhgConfig) -> Self {
        let norm = estimate_matrix_norm(&lp.matrix, config.norm_iterations, config.seed);
        let weight = match config.primal_weight {
            Some(w) => T::lit(w),
            None => {
                let (cn, bn) = (norm2(&lp.objective), norm2(&lp.rhs));
                if cn > T::zero() && bn > T::zero() {
                    cn / bn
                } else {
                    T::one()
                }
            }
        };
        let mut s = Self::with_steps(lp, T::one(), T::one());
        s.norm_estimate = norm;
        s.set_primal_weight(weight, config.step_scale);
        s
    }

    /// `tau = eta / (w ‖A‖)`, `sigma = eta w / ‖A‖`; unit steps for `A = 0`.
    pub fn set_primal_weight(&mut self, weight: T, step_scale: f64) {
        self.primal_weight = weight;
        let eta = T::lit(step_scale);
        if self.norm_estimate > T::zero() {
            self.tau = eta / (weight * self.norm_estimate);
            self.sigma = eta * weight / self.norm_estimate;
        } else {
            self.tau = T::one();
            self.sigma = T::one();
        }
    }

    /// Running average of the iterates since the last restart, falling back
    /// to the current point right after a restart.
    pub fn average(&self, lp: &LinearProgram<T>) -> Iterate<T> {
        if self.since_restart == 0 {
            return self.current.clone();
        }
        let z = (0..lp.ncols())
            .map(|j| {
                backed_reduced_cost(
                    lp.objective[j] - self.avg_aty[j],
                    lp.col_lower[j],
                    lp.col_upper[j],
                )
            })
            .collect();
        Iterate {
            x: self.avg_x.clone(),
            y: self.avg_y.clone(),
            z,
            k: self.iteration,
        }
    }
}

/// One PDHG update of `state` on `lp`.
pub fn pdhg_step<T: Scalar>(lp: &LinearProgram<T>, state: &mut PdhgState<T>) -> Result<()> {
    step_impl(lp, state, None)
}

fn step_impl<T: Scalar>(lp: &LinearProgram<T>, state: &mut PdhgState<T>, pool: Option<&rayon::ThreadPool>) -> Result<()> {
    let (m, n) = (lp.nrows(), lp.ncols());
    let tau = state.tau;
    let sigma = state.sigma;
    let two = T::lit(2.0);

    let mut x_new = Vec::with_capacity(n);
    for j in 0..n {
        let g = lp.objective[j] - state.aty[j];
        let v = (state.current.x[j] - tau * g).max(lp.col_lower[j]).min(lp.col_upper[j]);
        x_new.push(v);
    }
    let mut ax_new = vec![T::zero(); m];
    lp.matrix.matvec_into(&x_new, &mut ax_new);
    let mut y_new = Vec::with_capacity(m);
    for i in 0..m {
        y_new.push(state.current.y[i] + sigma * (lp.rhs[i] - (two * ax_new[i] - state.ax[i])));
    }
    let mut aty_new = vec![T::zero(); n];
    if let Some(pool) = pool {
        pool.install(|| lp.matrix.par_matvec_transpose_into(&y_new, &mut aty_new));
    } else {
        lp.matrix.matvec_transpose_into(&y_new, &mut aty_new);
    }

    let next = state.iteration + 1;
    if x_new.iter().chain(&y_new).any(|v| !v.is_finite()) {
        return Err(Error::Numerical {
            iteration: next,
            message: "non-finite value in PDHG iterate".into(),
        });
    }

    let z_new = (0..n)
        .map(|j| backed_reduced_cost(lp.objective[j] - aty_new[j], lp.col_lower[j], lp.col_upper[j]))
        .collect();

    state.since_restart += 1;
    let w = T::one() / T::from_usize(state.since_restart).unwrap_or_else(T::one);
    let blend = |avg: &mut [T], new: &[T]| {
        for (a, &v) in avg.iter_mut().zip(new) {
            *a += (v - *a) * w;
        }
    };
    blend(&mut state.avg_x, &x_new);
    blend(&mut state.avg_y, &y_new);
    blend(&mut state.avg_ax, &ax_new);
    blend(&mut state.avg_aty, &aty_new);

    state.current = Iterate {
        x: x_new,
        y: y_new,
        z: z_new,
        k: next,
    };
    state.ax = ax_new;
    state.aty = aty_new;
    state.iteration = next;
    Ok(())
}

/// Restarts from the better of the current point and the running average
/// (the candidate) when its residual, relative to the residual at the
/// previous restart, has dropped to `restart_beta`; or to
/// `restart_necessary` without improving on the previous check; or has not
/// grown while `restart_artificial` of all iterations have passed since the
/// restart. Uses the reports stored on the state; returns whether a restart
/// happened.
pub fn restart_if_improved<T: Scalar>(state: &mut PdhgState<T>, config: &PdhgConfig) -> bool {
    let avg = state.average_report.map(|r| r.maxresid_rel);
    let cur = state.current_report.map(|r| r.maxresid_rel);
    let (use_average, resid) = match (avg, cur) {
        (Some(a), Some(c)) if a <= c => (true, a),
        (Some(a), None) => (true, a),
        (_, Some(c)) => (false, c),
        (None, None) => return false,
    };
    let last = state.last_restart_resid;
    let sufficient = resid <= T::lit(config.restart_beta) * last;
    let necessary = resid <= T::lit(config.restart_necessary) * last && resid > state.prev_candidate_resid;
    let artificial = resid <= last && state.since_restart as f64 >= config.restart_artificial * state.iteration as f64;
    state.prev_candidate_resid = resid;
    if !(sufficient || necessary || artificial) {
        return false;
    }
    if use_average && state.since_restart > 0 {
        state.current.x = state.avg_x.clone();
        state.current.y = state.avg_y.clone();
        state.ax = state.avg_ax.clone();
        state.aty = state.avg_aty.clone();
        state.current_report = state.average_report;
    }
    if config.adaptive_primal_weight {
        let dx = distance(&state.current.x, &state.restart_x);
        let dy = distance(&state.current.y, &state.restart_y);
        let tiny = T::lit(1e-10);
        if dx > tiny && dy > tiny {
            let theta = T::lit(config.primal_weight_smoothing);
            let w = (theta * (dy / dx).ln() + (T::one() - theta) * state.primal_weight.ln()).exp();
            if w.is_finite() && w > T::zero() {
                state.set_primal_weight(w, config.step_scale);
            }
        }
    }
    state.restart_x = state.current.x.clone();
    state.restart_y = state.current.y.clone();
    state.prev_candidate_resid = T::infinity();
    state.avg_x = state.current.x.clone();
    state.avg_y = state.current.y.clone();
    state.avg_ax = state.ax.clone();
    state.avg_aty = state.aty.clone();
    state.average_report = None;
    state.since_restart = 0;
    state.last_restart_resid = resid;
    state.best_resid = state.best_resid.min(resid);
    state.restarts += 1;
    true
}

fn distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&u, &v)| (u - v) * (u - v)).sum::<T>().sqrt()
}

#[derive(Debug, Clone)]
pub struct PdhgOutcome<T> {
    /// Final point in the unscaled space of the input LP.
    pub iterate: Iterate<T>,
    pub report: ResidualReport<T>,
    pub kind: IterateKind,
    pub stop: StopReason,
    pub iterations: usize,
    pub restarts: usize,
    pub snapshots: usize,
    pub elapsed: Duration,
}

/// Maps working-space quantities back to the unscaled LP and evaluates them.
struct Evaluator<'a, T> {
    lp: &'a LinearProgram<T>,
    scaling: &'a ScalingInfo<T>,
}

impl<T: Scalar> Evaluator<'_, T> {
    fn evaluate(&self, x: &[T], y: &[T], ax: &[T], aty: &[T], k: usize) -> (Iterate<T>, ResidualReport<T>) {
        let lp = self.lp;
        let x_u = self.scaling.unscale_primal(x);
        let y_u: Vec<T> = y.iter().zip(&self.scaling.row).map(|(&v, &r)| v * r).collect();
        let ax_u: Vec<T> = ax.iter().zip(&self.scaling.row).map(|(&v, &r)| v / r).collect();
        let aty_u: Vec<T> = aty.iter().zip(&self.scaling.col).map(|(&v, &s)| v / s).collect();
        let z_u = (0..lp.ncols())
            .map(|j| backed_reduced_cost(lp.objective[j] - aty_u[j], lp.col_lower[j], lp.col_upper[j]))
            .collect();
        let it = Iterate {
            x: x_u,
            y: y_u,
            z: z_u,
            k,
        };
        let report = relative_report_with_products(lp, &it, &ax_u, &aty_u);
        (it, report)
    }
}

/// Runs PDHG on an equality-form LP until the relative residual reaches
/// `tolerances.eps_rel`, a limit is hit, or `cancel` is raised.
///
/// Every check compares the better of the current point and the running
/// average against the threshold list (decreasing); each threshold that is
/// reached produces exactly one [`Snapshot`], in order.
pub fn run_pdhg<T: Scalar>(
    lp: &LinearProgram<T>,
    config: &PdhgConfig,
    tolerances: &Tolerances<T>,
    thresholds: &[T],
    sink: &mut dyn SnapshotSink<T>,
    cancel: &AtomicBool,
) -> Result<PdhgOutcome<T>> {
    config.validate()?;
    if !lp.is_standard_form() {
        return Err(Error::InvalidModel("PDHG expects an equality-form minimization LP".into()));
    }
    if config.threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
        run_loop(lp, config, tolerances, thresholds, sink, cancel, Some(&pool))
    } else {
        run_loop(lp, config, tolerances, thresholds, sink, cancel, None)
    }
}

fn run_loop<T: Scalar>(
    lp: &LinearProgram<T>,
    config: &PdhgConfig,
    tolerances: &Tolerances<T>,
    thresholds: &[T],
    sink: &mut dyn SnapshotSink<T>,
    cancel: &AtomicBool,
    pool: Option<&rayon::ThreadPool>,
) -> Result<PdhgOutcome<T>> {
    let start = Instant::now();
    let (scaled, scaling) = ruiz_scale(lp, config.ruiz_iterations);
    let eval = Evaluator { lp, scaling: &scaling };
    let mut state = PdhgState::initialize(&scaled, config);
    let mut tracker = ThresholdTracker::new(thresholds);
    let eps = tolerances.eps_rel;

    let evaluate_current = |s: &PdhgState<T>| eval.evaluate(&s.current.x, &s.current.y, &s.ax, &s.aty, s.iteration);
    let evaluate_average =
        |s: &PdhgState<T>| eval.evaluate(&s.avg_x, &s.avg_y, &s.avg_ax, &s.avg_aty, s.iteration);

    let (mut best_it, mut best_report) = evaluate_current(&state);
    let mut best_kind = IterateKind::Current;
    state.current_report = Some(best_report);
    state.last_restart_resid = best_report.maxresid_rel;
    state.best_resid = best_report.maxresid_rel;
    let mut snapshots = 0usize;

    let finish = |it: Iterate<T>, report, kind, stop, s: &PdhgState<T>, snapshots| PdhgOutcome {
        iterate: it,
        report,
        kind,
        stop,
        iterations: s.iteration,
        restarts: s.restarts,
        snapshots,
        elapsed: start.elapsed(),
    };

    let mut evaluated = true;
    loop {
        // Loop guard first, then the launch check, then iterate.
        if evaluated {
            evaluated = false;
            if best_report.maxresid_rel <= eps {
                // confirm from scratch so callers can rely on the inequalities
                let fresh = relative_report(lp, &best_it)?;
                if fresh.maxresid_rel <= eps {
                    return Ok(finish(best_it, fresh, best_kind, StopReason::Converged, &state, snapshots));
                }
            }
            if let Some(t) = tracker.check(best_report.maxresid_rel) {
                snapshots += 1;
                sink.snapshot(Snapshot {
                    threshold: t,
                    iterate: best_it.clone(),
                    report: best_report,
                    kind: best_kind,
                    elapsed: start.elapsed(),
                });
            }
        }
        if cancel.load(Ordering::Acquire) {
            return Ok(finish(best_it, best_report, best_kind, StopReason::Cancelled, &state, snapshots));
        }
        if state.iteration >= config.max_iterations {
            return Ok(finish(best_it, best_report, best_kind, StopReason::IterationLimit, &state, snapshots));
        }
        if config.time_limit.is_some_and(|tl| start.elapsed() >= tl) {
            return Ok(finish(best_it, best_report, best_kind, StopReason::TimeLimit, &state, snapshots));
        }

        step_impl(&scaled, &mut state, pool)?;
        if state.iteration % config.eval_every != 0 && state.iteration < config.max_iterations {
            continue;
        }
        evaluated = true;

        let (cur_it, cur_rep) = evaluate_current(&state);
        let (avg_it, avg_rep) = evaluate_average(&state);
        state.current_report = Some(cur_rep);
        state.average_report = Some(avg_rep);
        state.best_resid = state.best_resid.min(cur_rep.maxresid_rel).min(avg_rep.maxresid_rel);
        if avg_rep.maxresid_rel < cur_rep.maxresid_rel {
            (best_it, best_report, best_kind) = (avg_it, avg_rep, IterateKind::Average);
        } else {
            (best_it, best_report, best_kind) = (cur_it, cur_rep, IterateKind::Current);
        }

        if let Some(every) = config.log_every {
            if every > 0 && state.iteration % (every.div_ceil(config.eval_every) * config.eval_every) == 0 {
                sink.log(&IterationLog {
                    iteration: state.iteration,
                    rel_primal: best_report.rel_primal,
                    rel_dual: best_report.rel_dual,
                    rel_gap: best_report.rel_gap,
                    elapsed: start.elapsed(),
                });
            }
        }

        restart_if_improved(&mut state, config);
    }
}
