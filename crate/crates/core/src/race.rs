//! PDHG with concurrent crossover.
//!
//! The PDHG loop registers a decreasing list of residual thresholds. Each
//! time the residual reaches the next one, a copy of the iterate goes to a
//! crossover worker if the pool has room (otherwise the snapshot is
//! dropped). When PDHG converges, the calling thread runs crossover itself
//! from the converged iterate. The first crossover to produce a verified
//! basic optimal solution wins; everyone else is cancelled.
//!
//! [`Coordinator`] holds the bookkeeping shared by the threaded race in
//! [`run_race`] and the virtual-time replay in [`simulate_race`].

use std::fmt;
use std::io::Write;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::crossover::{run_crossover, verify_basic_optimal, CrossoverResult, CrossoverTask, FailureKind};
use crate::error::{Error, Result};
use crate::kkt::{ResidualReport, Tolerances};
use crate::lp::LinearProgram;
use crate::pdhg::{run_pdhg, IterationLog, PdhgConfig, Snapshot, SnapshotSink, StopReason, ThresholdTracker};
use crate::scalar::Scalar;
use crate::simplex::{SimplexOptions, VarStatus};
use crate::standard::to_standard_form;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Baseline,
    Concurrent,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Baseline => "baseline",
            Mode::Concurrent => "concurrent",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Mode::Baseline),
            "concurrent" => Ok(Mode::Concurrent),
            _ => Err(Error::InvalidConfig(format!("unknown mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RaceConfig<T> {
    pub tolerances: Tolerances<T>,
    pub mode: Mode,
    /// Crossover worker pool size.
    pub workers: usize,
    /// Cores to split between PDHG and the pool; `None` asks the OS.
    pub threads: Option<usize>,
    pub time_limit: Option<Duration>,
    pub pdhg: PdhgConfig,
    pub simplex: SimplexOptions,
}

impl<T: Scalar> Default for RaceConfig<T> {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            mode: Mode::Concurrent,
            workers: 4,
            threads: None,
            time_limit: Some(Duration::from_secs(3600)),
            pdhg: PdhgConfig::default(),
            simplex: SimplexOptions::default(),
        }
    }
}

impl<T: Scalar> RaceConfig<T> {
    pub fn validate(&self) -> Result<()> {
        self.tolerances.validate()?;
        self.pdhg.validate()?;
        if self.mode == Mode::Concurrent && self.workers == 0 {
            return Err(Error::InvalidConfig("concurrent mode needs at least one crossover worker".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidConfig("threads must be at least 1".into()));
        }
        Ok(())
    }
}

/// Rounds to 15 significant digits, so `1e-2 * 0.1` lands on `1e-3`.
fn snap(v: f64) -> f64 {
    format!("{v:.14e}").parse().unwrap_or(v)
}

/// Launch thresholds: `eps_cross`, `eps_cross * decrement`, ... while
/// strictly above `eps_rel`. The crossover at `eps_rel` itself belongs to
/// the main thread and is not listed.
pub fn schedule_thresholds<T: Scalar>(tol: &Tolerances<T>) -> Result<Vec<T>> {
    tol.validate()?;
    let eps_rel = tol.eps_rel.as_f64();
    let dec = tol.decrement.as_f64();
    let mut out = Vec::new();
    let mut t = snap(tol.eps_cross.as_f64());
    while t > eps_rel && t > 0.0 {
        out.push(T::lit(t));
        t = snap(t * dec);
    }
    Ok(out)
}

/// Splits `available` cores into `(pdhg threads, crossover workers)`.
pub fn reserve_threads(pool: usize, available: usize) -> Result<(usize, usize)> {
    if pool == 0 {
        return Err(Error::InvalidConfig("crossover pool must be at least 1".into()));
    }
    let workers = pool.min(available.saturating_sub(1)).max(1);
    let pdhg = available.saturating_sub(workers).max(1);
    Ok((pdhg, workers))
}

/// `1e-2` style label for a threshold, `main` for the main thread.
pub fn threshold_label(threshold: Option<f64>) -> String {
    match threshold {
        Some(t) => format!("{t:e}"),
        None => "main".into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WorkerStatus {
    Running,
    Won,
    /// Completed with a verified answer after someone else had won.
    Finished,
    Failed,
    Cancelled,
}

impl WorkerStatus {
    pub fn is_terminal(self) -> bool {
        self != WorkerStatus::Running
    }
}

impl fmt::Display for WorkerStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WorkerStatus::Running => "running",
            WorkerStatus::Won => "won",
            WorkerStatus::Finished => "finished",
            WorkerStatus::Failed => "failed",
            WorkerStatus::Cancelled => "cancelled",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerRecord {
    pub id: usize,
    /// Launch threshold; `None` for the main thread.
    pub threshold: Option<f64>,
    pub launch_ms: f64,
    pub finish_ms: Option<f64>,
    pub status: WorkerStatus,
    pub pivots: usize,
    pub message: Option<String>,
}

impl WorkerRecord {
    pub fn label(&self) -> String {
        threshold_label(self.threshold)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Launch,
    Finish,
    Cancel,
    Win,
}

/// One line of the race event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaceEvent {
    pub event: EventKind,
    pub threshold: String,
    pub t_ms: f64,
    pub status: Option<WorkerStatus>,
}

pub fn write_events(events: &[RaceEvent], mut out: impl Write) -> Result<()> {
    for e in events {
        serde_json::to_writer(&mut out, e)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_events(text: &str) -> Result<Vec<RaceEvent>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}

/// Launch, completion and winner bookkeeping. The first successful report
/// commits as winner; the rest only record their terminal status.
#[derive(Debug)]
pub struct Coordinator<R> {
    capacity: usize,
    running: usize,
    records: Vec<WorkerRecord>,
    events: Vec<RaceEvent>,
    flags: Vec<Arc<AtomicBool>>,
    winner: Option<(usize, R)>,
    dropped: usize,
}

impl<R> Coordinator<R> {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            running: 0,
            records: Vec::new(),
            events: Vec::new(),
            flags: Vec::new(),
            winner: None,
            dropped: 0,
        }
    }

    fn push_event(&mut self, event: EventKind, id: usize, t_ms: f64, status: Option<WorkerStatus>) {
        let threshold = self.records[id].label();
        self.events.push(RaceEvent {
            event,
            threshold,
            t_ms,
            status,
        });
    }

    /// Registers a crossover start. Pool workers (`threshold` set) need a
    /// free slot and no winner yet; the main thread only needs no winner.
    /// Returns the worker id and its cancel flag.
    pub fn launch(&mut self, threshold: Option<f64>, t_ms: f64) -> Option<(usize, Arc<AtomicBool>)> {
        if self.winner.is_some() {
            return None;
        }
        if threshold.is_some() {
            if self.running >= self.capacity {
                self.dropped += 1;
                return None;
            }
            self.running += 1;
        }
        let id = self.records.len();
        self.records.push(WorkerRecord {
            id,
            threshold,
            launch_ms: t_ms,
            finish_ms: None,
            status: WorkerStatus::Running,
            pivots: 0,
            message: None,
        });
        let flag = Arc::new(AtomicBool::new(false));
        self.flags.push(flag.clone());
        self.push_event(EventKind::Launch, id, t_ms, None);
        Some((id, flag))
    }

    fn close(&mut self, id: usize, status: WorkerStatus, pivots: usize, message: Option<String>, t_ms: f64) {
        let rec = &mut self.records[id];
        debug_assert_eq!(rec.status, WorkerStatus::Running);
        rec.status = status;
        rec.finish_ms = Some(t_ms);
        rec.pivots = pivots;
        rec.message = message;
        if rec.threshold.is_some() {
            self.running -= 1;
        }
        self.push_event(EventKind::Finish, id, t_ms, Some(status));
    }

    /// A verified success. Returns true if it committed as the winner, in
    /// which case every other running worker is cancelled.
    pub fn report_success(&mut self, id: usize, payload: R, pivots: usize, t_ms: f64) -> bool {
        if self.winner.is_some() {
            self.close(id, WorkerStatus::Finished, pivots, None, t_ms);
            return false;
        }
        self.close(id, WorkerStatus::Won, pivots, None, t_ms);
        self.winner = Some((id, payload));
        self.push_event(EventKind::Win, id, t_ms, Some(WorkerStatus::Won));
        self.cancel_all_except(Some(id), t_ms);
        true
    }

    pub fn report_failure(&mut self, id: usize, cancelled: bool, pivots: usize, message: String, t_ms: f64) {
        let status = if cancelled {
            WorkerStatus::Cancelled
        } else {
            WorkerStatus::Failed
        };
        self.close(id, status, pivots, Some(message), t_ms);
    }

    /// Raises the cancel flag of every running worker other than `keep`.
    pub fn cancel_all_except(&mut self, keep: Option<usize>, t_ms: f64) {
        for id in 0..self.records.len() {
            if Some(id) == keep || self.records[id].status != WorkerStatus::Running {
                continue;
            }
            if !self.flags[id].swap(true, Ordering::AcqRel) {
                self.push_event(EventKind::Cancel, id, t_ms, None);
            }
        }
    }

    pub fn winner_id(&self) -> Option<usize> {
        self.winner.as_ref().map(|w| w.0)
    }

    pub fn has_winner(&self) -> bool {
        self.winner.is_some()
    }

    pub fn running(&self) -> usize {
        self.records.iter().filter(|r| r.status == WorkerStatus::Running).count()
    }

    pub fn records(&self) -> &[WorkerRecord] {
        &self.records
    }

    pub fn events(&self) -> &[RaceEvent] {
        &self.events
    }

    pub fn dropped(&self) -> usize {
        self.dropped
    }

    pub fn into_parts(self) -> (Option<(usize, R)>, Vec<WorkerRecord>, Vec<RaceEvent>, usize) {
        (self.winner, self.records, self.events, self.dropped)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RaceStatus {
    Solved,
    TimeLimit,
    Failed,
}

/// Verified basic optimal solution in the space of the input model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Solution<T> {
    /// Objective in the model's own sense, offset included.
    pub objective: T,
    pub x: Vec<T>,
    pub y: Vec<T>,
    pub z: Vec<T>,
    /// Status of each original column in the final basis.
    pub column_status: Vec<VarStatus>,
    pub absolute_violation: T,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RaceOutcome<T> {
    pub status: RaceStatus,
    pub mode: Mode,
    /// Label of the winning crossover (`1e-2`, ..., or `main`).
    pub winner: Option<String>,
    pub solution: Option<Solution<T>>,
    /// Winning crossover on the equality-form model, basis included.
    pub crossover: Option<CrossoverResult<T>>,
    pub workers: Vec<WorkerRecord>,
    pub events: Vec<RaceEvent>,
    pub thresholds: Vec<T>,
    pub dropped_snapshots: usize,
    pub pdhg_stop: StopReason,
    pub pdhg_iterations: usize,
    pub pdhg_report: ResidualReport<T>,
    pub wall_seconds: f64,
    pub failure: Option<String>,
}

impl<T: Scalar> RaceOutcome<T> {
    pub fn crossover_pivots(&self) -> usize {
        self.crossover.as_ref().map_or(0, |c| c.pivots)
    }
}

type Shared<T> = Mutex<Coordinator<CrossoverResult<T>>>;

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn lock<R>(m: &Mutex<Coordinator<R>>) -> std::sync::MutexGuard<'_, Coordinator<R>> {
    m.lock().unwrap_or_else(|p| p.into_inner())
}

/// Crossover body shared by pool workers and the main thread: run, verify
/// again, report.
#[allow(clippy::too_many_arguments)]
fn crossover_job<T: Scalar>(
    lp: &LinearProgram<T>,
    snapshot: crate::kkt::Iterate<T>,
    threshold: T,
    eps_abs: T,
    options: &SimplexOptions,
    id: usize,
    flag: &AtomicBool,
    coord: &Shared<T>,
    global: &AtomicBool,
    start: Instant,
) {
    let task = CrossoverTask {
        lp,
        snapshot,
        threshold,
        eps_abs,
        options: options.clone(),
    };
    let res = run_crossover(&task, flag);
    match res {
        Ok(r) => {
            // never trust a worker's own claim
            let check = verify_basic_optimal(lp, &r.basis, eps_abs);
            let mut c = lock(coord);
            if check.optimal {
                let pivots = r.pivots;
                if c.report_success(id, r, pivots, ms(start)) {
                    global.store(true, Ordering::Release);
                }
            } else {
                let msg = check.diagnostic.unwrap_or_else(|| "verification failed".into());
                c.report_failure(id, false, r.pivots, msg, ms(start));
            }
        }
        Err(f) => {
            let mut c = lock(coord);
            c.report_failure(id, f.kind == FailureKind::Cancelled, f.pivots, f.message, ms(start));
        }
    }
}

/// Receives PDHG log lines during a race.
pub type LogObserver<'a, T> = &'a mut dyn FnMut(&IterationLog<T>);

struct LaunchSink<'scope, 'env, 'o, T: Scalar> {
    scope: &'scope std::thread::Scope<'scope, 'env>,
    lp: &'scope LinearProgram<T>,
    coord: &'scope Shared<T>,
    global: &'scope AtomicBool,
    eps_abs: T,
    options: &'scope SimplexOptions,
    start: Instant,
    observer: Option<LogObserver<'o, T>>,
}

impl<T: Scalar> SnapshotSink<T> for LaunchSink<'_, '_, '_, T> {
    fn snapshot(&mut self, snap: Snapshot<T>) {
        let launched = lock(self.coord).launch(Some(snap.threshold.as_f64()), ms(self.start));
        let Some((id, flag)) = launched else {
            return;
        };
        let (lp, coord, global, eps_abs, options, start) =
            (self.lp, self.coord, self.global, self.eps_abs, self.options, self.start);
        let threshold = snap.threshold;
        let iterate = snap.iterate;
        self.scope.spawn(move || {
            crossover_job(lp, iterate, threshold, eps_abs, options, id, &flag, coord, global, start);
        });
    }

    fn log(&mut self, line: &IterationLog<T>) {
        if let Some(o) = self.observer.as_mut() {
            o(line);
        }
    }
}

/// Solves `lp` by PDHG plus crossover. Baseline mode runs crossover once,
/// on the calling thread, from the converged iterate; concurrent mode also
/// launches pool workers at the scheduled thresholds. If PDHG stops on its
/// iteration limit the main crossover starts from the final iterate.
pub fn run_race<T: Scalar>(lp: &LinearProgram<T>, config: &RaceConfig<T>) -> Result<RaceOutcome<T>> {
    run_race_observed(lp, config, None)
}

pub fn run_race_observed<T: Scalar>(
    lp: &LinearProgram<T>,
    config: &RaceConfig<T>,
    observer: Option<LogObserver<'_, T>>,
) -> Result<RaceOutcome<T>> {
    config.validate()?;
    lp.validate()?;
    let start = Instant::now();
    let map = to_standard_form(lp);
    let std_lp = &map.lp;
    let tol = config.tolerances;
    let thresholds = match config.mode {
        Mode::Baseline => Vec::new(),
        Mode::Concurrent => schedule_thresholds(&tol)?,
    };
    let available = config
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(2, |n| n.get()));
    let (pdhg_threads, pool) = match config.mode {
        Mode::Baseline => (available.max(1), 0),
        Mode::Concurrent => reserve_threads(config.workers, available.max(2))?,
    };
    let mut pdhg_cfg = config.pdhg.clone();
    pdhg_cfg.threads = pdhg_threads;
    pdhg_cfg.time_limit = match (pdhg_cfg.time_limit, config.time_limit) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    let simplex_opts = SimplexOptions {
        eps_abs: tol.eps_abs.as_f64(),
        ..config.simplex.clone()
    };

    let coord: Shared<T> = Mutex::new(Coordinator::new(pool));
    let global = AtomicBool::new(false);
    let timed_out = AtomicBool::new(false);
    let done = AtomicBool::new(false);

    let pdhg_result = std::thread::scope(|scope| {
        if let Some(limit) = config.time_limit {
            let (coord, global, timed_out, done) = (&coord, &global, &timed_out, &done);
            scope.spawn(move || {
                while !done.load(Ordering::Acquire) {
                    if start.elapsed() >= limit {
                        timed_out.store(true, Ordering::Release);
                        global.store(true, Ordering::Release);
                        lock(coord).cancel_all_except(None, ms(start));
                        break;
                    }
                    std::thread::sleep(Duration::from_millis(2));
                }
            });
        }

        let mut sink = LaunchSink {
            scope,
            lp: std_lp,
            coord: &coord,
            global: &global,
            eps_abs: tol.eps_abs,
            options: &simplex_opts,
            start,
            observer,
        };
        let out = run_pdhg(std_lp, &pdhg_cfg, &tol, &thresholds, &mut sink, &global);
        let out = match out {
            Ok(o) => o,
            Err(e) => {
                lock(&coord).cancel_all_except(None, ms(start));
                done.store(true, Ordering::Release);
                return Err(e);
            }
        };
        let run_main = match out.stop {
            StopReason::Converged | StopReason::IterationLimit => !lock(&coord).has_winner(),
            StopReason::TimeLimit => {
                timed_out.store(true, Ordering::Release);
                false
            }
            StopReason::Cancelled | StopReason::WonByCrossover => false,
        };
        if run_main {
            let launched = lock(&coord).launch(None, ms(start));
            if let Some((id, flag)) = launched {
                // a pool win or the watchdog raises this flag too
                crossover_job(
                    std_lp,
                    out.iterate.clone(),
                    tol.eps_rel,
                    tol.eps_abs,
                    &simplex_opts,
                    id,
                    &flag,
                    &coord,
                    &global,
                    start,
                );
            }
        }
        if !lock(&coord).has_winner() && timed_out.load(Ordering::Acquire) {
            lock(&coord).cancel_all_except(None, ms(start));
        }
        if !lock(&coord).has_winner() {
            // wait for pool workers still running; the first verified one wins
            while lock(&coord).running() > 0 {
                std::thread::sleep(Duration::from_millis(1));
            }
        }
        done.store(true, Ordering::Release);
        Ok(out)
    });
    let out = pdhg_result?;

    let coord = coord.into_inner().unwrap_or_else(|p| p.into_inner());
    let (winner, workers, events, dropped) = coord.into_parts();
    let mut pdhg_stop = out.stop;
    if pdhg_stop == StopReason::Cancelled {
        if winner.as_ref().is_some_and(|(id, _)| workers[*id].threshold.is_some()) {
            pdhg_stop = StopReason::WonByCrossover;
        } else if timed_out.load(Ordering::Acquire) {
            pdhg_stop = StopReason::TimeLimit;
        }
    }
    let (status, winner_label, solution, crossover, failure) = match winner {
        Some((id, result)) => {
            let x = map.unmap_primal(&result.iterate.x)?;
            let (y, z) = map.unmap_dual(&result.iterate.y, &result.iterate.z)?;
            let column_status = result.basis.status[..lp.ncols()].to_vec();
            let solution = Solution {
                objective: map.unmap_objective(result.objective),
                x,
                y,
                z,
                column_status,
                absolute_violation: result.absolute_violation,
            };
            (RaceStatus::Solved, Some(workers[id].label()), Some(solution), Some(result), None)
        }
        None => {
            let status = if timed_out.load(Ordering::Acquire) {
                RaceStatus::TimeLimit
            } else {
                RaceStatus::Failed
            };
            let why = workers
                .iter()
                .filter_map(|w| w.message.as_ref().map(|m| format!("{}: {m}", w.label())))
                .collect::<Vec<_>>()
                .join("; ");
            let failure = format!("no verified basic solution (PDHG stop: {}){}", out.stop, if why.is_empty() {
                String::new()
            } else {
                format!("; {why}")
            });
            (status, None, None, None, Some(failure))
        }
    };
    Ok(RaceOutcome {
        status,
        mode: config.mode,
        winner: winner_label,
        solution,
        crossover,
        workers,
        events,
        thresholds,
        dropped_snapshots: dropped,
        pdhg_stop,
        pdhg_iterations: out.iterations,
        pdhg_report: out.report,
        wall_seconds: start.elapsed().as_secs_f64(),
        failure,
    })
}

/// Scripted crossover run for [`simulate_race`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScriptedWorker {
    pub duration_ms: f64,
    pub success: bool,
}

/// Virtual-time race input: the PDHG residual at each evaluation time and
/// the crossover each launch would run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// `(t_ms, maxresid_rel)` in increasing time.
    pub trace: Vec<(f64, f64)>,
    pub thresholds: Vec<f64>,
    pub eps_rel: f64,
    pub capacity: usize,
    /// Script for the `k`-th threshold in `thresholds`.
    pub workers: Vec<ScriptedWorker>,
    pub main: ScriptedWorker,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutcome {
    pub winner: Option<String>,
    pub win_ms: Option<f64>,
    pub pdhg_stop: StopReason,
    pub workers: Vec<WorkerRecord>,
    pub events: Vec<RaceEvent>,
    pub dropped_snapshots: usize,
}

/// Replays a scripted race in virtual time through the same coordinator
/// the threaded race uses.
pub fn simulate_race(s: &Scenario) -> SimOutcome {
    let mut coord: Coordinator<()> = Coordinator::new(s.capacity);
    let mut tracker = ThresholdTracker::new(&s.thresholds);
    // (finish time, id, script)
    let mut pending: Vec<(f64, usize, ScriptedWorker)> = Vec::new();
    let mut stop = StopReason::IterationLimit;
    let mut stop_ms = s.trace.last().map_or(0.0, |p| p.0);

    fn settle(coord: &mut Coordinator<()>, pending: &mut Vec<(f64, usize, ScriptedWorker)>, until: f64) {
        loop {
            if coord.has_winner() {
                break;
            }
            let next = pending
                .iter()
                .enumerate()
                .filter(|(_, p)| p.0 <= until)
                .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0).then(a.1 .1.cmp(&b.1 .1)))
                .map(|(k, _)| k);
            let Some(k) = next else { break };
            let (t, id, w) = pending.remove(k);
            if w.success {
                coord.report_success(id, (), 0, t);
            } else {
                coord.report_failure(id, false, 0, "scripted failure".into(), t);
            }
        }
    }

    for &(t, resid) in &s.trace {
        settle(&mut coord, &mut pending, t);
        if let Some((_, ())) = coord.winner.as_ref() {
            stop = StopReason::WonByCrossover;
            stop_ms = coord.records[coord.winner_id().unwrap_or(0)].finish_ms.unwrap_or(t);
            break;
        }
        if resid <= s.eps_rel {
            stop = StopReason::Converged;
            stop_ms = t;
            break;
        }
        if let Some(th) = tracker.check(resid) {
            let k = tracker.fired() - 1;
            if let Some((id, _)) = coord.launch(Some(th), t) {
                let w = s.workers.get(k).copied().unwrap_or(ScriptedWorker {
                    duration_ms: f64::INFINITY,
                    success: false,
                });
                pending.push((t + w.duration_ms, id, w));
            }
        }
    }

    if stop != StopReason::WonByCrossover {
        if let Some((id, _)) = coord.launch(None, stop_ms) {
            pending.push((stop_ms + s.main.duration_ms, id, s.main));
        }
        settle(&mut coord, &mut pending, f64::INFINITY);
    }
    let win_ms = coord.winner_id().and_then(|id| coord.records[id].finish_ms);
    // losers still in flight see the cancel and stop at the win time
    for (_, id, _) in std::mem::take(&mut pending) {
        let t = win_ms.unwrap_or(f64::INFINITY);
        coord.report_failure(id, true, 0, "cancelled".into(), t);
    }
    let winner = coord.winner_id().map(|id| coord.records[id].label());
    let dropped = coord.dropped();
    let (_, workers, events, _) = coord.into_parts();
    SimOutcome {
        winner,
        win_ms,
        pdhg_stop: stop,
        workers,
        events,
        dropped_snapshots: dropped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schedule() {
        let t = schedule_thresholds(&Tolerances::<f64>::default()).unwrap();
        assert_eq!(t, vec![1e-2, 1e-3, 1e-4, 1e-5]);
    }

    #[test]
    fn gpu_variant_schedule() {
        let tol = Tolerances {
            eps_cross: 1e-4,
            eps_rel: 1e-8,
            ..Tolerances::<f64>::default()
        };
        assert_eq!(schedule_thresholds(&tol).unwrap(), vec![1e-4, 1e-5, 1e-6, 1e-7]);
    }

    #[test]
    fn equal_tolerances_give_empty_schedule() {
        let tol = Tolerances {
            eps_cross: 1e-6,
            ..Tolerances::<f64>::default()
        };
        assert!(schedule_thresholds(&tol).unwrap().is_empty());
    }

    #[test]
    fn thread_reservation() {
        assert_eq!(reserve_threads(4, 16).unwrap(), (12, 4));
        assert_eq!(reserve_threads(4, 2).unwrap(), (1, 1));
        assert!(reserve_threads(0, 16).is_err());
    }

    #[test]
    fn labels() {
        assert_eq!(threshold_label(Some(1e-2)), "1e-2");
        assert_eq!(threshold_label(Some(1e-5)), "1e-5");
        assert_eq!(threshold_label(None), "main");
    }

    #[test]
    fn coordinator_first_commit_wins() {
        let mut c: Coordinator<u8> = Coordinator::new(2);
        let (a, fa) = c.launch(Some(1e-2), 0.0).unwrap();
        let (b, fb) = c.launch(Some(1e-3), 1.0).unwrap();
        assert!(c.launch(Some(1e-4), 2.0).is_none());
        assert_eq!(c.dropped(), 1);
        assert!(c.report_success(b, 1, 3, 5.0));
        assert!(fa.load(Ordering::Acquire));
        assert!(!fb.load(Ordering::Acquire));
        assert!(!c.report_success(a, 2, 3, 5.0));
        assert_eq!(c.winner_id(), Some(b));
        assert_eq!(c.records()[a].status, WorkerStatus::Finished);
        assert!(c.launch(None, 6.0).is_none());
    }

    #[test]
    fn scripted_two_worker_race() {
        // 1e-2 launches at 0 and needs 100 ms; 1e-3 launches 20 ms later and needs 10 ms
        let s = Scenario {
            trace: (0..=10).map(|k| (k as f64 * 10.0, if k < 2 { 5e-3 } else { 5e-4 })).collect(),
            thresholds: vec![1e-2, 1e-3, 1e-4, 1e-5],
            eps_rel: 1e-6,
            capacity: 4,
            workers: vec![
                ScriptedWorker {
                    duration_ms: 100.0,
                    success: true,
                },
                ScriptedWorker {
                    duration_ms: 10.0,
                    success: true,
                },
            ],
            main: ScriptedWorker {
                duration_ms: 1.0,
                success: true,
            },
        };
        let out = simulate_race(&s);
        assert_eq!(out.winner.as_deref(), Some("1e-3"));
        assert_eq!(out.win_ms, Some(30.0));
        assert_eq!(out.pdhg_stop, StopReason::WonByCrossover);
        assert_eq!(out.workers[0].status, WorkerStatus::Cancelled);
        assert!(out.workers.iter().all(|w| w.status.is_terminal()));
    }

    #[test]
    fn event_log_round_trip() {
        let mut c: Coordinator<()> = Coordinator::new(1);
        let (a, _) = c.launch(Some(1e-2), 0.0).unwrap();
        c.report_success(a, (), 0, 3.5);
        let mut buf = Vec::new();
        write_events(c.events(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with(r#"{"event":"launch","threshold":"1e-2","t_ms":0.0"#), "{text}");
        assert_eq!(read_events(&text).unwrap(), c.events());
    }
}
