use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use ccpdhg::bench::{emit_report, run_benchmark, RaceRunner};
use ccpdhg::mps::read_mps_file;
use ccpdhg::pdhg::{IterationLog, PdhgConfig};
use ccpdhg::race::{run_race_observed, write_events, Mode, RaceConfig, RaceStatus};
use ccpdhg::simplex::write_basis;
use ccpdhg::standard::to_standard_form;
use ccpdhg::{Error, Lp, RaceOutcome, Tols};

const EXIT_SOLVED: u8 = 0;
const EXIT_TIME_LIMIT: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_INPUT: u8 = 4;

#[derive(Parser)]
#[command(name = "ccpdhg", version, about = "PDHG with concurrent crossover for linear programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one MPS model (plain or gzipped).
    Solve(SolveArgs),
    /// Run every model in a directory in both modes and report statistics.
    Bench(BenchArgs),
}

#[derive(Args, Clone)]
struct SolverArgs {
    #[arg(long, default_value = "concurrent")]
    mode: Mode,
    #[arg(long, default_value_t = 1e-6)]
    eps_rel: f64,
    #[arg(long, default_value_t = 1e-2)]
    eps_cross: f64,
    #[arg(long, default_value_t = 1e-6)]
    eps_abs: f64,
    #[arg(long, default_value_t = 0.1)]
    decrement: f64,
    /// Crossover worker pool size.
    #[arg(long, default_value_t = 4)]
    workers: usize,
    /// Total cores to use; defaults to all available.
    #[arg(long)]
    threads: Option<usize>,
    /// Wall-clock limit in seconds.
    #[arg(long, default_value_t = 3600.0)]
    time_limit: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// PDHG iteration cap.
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Print a PDHG progress line to stderr every N iterations.
    #[arg(long)]
    log_every: Option<usize>,
}

#[derive(Args)]
struct SolveArgs {
    model: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    write_basis: Option<PathBuf>,
    #[arg(long)]
    write_solution: Option<PathBuf>,
    /// Write the race event log as JSON lines.
    #[arg(long)]
    events: Option<PathBuf>,
    /// Print the result as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct BenchArgs {
    dir: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = 1.0)]
    shift: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

impl SolverArgs {
    fn config(&self) -> anyhow::Result<RaceConfig<f64>> {
        if !(self.time_limit > 0.0) || !self.time_limit.is_finite() {
            return Err(Error::InvalidConfig("time limit must be a positive number of seconds".into()).into());
        }
        let defaults = PdhgConfig::default();
        let cfg = RaceConfig {
            tolerances: Tols {
                eps_rel: self.eps_rel,
                eps_abs: self.eps_abs,
                eps_cross: self.eps_cross,
                decrement: self.decrement,
            },
            mode: self.mode,
            workers: self.workers,
            threads: self.threads,
            time_limit: Some(Duration::from_secs_f64(self.time_limit)),
            pdhg: PdhgConfig {
                seed: self.seed,
                log_every: self.log_every,
                max_iterations: self.max_iterations.unwrap_or(defaults.max_iterations),
                ..defaults
            },
            simplex: Default::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn exit_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Numerical { .. } | Error::SingularBasis { .. }) => EXIT_NUMERICAL,
        Some(Error::Unbounded { .. } | Error::Infeasible { .. }) => EXIT_NUMERICAL,
        _ => EXIT_INPUT,
    }
}

fn solution_text(lp: &Lp, out: &RaceOutcome) -> String {
    let mut s = String::new();
    let Some(sol) = &out.solution else {
        return s;
    };
    let _ = writeln!(s, "# objective {:.17e}", sol.objective);
    for (j, name) in lp.col_names.iter().enumerate() {
        let _ = writeln!(s, "{name} {:.17e} {}", sol.x[j], sol.column_status[j]);
    }
    s
}

fn summary_json(out: &RaceOutcome) -> serde_json::Value {
    serde_json::json!({
        "status": out.status,
        "mode": out.mode,
        "winner": out.winner,
        "objective": out.solution.as_ref().map(|s| s.objective),
        "absolute_violation": out.solution.as_ref().map(|s| s.absolute_violation),
        "pdhg_stop": out.pdhg_stop,
        "pdhg_iterations": out.pdhg_iterations,
        "crossover_pivots": out.crossover_pivots(),
        "thresholds": out.thresholds,
        "dropped_snapshots": out.dropped_snapshots,
        "wall_seconds": out.wall_seconds,
        "pdhg_report": out.pdhg_report,
        "failure": out.failure,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn solve(args: &SolveArgs) -> anyhow::Result<u8> {
    let config = args.solver.config()?;
    let lp = read_mps_file::<f64>(&args.model).with_context(|| format!("reading {}", args.model.display()))?;
    let mut print_log = |l: &IterationLog<f64>| eprintln!("{l}");
    let observer: Option<&mut dyn FnMut(&IterationLog<f64>)> =
        if args.solver.log_every.is_some() { Some(&mut print_log) } else { None };
    let out = run_race_observed(&lp, &config, observer)?;

    if let Some(path) = &args.events {
        let mut buf = Vec::new();
        write_events(&out.events, &mut buf)?;
        write_file(path, &buf)?;
    }
    if let Some(path) = &args.write_basis {
        if let Some(cx) = &out.crossover {
            let map = to_standard_form(&lp);
            write_file(path, write_basis(&map.lp, &cx.basis).as_bytes())?;
        }
    }
    if let Some(path) = &args.write_solution {
        if out.solution.is_some() {
            write_file(path, solution_text(&lp, &out).as_bytes())?;
        }
    }

    let mut stdout = std::io::stdout().lock();
    if args.json {
        serde_json::to_writer_pretty(&mut stdout, &summary_json(&out))?;
        writeln!(stdout)?;
    } else {
        writeln!(stdout, "model      {}", lp.name)?;
        writeln!(stdout, "status     {:?}", out.status)?;
        if let Some(sol) = &out.solution {
            writeln!(stdout, "objective  {:.12e}", sol.objective)?;
            writeln!(stdout, "violation  {:.3e}", sol.absolute_violation)?;
        }
        writeln!(stdout, "winner     {}", out.winner.as_deref().unwrap_or("-"))?;
        writeln!(stdout, "pdhg       {} iterations, {}", out.pdhg_iterations, out.pdhg_stop)?;
        writeln!(stdout, "pivots     {}", out.crossover_pivots())?;
        writeln!(stdout, "time       {:.3}s", out.wall_seconds)?;
        if let Some(f) = &out.failure {
            writeln!(stdout, "failure    {f}")?;
        }
    }
    Ok(match out.status {
        RaceStatus::Solved => EXIT_SOLVED,
        RaceStatus::TimeLimit => EXIT_TIME_LIMIT,
        RaceStatus::Failed => EXIT_NUMERICAL,
    })
}

fn bench(args: &BenchArgs) -> anyhow::Result<u8> {
    let config = args.solver.config()?;
    if !args.dir.is_dir() {
        return Err(Error::InvalidConfig(format!("{} is not a directory", args.dir.display())).into());
    }
    let thresholds = ccpdhg::race::schedule_thresholds(&config.tolerances)?;
    let mut runner = RaceRunner { config };
    let summary = run_benchmark(&args.dir, &mut runner, args.shift, args.solver.time_limit, &thresholds)?;
    if let Some(path) = &args.out {
        write_file(path, &emit_report(&summary, "json")?)?;
    }
    if let Some(path) = &args.csv {
        write_file(path, &emit_report(&summary, "csv")?)?;
    }
    let mut stdout = std::io::stdout().lock();
    for c in &summary.comparisons {
        writeln!(
            stdout,
            "{:<24} baseline {:>10.3}s  concurrent {:>10.3}s  {}",
            c.model, c.baseline_seconds, c.concurrent_seconds, c.verdict
        )?;
    }
    writeln!(
        stdout,
        "sgm baseline {:.3}s, concurrent {:.3}s, ratio {:.2}, wins {}, losses {}, ties {}",
        summary.sgm_baseline, summary.sgm_concurrent, summary.performance_ratio, summary.wins, summary.losses, summary.ties
    )?;
    let hist: Vec<String> = summary.histogram.iter().map(|(k, v)| format!("{k}:{v}")).collect();
    writeln!(stdout, "winners {}", hist.join(" "))?;
    Ok(EXIT_SOLVED)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_SOLVED };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => solve(a),
        Command::Bench(a) => bench(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_for(&e))
        }
    }
}
