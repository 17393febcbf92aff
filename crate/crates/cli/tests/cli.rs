use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ccpdhg::mps::read_mps_file;
use ccpdhg::race::{read_events, EventKind};
use ccpdhg::simplex::read_basis;
use ccpdhg::standard::to_standard_form;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/lp").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ccpdhg")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let (sol, bas, ev) = (dir.path().join("afiro.sol"), dir.path().join("afiro.bas"), dir.path().join("afiro.jsonl"));
    let model = data("afiro.mps");
    let out = run(&[
        "solve",
        path(&model),
        "--json",
        "--write-solution",
        path(&sol),
        "--write-basis",
        path(&bas),
        "--events",
        path(&ev),
        "--seed",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["status"], "solved");
    let obj = json["objective"].as_f64().unwrap();
    assert!((obj + 464.75314285714285).abs() < 1e-6);
    assert!(json["pdhg_report"]["maxresid_rel"].is_number());

    let text = std::fs::read_to_string(&sol).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("# objective "));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split_whitespace().collect()).collect();
    let lp = read_mps_file::<f64>(&model).unwrap();
    assert_eq!(rows.len(), lp.ncols());
    assert!(rows.iter().all(|r| r.len() == 3 && r[1].parse::<f64>().is_ok()));
    assert_eq!(rows[0][0], lp.col_names[0]);

    let std_lp = to_standard_form(&lp).lp;
    let basis = read_basis(&std_lp, &std::fs::read_to_string(&bas).unwrap()).unwrap();
    assert_eq!(basis.basic.len(), std_lp.nrows());

    let events = read_events(&std::fs::read_to_string(&ev).unwrap()).unwrap();
    assert!(events.iter().any(|e| e.event == EventKind::Win));
}

#[test]
fn baseline_mode_and_progress_log() {
    let out = run(&["solve", path(&data("sctest.mps")), "--mode", "baseline", "--log-every", "64"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("winner     main"), "{stdout}");
    let stderr = String::from_utf8(out.stderr).unwrap();
    let line = stderr.lines().next().expect("no progress line");
    let fields: Vec<&str> = line.split('\t').collect();
    assert_eq!(fields.len(), 5, "{line}");
    assert!(fields.iter().all(|f| f.parse::<f64>().is_ok()));
}

#[test]
fn exit_codes() {
    // time limit
    let out = run(&["solve", path(&data("stair.mps")), "--time-limit", "0.02"]);
    assert_eq!(out.status.code(), Some(2));

    // input errors
    assert_eq!(run(&["solve", "/definitely/missing.mps"]).status.code(), Some(4));
    assert_eq!(run(&["solve", path(&data("afiro.mps")), "--eps-rel", "0.1", "--eps-cross", "0.01"]).status.code(), Some(4));
    assert_eq!(run(&["solve", path(&data("afiro.mps")), "--mode", "fastest"]).status.code(), Some(4));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.mps");
    std::fs::write(&bad, "NAME bad\nROWS\n N obj\nCOLUMNS\n x obj one\nENDATA\n").unwrap();
    assert_eq!(run(&["solve", path(&bad)]).status.code(), Some(4));

    // no verified basic solution: an infeasible model
    let inf = dir.path().join("infeasible.mps");
    std::fs::write(
        &inf,
        "NAME infeasible\nROWS\n N obj\n G r1\n L r2\nCOLUMNS\n x obj 1 r1 1\n x r2 1\nRHS\n rhs r1 2 r2 1\nENDATA\n",
    )
    .unwrap();
    let out = run(&["solve", path(&inf), "--max-iterations", "2000"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn bench_reports() {
    let dir = tempfile::tempdir().unwrap();
    let models = dir.path().join("models");
    std::fs::create_dir(&models).unwrap();
    for name in ["afiro.mps", "blending.mps", "sctest.mps"] {
        std::fs::copy(data(name), models.join(name)).unwrap();
    }
    std::fs::write(models.join("notes.txt"), "not a model").unwrap();
    let (json, csv) = (dir.path().join("r.json"), dir.path().join("r.csv"));
    let out = run(&["bench", path(&models), "--out", path(&json), "--csv", path(&csv), "--shift", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(summary["records"].as_array().unwrap().len(), 6);
    let (w, l, t) = (summary["wins"].as_u64().unwrap(), summary["losses"].as_u64().unwrap(), summary["ties"].as_u64().unwrap());
    assert_eq!(w + l + t, 3);
    assert!(summary["performance_ratio"].as_f64().unwrap() > 0.0);
    let hist = summary["histogram"].as_object().unwrap();
    assert!(hist.contains_key("main") && hist.contains_key("1e-2"));
    assert_eq!(hist.values().map(|v| v.as_u64().unwrap()).sum::<u64>(), 3);

    let csv = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("model,"));

    assert_eq!(run(&["bench", "/definitely/missing"]).status.code(), Some(4));
}
