use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn omt(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_omt"))
        .current_dir(dir)
        .args(args)
        .env_remove("OMT_K")
        .env_remove("OMT_SEED")
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = omt(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(stdout: &str) -> serde_json::Value {
    serde_json::from_str(stdout).unwrap()
}

/// A small interleaved stream written into a fresh directory.
fn fixture(steps: &str) -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["synth", "--seed", "7", "--steps", steps, "--interleave", "--out", "s.csv"]);
    let p = dir.path().join("s.csv");
    (dir, p)
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn synth_writes_anchor_plus_interleaved_frames() {
    let (dir, path) = fixture("1000");
    let rows = read_csv(&path);
    assert_eq!(rows.len(), 2001);
    assert_eq!(rows[0][0], "-1");
    ok(dir.path(), &["synth", "--seed", "7", "--steps", "1000", "--interleave", "--out", "again.csv"]);
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(dir.path().join("again.csv")).unwrap());
}

#[test]
fn synth_jsonl_round_trips_through_run() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["synth", "--steps", "100", "--interleave", "--out", "s.jsonl"]);
    ok(dir.path(), &["synth", "--steps", "100", "--interleave", "--out", "s.csv"]);
    let a = json(&ok(dir.path(), &["run", "--stream", "s.jsonl", "--out", "a.csv"]));
    let b = json(&ok(dir.path(), &["run", "--stream", "s.csv", "--out", "b.csv"]));
    assert_eq!(a["tpr"], b["tpr"]);
    assert_eq!(
        std::fs::read(dir.path().join("a.csv")).unwrap(),
        std::fs::read(dir.path().join("b.csv")).unwrap()
    );
}

#[test]
fn usage_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(omt(dir.path(), &["synth", "--seed", "7"]).status.code(), Some(2));
    assert_eq!(omt(dir.path(), &["frobnicate"]).status.code(), Some(2));
    let (dir, _) = fixture("50");
    let out = omt(dir.path(), &["sweep", "--stream", "s.csv", "--axis", "epsilon", "--out", "e.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("e.csv").exists());
    let out = omt(dir.path(), &["run", "--stream", "s.csv", "--epsilon", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn data_and_io_errors_have_their_own_codes() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.csv"), "t,label,x0\n-1,1,0.1\n0,1,abc\n").unwrap();
    let out = omt(dir.path(), &["run", "--stream", "bad.csv"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
    let out = omt(dir.path(), &["run", "--stream", "missing.csv"]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn run_with_everything_outside_the_radius_fires_nothing() {
    let (dir, _) = fixture("200");
    let s = json(&ok(dir.path(), &["run", "--stream", "s.csv", "--radius", "1e-9"]));
    assert_eq!(s["tpr"], 0.0);
    assert_eq!(s["fpr"], 0.0);
    assert_eq!(s["cover_size"], 0);
}

#[test]
fn run_is_byte_identical_across_invocations() {
    let (dir, _) = fixture("300");
    let args = |p: &'static str, c: &'static str| {
        ["run", "--stream", "s.csv", "--out", p, "--cover-dump", c, "--k", "40"]
    };
    ok(dir.path(), &args("p1.csv", "c1.csv"));
    ok(dir.path(), &args("p2.csv", "c2.csv"));
    let read = |f: &str| std::fs::read(dir.path().join(f)).unwrap();
    assert_eq!(read("p1.csv"), read("p2.csv"));
    assert_eq!(read("c1.csv"), read("c2.csv"));
    let rows = read_csv(&dir.path().join("p1.csv"));
    assert_eq!(rows.len(), 600);
    assert!(rows.iter().all(|r| r.len() == 6));
}

#[test]
fn single_representative_budget_runs_to_completion() {
    let (dir, _) = fixture("300");
    let s = json(&ok(
        dir.path(),
        &["run", "--stream", "s.csv", "--k", "1", "--diagnostics", "d.jsonl"],
    ));
    assert!(s["cover_size"].as_u64().unwrap() <= 1);
    let text = std::fs::read_to_string(dir.path().join("d.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 600);
    for line in text.lines() {
        assert!(json(line)["cover_size"].as_u64().unwrap() <= 1);
    }
}

#[test]
fn snapshot_resume_matches_a_single_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // the anchor has the largest norm, so both halves share the full
    // stream's scale
    let header = "t,label,x0,x1";
    let rows: Vec<String> = (0..120)
        .map(|i| {
            let t = i as f64 * 0.37;
            format!("{i},{},{},{}", i % 2, 0.3 + 0.2 * t.sin(), 0.2 * (1.3 * t).cos())
        })
        .collect();
    let file = |rows: &[String]| format!("{header}\n-1,1,1,0\n{}\n", rows.join("\n"));
    std::fs::write(d.join("full.csv"), file(&rows)).unwrap();
    std::fs::write(d.join("a.csv"), file(&rows[..50])).unwrap();
    std::fs::write(d.join("b.csv"), file(&rows[50..])).unwrap();

    let flags = ["--radius", "2", "--k", "5", "--r0", "0.01"];
    let run = |extra: &[&str]| json(&ok(d, &[&["run"][..], &flags, extra].concat()));
    let full = run(&["--stream", "full.csv", "--cover-dump", "full_cover.csv", "--out", "full.csv.pred"]);
    run(&["--stream", "a.csv", "--snapshot-out", "snap.txt"]);
    let resumed = run(&[
        "--stream", "b.csv", "--resume", "snap.txt", "--cover-dump", "resumed_cover.csv", "--out", "b.csv.pred",
    ]);
    assert!(full["doublings"].as_u64().unwrap() > 0);
    assert_eq!(full["cover_radius"], resumed["cover_radius"]);
    assert_eq!(
        std::fs::read(d.join("full_cover.csv")).unwrap(),
        std::fs::read(d.join("resumed_cover.csv")).unwrap()
    );
    let tail: Vec<String> = std::fs::read_to_string(d.join("full.csv.pred"))
        .unwrap()
        .lines()
        .skip(51)
        .map(String::from)
        .collect();
    let resumed_rows: Vec<String> = std::fs::read_to_string(d.join("b.csv.pred"))
        .unwrap()
        .lines()
        .skip(1)
        .map(String::from)
        .collect();
    assert_eq!(tail, resumed_rows);
}

#[test]
fn epsilon_sweep_writes_sorted_roc() {
    let (dir, _) = fixture("200");
    ok(
        dir.path(),
        &["sweep", "--stream", "s.csv", "--axis", "epsilon", "--grid", "0,0.25,0.5,0.75,1", "--out", "e.csv"],
    );
    let rows = read_csv(&dir.path().join("e.csv"));
    assert!(rows.len() >= 5);
    let pts: Vec<(f64, f64, f64)> = rows
        .iter()
        .map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap(), r[2].parse().unwrap()))
        .collect();
    for g in [0.0, 0.25, 0.5, 0.75, 1.0] {
        assert!(pts.iter().any(|p| p.0 == g));
    }
    assert!(pts.windows(2).all(|w| w[0].1 <= w[1].1));
}

fn table(path: &Path) -> Vec<Vec<f64>> {
    read_csv(path)
        .iter()
        .map(|r| r.iter().map(|v| v.parse().unwrap_or(f64::NAN)).collect())
        .collect()
}

#[test]
fn k_sweep_cover_radius_does_not_grow_with_budget() {
    let (dir, _) = fixture("600");
    ok(
        dir.path(),
        &["sweep", "--stream", "s.csv", "--axis", "k", "--grid", "10,20,75,150,300", "--out", "k.csv", "--roc-out", "kroc.csv"],
    );
    let rows = table(&dir.path().join("k.csv"));
    assert_eq!(rows.len(), 5);
    // columns: k,tpr,fpr,auc,tpr_at_fpr_0.01,max_tpr,max_fpr,cover_size,r,mean_step_micros
    assert!(rows.windows(2).all(|w| w[1][8] <= w[0][8]));
    assert!(rows.iter().all(|r| r[7] <= r[0]));
    assert!(rows[0][8] > rows[4][8]);
    let roc = read_csv(&dir.path().join("kroc.csv"));
    assert!(roc.iter().any(|r| r[0] == "300"));
}

#[test]
fn radius_sweep_max_tpr_grows_with_radius() {
    let (dir, _) = fixture("300");
    ok(
        dir.path(),
        &["--jobs", "1", "sweep", "--stream", "s.csv", "--axis", "radius", "--grid", "0.05,0.1,0.25,0.3,0.35", "--out", "r.csv"],
    );
    let rows = table(&dir.path().join("r.csv"));
    assert!(rows.windows(2).all(|w| w[1][5] >= w[0][5] && w[1][6] >= w[0][6]));
}

#[test]
fn roc_nn_accepts_extra_anchors() {
    let (dir, path) = fixture("200");
    let rows = read_csv(&path);
    let extra: String = rows[1..4].iter().map(|r| r[2..].join(",") + "\n").collect();
    std::fs::write(dir.path().join("anchors.csv"), extra).unwrap();
    let one = json(&ok(dir.path(), &["roc-nn", "--stream", "s.csv", "--out", "nn1.csv"]));
    let four = json(&ok(
        dir.path(),
        &["roc-nn", "--stream", "s.csv", "--anchors", "anchors.csv", "--out", "nn4.csv"],
    ));
    assert_eq!(one["anchors"], 1);
    assert_eq!(four["anchors"], 4);
    let curve = read_csv(&dir.path().join("nn1.csv"));
    assert_eq!(curve.last().unwrap(), &["2", "1", "1"]);
}

#[test]
fn config_file_environment_and_flags_layer_in_order() {
    let (dir, _) = fixture("100");
    let d = dir.path();
    std::fs::write(d.join("exp.cfg"), "# experiment\nk = 1\nepsilon=0.25\n").unwrap();
    let from_file = json(&ok(d, &["run", "--stream", "s.csv", "--config", "exp.cfg"]));
    assert_eq!(from_file["epsilon"], 0.25);
    assert!(from_file["cover_size"].as_u64().unwrap() <= 1);

    let with_flag = json(&ok(d, &["run", "--config", "exp.cfg", "--stream", "s.csv", "--epsilon", "0.75"]));
    assert_eq!(with_flag["epsilon"], 0.75);

    let out = Command::new(env!("CARGO_BIN_EXE_omt"))
        .current_dir(d)
        .args(["run", "--stream", "s.csv", "--config", "exp.cfg"])
        .env("OMT_EPSILON", "0.6")
        .env_remove("OMT_K")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(json(&String::from_utf8(out.stdout).unwrap())["epsilon"], 0.6);

    std::fs::write(d.join("typo.cfg"), "epsilom=0.3\n").unwrap();
    let out = omt(d, &["run", "--stream", "s.csv", "--config", "typo.cfg"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("epsilom"));
}

#[test]
fn bench_reports_timing_summary_for_long_streams() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["synth", "--steps", "4000", "--dim", "8", "--out", "t.csv"]);
    let s = json(&ok(dir.path(), &["bench", "--stream", "t.csv", "--k", "20", "--out", "t.jsonl"]));
    assert_eq!(s["steps"], 4000);
    assert!(s["timing"]["ratio"].as_f64().unwrap() > 0.0);
    let text = std::fs::read_to_string(dir.path().join("t.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 4000);
}
