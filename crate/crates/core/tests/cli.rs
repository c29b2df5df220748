//! The `tmdp` binary end to end: outputs, exit codes and reproducibility.

use std::path::Path;
use std::process::{Command, Output};

use tmdp::harness::read_csv;

fn tmdp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tmdp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_to(path: &Path, extra: &[&str]) -> Output {
    let out = path.to_str().unwrap();
    let mut args = vec![
        "run",
        "--env",
        "ipd",
        "--agent-a",
        "fpq",
        "--agent-b",
        "q",
        "--steps",
        "500",
        "--seeds",
        "1,2",
        "--out",
        out,
    ];
    args.extend_from_slice(extra);
    tmdp(&args)
}

#[test]
fn run_writes_a_readable_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ipd.csv");
    let out = run_to(&path, &[]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let records = read_csv(&path).unwrap();
    assert_eq!(records.len(), 1000);
    assert_eq!(records[0].rewards.len(), 2);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("mean reward per player"), "{stdout}");
}

#[test]
fn same_seeds_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    assert!(run_to(&a, &[]).status.success());
    assert!(run_to(&b, &[]).status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let c = dir.path().join("c.csv");
    assert!(run_to(&c, &["--set", "seeds=3"]).status.success());
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn config_files_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    let csv = dir.path().join("out.csv");
    std::fs::write(
        &cfg,
        format!(
            "# small run\nenv = fof-stateless\nagent_a = level2\nagent_b = smoother\nsteps = 50\nseeds = 0..3\nout = {}\n",
            csv.display()
        ),
    )
    .unwrap();
    let out = tmdp(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "steps=20",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(read_csv(&csv).unwrap().len(), 60);
}

#[test]
fn snapshots_add_weight_columns() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("mix.csv");
    let jsonl = dir.path().join("mix.jsonl");
    let out = tmdp(&[
        "run",
        "--env",
        "fof-stateless",
        "--agent-a",
        "mixture:levels=1+2",
        "--agent-b",
        "smoother",
        "--steps",
        "30",
        "--out",
        csv.to_str().unwrap(),
        "--snapshots",
        "--set",
        &format!("snapshot_out={}", jsonl.display()),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("seed,step,player,reward,cum_reward,epsilon,w_model_0,w_model_1\n"));
    assert_eq!(std::fs::read_to_string(&jsonl).unwrap().lines().count(), 30);
}

#[test]
fn sweep_prints_one_line_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.cfg");
    std::fs::write(
        &cfg,
        "env = fof-grid\nagent_a = level2:alpha={a2},inner_alpha={a1},eps={eps}\nagent_b = smoother\nepisodes = 20\nsweep.a2,a1 = 0.1,0.05 | 0.5,0.25\nsweep.eps = 0.5 | 0.01\n",
    )
    .unwrap();
    let out = tmdp(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "a2\ta1\teps\tdm_mean\tdm_sd");
    assert_eq!(lines.len(), 5);
    assert!(lines[4].starts_with("0.5\t0.25\t0.01\t"));
}

#[test]
fn verify_reports_json_and_succeeds() {
    let out = tmdp(&["verify", "--suite", "contraction"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["contraction"].as_array().unwrap().len(), 3);
    assert!(report["oracle"].is_null());
}

#[test]
fn bad_input_exits_with_two() {
    let cases: [&[&str]; 5] = [
        &[
            "run",
            "--env",
            "chess",
            "--agent-a",
            "q",
            "--agent-b",
            "q",
            "--steps",
            "5",
        ],
        &[
            "run",
            "--env",
            "ipd",
            "--agent-a",
            "q:alpha=2",
            "--agent-b",
            "q",
            "--steps",
            "5",
        ],
        &[
            "run",
            "--env",
            "fof-grid",
            "--agent-a",
            "q",
            "--agent-b",
            "smoother",
            "--steps",
            "5",
        ],
        &[
            "run",
            "--env",
            "blotto",
            "--agent-a",
            "level2",
            "--agent-b",
            "smoother",
            "--steps",
            "5",
        ],
        &["run", "--config", "/nonexistent/exp.cfg"],
    ];
    for args in cases {
        let out = tmdp(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(
            String::from_utf8_lossy(&out.stderr).starts_with("error:"),
            "{args:?}"
        );
    }
}
