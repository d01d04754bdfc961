//! End-to-end runs of the `sync` binary.

use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn sync(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sync"))
        .args(args)
        .current_dir(dir)
        .env("SYNC_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_str(&stdout(o)).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

const SMALL: &[&str] = &["--seed", "4", "--p", "4", "--sigma", "0.2"];

fn with_small<'a>(args: &[&'a str]) -> Vec<&'a str> {
    args.iter().chain(SMALL).copied().collect()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("cfg.json");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn selftest_passes_and_its_negative_control_fails() {
    let dir = tempfile::tempdir().unwrap();
    let ok = sync(dir.path(), &["selftest"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    assert!(stdout(&ok).contains("0 failed"));
    let bad = sync(dir.path(), &["selftest", "--tol-scale", "1e-30"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).contains("FAIL"));
}

#[test]
fn solve_reports_certified_point_and_writes_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"graph": {"kind": "circulant", "n": 40, "degree": 6}}"#);
    let out = sync(
        dir.path(),
        &with_small(&["solve", "--config", &cfg, "--point-out", "pt.txt"]),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out);
    assert_eq!(report["solve"]["status"], "soc_point");
    assert_eq!(report["certificate"]["verdict"], "certified_global");
    assert_eq!(report["instance"]["n"], 40);
    assert!(report["correlation"].as_f64().unwrap() > 0.9);
    assert!(report["bounds"]["c_p"].is_null(), "p = r + 2 leaves C_p undefined");

    let cert = sync(
        dir.path(),
        &with_small(&["certify", "--config", &cfg, "--point", "pt.txt"]),
    );
    assert_eq!(cert.status.code(), Some(0));
    let cert = json(&cert);
    assert_eq!(cert["certificate"], report["certificate"]);
}

#[test]
fn iteration_budget_maps_to_exit_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = sync(dir.path(), &with_small(&["solve", "--max-iters", "1"]));
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["solve"]["status"], "max_iters");
}

#[test]
fn generated_instance_can_be_solved_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let gen = sync(
        dir.path(),
        &with_small(&[
            "gen",
            "--out",
            "inst.txt",
            "--truth-out",
            "truth.txt",
            "--field",
            "complex",
            "--r",
            "1",
        ]),
    );
    assert_eq!(gen.status.code(), Some(0), "{}", String::from_utf8_lossy(&gen.stderr));
    assert!(std::fs::read_to_string(dir.path().join("inst.txt"))
        .unwrap()
        .starts_with("r 1 field complex"));

    let solved = sync(
        dir.path(),
        &["solve", "--instance", "inst.txt", "--p", "2", "--seed", "1"],
    );
    assert_eq!(
        solved.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&solved.stderr)
    );
    let report = json(&solved);
    assert_eq!(report["instance"]["field"], "complex");
    // Without a ground truth there is nothing to correlate against.
    assert!(report["correlation"].is_null());

    // The ground truth is a feasible point that the certificate can evaluate.
    let cert = sync(
        dir.path(),
        &["certify", "--instance", "inst.txt", "--point", "truth.txt"],
    );
    assert_eq!(cert.status.code(), Some(0), "{}", String::from_utf8_lossy(&cert.stderr));
    assert_eq!(json(&cert)["p"], 1);
}

#[test]
fn sweep_is_deterministic_and_writes_charts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"graph": {"kind": "circulant", "n": 30, "degree": 4}, "p": [2, 4], "sigma": [0.1, 0.8], "trials": 2, "seed": 5}"#,
    );
    let a = sync(
        dir.path(),
        &["sweep", "--config", &cfg, "--out", "a.csv", "--svg-dir", "svg"],
    );
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let b = sync(dir.path(), &["sweep", "--config", &cfg, "--out", "b.csv"]);
    assert_eq!(b.status.code(), Some(0));

    let strip = |name: &str| -> Vec<String> {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        assert!(text.ends_with('\n') && !text.contains('\r'));
        text.lines()
            .map(|l| {
                let mut f: Vec<&str> = l.split(',').collect();
                f.remove(5);
                f.join(",")
            })
            .collect()
    };
    let (a, b) = (strip("a.csv"), strip("b.csv"));
    assert_eq!(a, b);
    assert_eq!(
        a[0],
        "sigma,p,corr_mean,rank_r_frac,rank_def_frac,iters_mean,certified_frac"
    );
    assert_eq!(a.len(), 5);
    for chart in [
        "corr_mean.svg",
        "rank_r_frac.svg",
        "rank_def_frac.svg",
        "time_mean_s.svg",
    ] {
        let svg = std::fs::read_to_string(dir.path().join("svg").join(chart)).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }
}

#[test]
fn flow_summarizes_trials_and_exports_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"graph": {"kind": "cycle", "n": 10}, "r": 2, "p": [4], "trials": 3}"#,
    );
    let out = sync(dir.path(), &["flow", "--config", &cfg, "--trajectory-dir", "traj"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("trial,termination,final_sync_error,time_to_sync,steps")
    );
    assert_eq!(lines.filter(|l| l.contains(",synchronized,")).count(), 3);
    let traj = std::fs::read_to_string(dir.path().join("traj/trajectory_2.csv")).unwrap();
    assert!(traj.starts_with("t,sync_error,energy\n"));

    let twisted = write_config(
        dir.path(),
        r#"{"graph": {"kind": "cycle", "n": 20}, "r": 1, "p": [2], "init": "twisted", "twist": 1}"#,
    );
    let out = sync(dir.path(), &["flow", "--config", &twisted]);
    assert!(stdout(&out).contains("equilibrium_nonsync"), "{}", stdout(&out));
}

#[test]
fn pose_graph_topology_drives_a_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let gen = sync(
        dir.path(),
        &[
            "gen", "--format", "g2o_2d", "--out", "pose.g2o", "--sigma", "0", "--seed", "3",
        ],
    );
    assert_eq!(gen.status.code(), Some(0), "{}", String::from_utf8_lossy(&gen.stderr));
    let cfg = write_config(
        dir.path(),
        r#"{"instance_file": "pose.g2o", "instance_format": "g2o_2d", "p": [4], "sigma": [0.1], "trials": 2}"#,
    );
    let out = sync(dir.path(), &["sweep", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout(&out).lines().count(), 2);
}

#[test]
fn bad_inputs_exit_with_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"bogus_field": 1}"#);
    let out = sync(dir.path(), &["solve", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus_field"));

    let out = sync(dir.path(), &["solve", "--p", "1"]);
    assert_eq!(out.status.code(), Some(1));

    let out = sync(dir.path(), &["solve", "--instance", "missing.txt"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.txt"));
}
