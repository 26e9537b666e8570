use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_moment-obc"))
        .args(args)
        .current_dir(dir)
        .env_remove("MOMENT_OBC_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn version_json() {
    let d = TempDir::new().unwrap();
    let out = run(d.path(), &["--version", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn s_matrix_dump_is_13_by_13() {
    let d = TempDir::new().unwrap();
    let out = run(d.path(), &["assemble", "--theory", "G20", "--dump", "s-matrix"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 13);
    assert!(rows.iter().all(|r| r.len() == 13));
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            assert_eq!(*v, rows[j][i]);
        }
    }
}

#[test]
fn custom_theory_matches_g20() {
    let d = TempDir::new().unwrap();
    let named = run(d.path(), &["assemble", "--theory", "G20", "--dump", "a-y"]);
    let custom = run(
        d.path(),
        &[
            "assemble", "--theory", "custom", "--nd", "3", "--m", "2,2,1,1", "--dump", "a-y",
        ],
    );
    assert_eq!(named.status.code(), Some(0));
    assert_eq!(custom.status.code(), Some(0), "{}", stderr(&custom));
    assert_eq!(named.stdout, custom.stdout);
}

#[test]
fn usage_errors_exit_1() {
    let d = TempDir::new().unwrap();
    let cases: [&[&str]; 7] = [
        &["solve-channel", "--kn", "-1"],
        &["solve-channel", "--chi", "1.5"],
        &["assemble", "--theory", "G148"],
        &["assemble", "--theory", "G20", "--nd", "3"],
        &["assemble", "--theory", "custom", "--nd", "3", "--m", "2,,1"],
        &["check-stability", "--scan-chi", "0.1:1"],
        &["no-such-command"],
    ];
    for args in cases {
        let out = run(d.path(), args);
        assert_eq!(out.status.code(), Some(1), "{args:?}: {}", stderr(&out));
        assert!(!stderr(&out).trim().is_empty(), "{args:?} prints a message");
    }
    let out = run(d.path(), &["solve-channel", "--kn", "-1"]);
    assert!(stderr(&out).contains("Knudsen number must be positive"));
    let out = run(d.path(), &["assemble", "--theory", "G148"]);
    assert!(
        stderr(&out).contains("--nd") || stderr(&out).contains("radial-count"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn stability_verdicts() {
    let d = TempDir::new().unwrap();
    let mbc = run(
        d.path(),
        &["check-stability", "--theory", "G20", "--chi", "1", "--bc", "mbc"],
    );
    assert_eq!(mbc.status.code(), Some(0), "{}", stderr(&mbc));
    let v = json(&mbc);
    assert_eq!(v["verdict"], "unstable");
    assert_eq!(v["mbc_stable"], false);
    assert_eq!(v["obc_stable"], true);
    for key in ["theory", "chi", "min_eig_L", "cond_Aoe_hat", "kernel_residuals"] {
        assert!(!v[key].is_null(), "missing {key}");
    }
    let obc = run(d.path(), &["check-stability", "--theory", "G35", "--bc", "obc"]);
    assert_eq!(json(&obc)["verdict"], "stable");
}

#[test]
fn chi_scan_is_independent_of_jobs() {
    let d = TempDir::new().unwrap();
    let one = run(d.path(), &["check-stability", "--scan-chi", "0.2:1:5", "--jobs", "1"]);
    let four = run(d.path(), &["check-stability", "--scan-chi", "0.2:1:5", "--jobs", "4"]);
    let (a, b) = (json(&one), json(&four));
    assert_eq!(a["scan"], b["scan"]);
    assert_eq!(a["scan"].as_array().unwrap().len(), 5);
}

#[test]
fn channel_compare_round_trip() {
    let d = TempDir::new().unwrap();
    let out = run(
        d.path(),
        &[
            "solve-channel",
            "--theory",
            "G20",
            "--bc",
            "obc",
            "--grid",
            "64",
            "--out",
            "a.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let first = std::fs::read(d.path().join("a.csv")).unwrap();
    run(
        d.path(),
        &[
            "solve-channel",
            "--theory",
            "G20",
            "--bc",
            "obc",
            "--grid",
            "64",
            "--out",
            "b.csv",
        ],
    );
    assert_eq!(
        first,
        std::fs::read(d.path().join("b.csv")).unwrap(),
        "runs are byte-identical"
    );

    let out = run(d.path(), &["compare", "--run", "a.csv", "--reference", "b.csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["max_e_theta"], 0.0);
    assert_eq!(v["points"], 65);
    assert!(d.path().join("errors.csv").exists());
    let script = std::fs::read_to_string(d.path().join("compare.gp")).unwrap();
    assert!(script.contains("errors.csv"));

    let r = run(
        d.path(),
        &[
            "solve-channel",
            "--reference",
            "G20,G35",
            "--grid",
            "64",
            "--out",
            "ref.csv",
        ],
    );
    assert_eq!(r.status.code(), Some(0), "{}", stderr(&r));
    let v = json(&run(d.path(), &["compare", "--run", "a.csv", "--reference", "ref.csv"]));
    assert!(v["max_e_theta"].as_f64().unwrap() > 0.0);
}

#[test]
fn compare_rejects_different_grids() {
    let d = TempDir::new().unwrap();
    run(d.path(), &["solve-channel", "--grid", "32", "--out", "a.csv"]);
    run(d.path(), &["solve-channel", "--grid", "64", "--out", "b.csv"]);
    let out = run(d.path(), &["compare", "--run", "a.csv", "--reference", "b.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("different grids"));
}

#[test]
fn output_directory_from_environment() {
    let d = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_moment-obc"))
        .args(["solve-channel", "--grid", "32"])
        .current_dir(d.path())
        .env("MOMENT_OBC_OUT_DIR", d.path().join("runs"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(d.path().join("runs/channel-G20-obc.csv").exists());
}

#[test]
fn config_file_and_flag_precedence() {
    let d = TempDir::new().unwrap();
    std::fs::write(d.path().join("run.json"), r#"{"theory":"G35","chi":0.5}"#).unwrap();
    let v = json(&run(d.path(), &["--config", "run.json", "check-stability"]));
    assert_eq!(v["theory"], "G35");
    assert_eq!(v["chi"], 0.5);
    let v = json(&run(
        d.path(),
        &["--config", "run.json", "check-stability", "--theory", "G20"],
    ));
    assert_eq!(v["theory"], "G20");

    std::fs::write(d.path().join("bad.json"), r#"{"theory":"G20","speed":3}"#).unwrap();
    assert_eq!(
        run(d.path(), &["--config", "bad.json", "check-stability"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn energy_march_free_decay() {
    let d = TempDir::new().unwrap();
    let out = run(
        d.path(),
        &[
            "energy-march",
            "--theory",
            "G20",
            "--bc",
            "obc",
            "--cells",
            "32",
            "--crossing-times",
            "2",
            "--out",
            "e.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json(&out);
    assert!(v["max_relative_increase"].as_f64().unwrap() <= 1e-6);
    assert!(v["final_energy"].as_f64().unwrap() < v["initial_energy"].as_f64().unwrap());
    let trace = std::fs::read_to_string(d.path().join("e.csv")).unwrap();
    assert!(trace.starts_with("t,energy"));
}
