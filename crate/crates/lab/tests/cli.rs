//! End-to-end runs of the `bdlab` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bdlab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bdlab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn simulate_shape_and_sidecar() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("bm");
    let o = bdlab(&["simulate", "--model.kind", "bm", "--grid.level", "10", "--levels", "4..10", "--paths", "150"], &out);
    assert_eq!(o.status.code(), Some(0));
    let csv = read(&out, "ensemble.csv");
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.len(), 1 + 1025);
    assert_eq!(header[1025], "t_1024");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 150);
    assert!(rows.iter().all(|r| r.split(',').count() == 1026));
    let meta: serde_json::Value = serde_json::from_str(&read(&out, "ensemble.json")).unwrap();
    assert_eq!(meta["grid_level"], 10);
    assert_eq!(meta["n_paths"], 150);
    assert_eq!(meta["model"]["kind"], "brownian_motion");
}

#[test]
fn deterministic_rows_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["simulate", "--model.kind", "deterministic", "--model.knots", "0:0,0.5:1,1:0.5", "--levels", "2..4", "--paths", "5"];
    assert_eq!(bdlab(&args, tmp.path()).status.code(), Some(0));
    let csv = read(tmp.path(), "ensemble.csv");
    let values: Vec<&str> = csv.lines().skip(1).map(|l| l.split_once(',').unwrap().1).collect();
    assert!(values.windows(2).all(|w| w[0] == w[1]));
    assert!(values[0].starts_with("0,0.125,0.25,"));
}

#[test]
fn same_seed_same_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["probe", "--model.kind", "fbm", "--levels", "3..7", "--paths", "200", "--seed", "11"];
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    assert_eq!(bdlab(&args, &a).status.code(), Some(0));
    assert_eq!(bdlab(&args, &b).status.code(), Some(0));
    assert_eq!(read(&a, "probe.csv"), read(&b, "probe.csv"));
    let mut other = args.to_vec();
    *other.last_mut().unwrap() = "12";
    assert_eq!(bdlab(&other, &c).status.code(), Some(0));
    assert_ne!(read(&a, "probe.csv"), read(&c, "probe.csv"));
}

#[test]
fn squared_brownian_mean_variation_is_one() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bdlab(&["mean-variation", "--model.kind", "squared_brownian", "--levels", "4..8", "--paths", "300"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let csv = read(tmp.path(), "mean_variation.csv");
    assert_eq!(csv.lines().next().unwrap(), "level,estimate,stderr,oracle,stopped");
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert!((f[1].parse::<f64>().unwrap() - 1.0).abs() < 1e-12, "{line}");
    }
}

#[test]
fn verdicts_need_a_hundred_paths() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bdlab(&["probe", "--model.kind", "bm", "--levels", "3..6", "--paths", "50"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("paths"));
}

#[test]
fn unbounded_model_refused_by_theorem1() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bdlab(&["theorem1", "--model.kind", "bm", "--levels", "4..6", "--paths", "200"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(!tmp.path().join("theorem1.csv").exists());
}

#[test]
fn theorem1_passes_on_truncated_fbm() {
    let tmp = tempfile::tempdir().unwrap();
    let args = [
        "theorem1", "--model.kind", "truncated", "--model.inner", "fbm", "--model.hurst", "0.75", "--model.bound", "1",
        "--levels", "4..7", "--paths", "400", "--format", "json",
    ];
    let o = bdlab(&args, tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&read(tmp.path(), "theorem1.json")).unwrap();
    assert_eq!(report["pass"], true);
    assert!(!tmp.path().join("failures.json").exists());
}

#[test]
fn unknown_keys_are_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = tmp.path().join("x.conf");
    fs::write(&conf, "model.kind = bm\nmodel.colour = red\n").unwrap();
    let o = bdlab(&["simulate", "--config", conf.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}
