use std::fs;
use std::path::Path;
use std::process::Command;

use cimcs::harness::output::Quantiles;
use cimcs::harness::{cmd_gen, cmd_mri, cmd_oracle, cmd_run, cmd_sweep, Context, ExperimentConfig};
use cimcs::CimError;
use tempfile::tempdir;

fn ctx(text: &str, out: &Path) -> Context {
    Context::from_toml(text, out).unwrap()
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn header(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().next().unwrap().split(',').map(str::to_string).collect()
}

fn column(path: &Path, name: &str) -> Vec<String> {
    let idx = header(path).iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows(path).into_iter().map(|r| r[idx].clone()).collect()
}

const GEN: &str = r#"
kind = "support-only"
seed = 11
repetitions = 3
[instance]
n = 20
alpha = 0.6
sparseness = 0.3
"#;

#[test]
fn gen_writes_instances_and_a_reproducible_manifest() {
    let dir = tempdir().unwrap();
    let report = cmd_gen(&ctx(GEN, dir.path())).unwrap();
    for rep in 0..3 {
        let inst = cimcs::instance::load(&dir.path().join(format!("instance_{rep:04}.cimi"))).unwrap();
        assert_eq!((inst.n(), inst.m()), (20, 12));
    }
    assert!(report.files.iter().any(|f| f.ends_with("manifest.csv")));
    let manifest = dir.path().join("manifest.csv");
    assert_eq!(rows(&manifest).len(), 3);
    let first = column(&manifest, "sha256");

    let again = tempdir().unwrap();
    cmd_gen(&ctx(GEN, again.path())).unwrap();
    assert_eq!(column(&again.path().join("manifest.csv"), "sha256"), first);
    assert!(dir.path().join("metadata.toml").exists());
}

#[test]
fn gen_with_zero_repetitions_writes_only_the_manifest() {
    let dir = tempdir().unwrap();
    cmd_gen(&ctx(&GEN.replace("repetitions = 3", "repetitions = 0"), dir.path())).unwrap();
    assert!(rows(&dir.path().join("manifest.csv")).is_empty());
    assert!(!dir.path().join("instance_0000.cimi").exists());
}

#[test]
fn support_only_writes_one_row_per_repetition() {
    let dir = tempdir().unwrap();
    cmd_run(&ctx(GEN, dir.path())).unwrap();
    let path = dir.path().join("support_only.csv");
    assert_eq!(rows(&path).len(), 3);
    assert!(column(&path, "status").iter().all(|s| s == "ok"));
    for dc in column(&path, "direction_cosine") {
        let dc: f64 = dc.parse().unwrap();
        assert!((0.0..=1.0).contains(&dc));
    }
    assert!(dir.path().join("summary.csv").exists());
}

const ALTMIN: &str = r#"
kind = "altmin"
seed = 5
[instance]
n = 30
alpha = 0.7
sparseness = 0.2
nu = 0.01
[run]
model = "wigner-cac"
[sde]
steps = 200
"#;

#[test]
fn altmin_trace_has_one_row_per_iteration_and_is_deterministic() {
    let dir = tempdir().unwrap();
    cmd_run(&ctx(ALTMIN, dir.path())).unwrap();
    let trace = dir.path().join("trace_0000.csv");
    assert_eq!(rows(&trace).len(), 52);
    let eta: Vec<f64> = column(&trace, "eta").iter().map(|v| v.parse().unwrap()).collect();
    assert_eq!(eta[0], 0.6);
    assert!((eta[51] - 0.18).abs() < 1e-12);

    let again = tempdir().unwrap();
    cmd_run(&ctx(ALTMIN, again.path())).unwrap();
    assert_eq!(fs::read(&trace).unwrap(), fs::read(again.path().join("trace_0000.csv")).unwrap());
}

#[test]
fn invalid_configs_are_config_errors() {
    for text in [
        "kind = \"altmin\"\nbogus = 1\n",
        "kind = \"altmin\"\n[run]\nmodel = \"quantum-toaster\"\n",
        "kind = \"altmin\"\n[instance]\nalpha = 1.5\n",
        "kind = \"sweep\"\n[sweep]\nbase = \"altmin\"\n[sweep.axes]\neta_end = []\n",
        "kind = \"sweep\"\n[sweep]\nbase = \"altmin\"\n[sweep.axes]\nwidth = [1.0]\n",
        "kind = \"altmin\"\n[cdp]\nsolver = \"magic\"\n",
    ] {
        match ExperimentConfig::from_toml(text) {
            Err(CimError::Config(_)) => {}
            other => panic!("{text:?} gave {other:?}"),
        }
    }
}

const SWEEP: &str = r#"
kind = "sweep"
seed = 2
repetitions = 10
[instance]
n = 24
alpha = 0.7
sparseness = 0.25
[sde]
steps = 100
[sweep]
base = "support-only"
models = ["wigner-cac"]
[sweep.axes]
eta = [0.02, 0.05, 0.1, 0.2, 0.4]
"#;

#[test]
fn sweep_covers_the_grid_and_summaries_match_the_runs() {
    let dir = tempdir().unwrap();
    cmd_sweep(&ctx(SWEEP, dir.path())).unwrap();
    let runs = dir.path().join("runs.csv");
    let summary = dir.path().join("summary.csv");
    assert_eq!(rows(&runs).len(), 50);
    assert_eq!(rows(&summary).len(), 5);

    let points = column(&runs, "point");
    let values = column(&runs, "direction_cosine");
    let h = header(&summary);
    let col = |name: &str| h.iter().position(|c| c == name).unwrap();
    for row in rows(&summary) {
        let mine: Vec<f64> =
            points.iter().zip(&values).filter(|(p, _)| **p == row[col("point")]).map(|(_, v)| v.parse().unwrap()).collect();
        assert_eq!(mine.len(), 10);
        let q = Quantiles::of(&mine).unwrap();
        let got = |name: &str| row[col(name)].parse::<f64>().unwrap();
        for (name, want) in [("min", q.min), ("q25", q.q25), ("median", q.median), ("q75", q.q75), ("max", q.max)] {
            assert!((got(name) - want).abs() <= 1e-9, "{name}: {} vs {want}", got(name));
        }
        let mean = mine.iter().sum::<f64>() / 10.0;
        assert!((got("mean") - mean).abs() <= 1e-9);
    }
}

#[test]
fn small_mri_run_writes_every_reconstruction() {
    let dir = tempdir().unwrap();
    let text = "kind = \"mri\"\nseed = 1\n[mri]\nside = 16\niterations_ol = 6\niterations_cac = 6\n[sde]\nsteps = 100\n";
    cmd_mri(&ctx(text, dir.path())).unwrap();
    let table = dir.path().join("comparison.csv");
    assert_eq!(rows(&table).len(), 4);
    for m in column(&table, "method") {
        assert!(dir.path().join(format!("recon_{m}.pgm")).exists(), "{m}");
    }
    assert!(dir.path().join("original.pgm").exists() && dir.path().join("mask.txt").exists());
}

#[test]
fn oracle_compares_against_exhaustive_search() {
    let dir = tempdir().unwrap();
    let text = "kind = \"support-only\"\nrepetitions = 2\n[instance]\nn = 10\nalpha = 0.7\nsparseness = 0.3\n[sa]\nsweeps = 200\n[sde]\nsteps = 200\n";
    cmd_oracle(&ctx(text, dir.path())).unwrap();
    let summary = dir.path().join("summary.csv");
    let methods = column(&summary, "method");
    assert_eq!(methods, ["sa", "wigner-ol", "wigner-cac", "positive-p"]);
    assert!(column(&summary, "instances").iter().all(|n| n == "2"));
    assert_eq!(rows(&dir.path().join("oracle.csv")).len(), 2 * 4);
    // too large for enumeration
    let big = text.replace("n = 10", "n = 40");
    assert!(matches!(cmd_oracle(&ctx(&big, dir.path())), Err(CimError::Config(_))));
}

fn cli(args: &[&str], env: &[(&str, &str)]) -> std::process::Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cimcs"));
    cmd.args(args).env_remove("CIMCS_WORKERS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

#[test]
fn cli_exit_codes_and_worker_override() {
    let dir = tempdir().unwrap();
    let good = dir.path().join("good.toml");
    fs::write(&good, GEN).unwrap();
    let out = dir.path().join("out");
    let o = cli(&["gen", "--config", good.to_str().unwrap(), "--out", out.to_str().unwrap()], &[("CIMCS_WORKERS", "1")]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let md = fs::read_to_string(out.join("metadata.toml")).unwrap();
    assert!(md.contains("workers = 1"));
    assert!(md.contains("seed = 11"));

    let o = cli(&["gen", "--config", good.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "99", "--workers", "2"], &[]);
    assert_eq!(o.status.code(), Some(0));
    let md = fs::read_to_string(out.join("metadata.toml")).unwrap();
    assert!(md.contains("workers = 2") && md.contains("seed = 99"));

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "kind = \"altmin\"\nnonsense = true\n").unwrap();
    let o = cli(&["run", "--config", bad.to_str().unwrap(), "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
    let o = cli(&["run", "--config", dir.path().join("missing.toml").to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));

    // a runaway error variable makes every run fail
    let failing = dir.path().join("fail.toml");
    fs::write(&failing, "kind = \"support-only\"\n[instance]\nn = 20\n[sde]\nbeta = 1e300\nsteps = 50\n").unwrap();
    let o = cli(&["run", "--config", failing.to_str().unwrap(), "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
}
