//! End-to-end tests of the binary: catalog, run/report round trips,
//! determinism, and exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_shrinker-lab"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .args(args)
        .env("SHRINKER_LAB_OUT", dir)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, contents: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn tempdir(tag: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("shrinker-lab-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn list_prints_eight_experiments() {
    let out = bin().arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 8);
    for name in [
        "shrinker-verify",
        "spectrum",
        "flow-run",
        "scales-trace",
        "model-problem",
        "extension",
        "loja-fit",
        "final-loja",
    ] {
        assert!(text.contains(name), "catalog lacks {name}");
    }
    let out = bin().args(["list", "--json"]).output().unwrap();
    let entries: Vec<serde_json::Value> =
        serde_json::from_slice(&out.stdout).expect("catalog is JSON");
    assert_eq!(entries.len(), 8);
}

#[test]
fn spectrum_run_matches_hermite_oracle() {
    let dir = tempdir("spectrum");
    let cfg = write_config(&dir, "spec.conf", "experiment = spectrum\nbase.kind = line\n");
    let out = run_in(&dir, &["run", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("spectrum/spectrum.json")).unwrap())
            .unwrap();
    let eigs: Vec<f64> = json["eigenvalues"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().parse().unwrap())
        .collect();
    // Hermite ladder ½ − k/2 to discretization accuracy.
    for (got, want) in eigs.iter().zip([0.5, 0.0, -0.5, -1.0, -1.5]) {
        assert!((got - want).abs() < 5e-4, "λ = {got} vs {want}");
    }
    // Manifest carries the config echo and its hash.
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("spectrum/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["experiment"], "spectrum");
    assert_eq!(manifest["config"]["base.kind"], "line");
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn flow_run_is_deterministic_and_f_monotone() {
    let dir = tempdir("flow");
    let cfg = write_config(
        &dir,
        "flow.conf",
        "experiment = flow-run\nbase.kind = line\ninit.c2 = 5e-4\n\
         flow.dtau = 0.02\nflow.tau_end = 0.2\nflow.scale_stride = 50\n",
    );
    let out = run_in(&dir, &["run", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let first = std::fs::read(dir.join("flow-run/trace.csv")).unwrap();
    let fs: Vec<f64> = String::from_utf8(first.clone())
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(fs.windows(2).all(|w| w[1] <= w[0] + 1e-14), "F not monotone");
    let out = run_in(&dir, &["run", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let second = std::fs::read(dir.join("flow-run/trace.csv")).unwrap();
    assert_eq!(first, second, "reruns are not byte-identical");
    // Report derives the log-gap pairs.
    let out = run_in(&dir, &["report", dir.join("flow-run").to_str().unwrap()]);
    assert!(out.status.success());
    let pairs = std::fs::read_to_string(dir.join("flow-run/gap_loglog.csv")).unwrap();
    assert!(pairs.starts_with("tau,log_gap\n"));
    assert!(pairs.lines().count() > 5);
}

#[test]
fn usage_errors_exit_2_schema_errors_exit_1() {
    let dir = tempdir("errors");
    let bad = write_config(&dir, "bad.conf", "experiment = frobnicate\n");
    let out = run_in(&dir, &["run", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let typo = write_config(&dir, "typo.conf", "experiment = spectrum\nspectrum.cout = 5\n");
    let out = run_in(&dir, &["run", typo.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("spectrum.cout"));
    let theta = write_config(
        &dir,
        "theta.conf",
        "experiment = final-loja\nloja.theta = 0.7\n",
    );
    let out = run_in(&dir, &["run", theta.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    // Empty bundle: schema error, module exit code.
    let empty = dir.join("empty");
    std::fs::create_dir_all(&empty).unwrap();
    let out = run_in(&dir, &["report", empty.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("schema error"));
}
