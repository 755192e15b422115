use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use nsfg_harness::output::{decode_snapshot, encode_snapshot, read_csv, CSV_NAME};
use nsfg_harness::RunManifest;

const BASE: &str = r#"
[grid]
dim = 1
points = 32

[run]
n_modes = 4
dt = 1e-3
t_end = 0.05
cadence = 10

[params]
eps = 1e-3
kappa_q = 1e-3
r0 = 0.1
r1 = 0.1

[initial]
preset = "PRESET"
"#;

fn nsfg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nsfg")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, preset: &str, extra: &str) -> String {
    let path = dir.join(format!("{preset}.toml"));
    fs::write(&path, BASE.replace("PRESET", preset) + extra).unwrap();
    path.to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn equilibrium_run_has_machine_zero_residuals() {
    let tmp = tempfile::tempdir().unwrap();
    // with ε > 0 the sink εθ^{α+1} cools the fluid, so this is only steady at ε = 0
    let cfg = write_config(tmp.path(), "equilibrium", "");
    fs::write(&cfg, fs::read_to_string(&cfg).unwrap().replace("eps = 1e-3", "eps = 0")).unwrap();
    let out = tmp.path().join("eq");
    let o = nsfg(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));

    let rows = read_csv(&out.join(CSV_NAME)).unwrap();
    assert_eq!(rows.len(), 6);
    for r in &rows {
        assert!(r.res_energy.abs() <= 1e-10 && r.res_bd.abs() <= 1e-10 && r.res_thermal.abs() <= 1e-10, "{r:?}");
        assert_eq!(r.e_kinetic, 0.0);
    }
    let m = RunManifest::load(&out).unwrap();
    assert_eq!(m.status, "completed");
    assert!(m.verify(&out).is_empty());
    assert!(m.files.iter().any(|f| f.name == "final.snap"));

    let rep = nsfg(&["report", out.to_str().unwrap()]);
    assert!(rep.status.success());
    assert!(String::from_utf8_lossy(&rep.stdout).contains("hashes ok"));
}

#[test]
fn tampered_artifact_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "density-bump", "");
    let out = tmp.path().join("run");
    let o = nsfg(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(RunManifest::load(&out).unwrap().verify(&out).is_empty());
    fs::write(out.join(CSV_NAME), "t\n0\n").unwrap();
    let m = RunManifest::load(&out).unwrap();
    assert_eq!(m.verify(&out), vec![CSV_NAME.to_string()]);
}

#[test]
fn stability_violation_names_the_term_and_dumps_state() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "density-bump", "");
    let text = fs::read_to_string(&cfg).unwrap().replace("n_modes = 4", "n_modes = 8");
    fs::write(&cfg, text).unwrap();
    let out = tmp.path().join("bad");
    let o = nsfg(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("hyper") && err.contains("stability bound"), "{err}");
    let m = RunManifest::load(&out).unwrap();
    assert_eq!(m.status, "failed");
    let snap = decode_snapshot(&fs::read(out.join("failure.snap")).unwrap()).unwrap();
    assert_eq!(snap.t, 0.0);
}

#[test]
fn usage_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "equilibrium", "");
    assert_eq!(nsfg(&["check", "nope"]).status.code(), Some(2));
    assert_eq!(nsfg(&["sweep", &cfg, "--axis", "eps", "--values", ""]).status.code(), Some(2));
    assert_eq!(nsfg(&["sweep", &cfg, "--axis", "zeta", "--values", "1"]).status.code(), Some(2));

    let typo = write_config(tmp.path(), "shear", "\n[diagnostics]\nn_cuttoff = 2\n");
    let o = nsfg(&["run", &typo]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("n_cuttoff"), "{}", stderr(&o));
}

#[test]
fn sweep_records_failures_and_continues() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "density-bump", "");
    let out = tmp.path().join("sw");
    // dt = 1e-1 breaks the stability bound; the others complete
    let o = nsfg(&["sweep", &cfg, "--axis", "dt", "--values", "1e-3,1e-1,5e-4", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let statuses: Vec<&str> = summary.lines().skip(1).map(|l| l.split(',').nth(2).unwrap()).collect();
    assert_eq!(statuses, ["completed", "failed", "completed"]);
    assert!(out.join("fits.csv").exists());
    let rep = nsfg(&["report", out.to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&rep.stdout).contains("log-log slopes"));
}

#[test]
fn check_suite_prints_table() {
    let o = nsfg(&["check", "mass-op"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.starts_with("property\tsamples\tworst_margin\tresult"));
    assert!(text.lines().skip(1).all(|l| l.ends_with("pass")));
}

#[test]
fn snapshot_round_trip_is_exact() {
    let cfg = nsfg_harness::check::density_bump_config(1e-4, 1e-3);
    let o = nsfg_harness::simulate(&cfg).unwrap();
    let s = o.history.last().unwrap();
    let back = decode_snapshot(&encode_snapshot(s)).unwrap();
    assert_eq!(back.rho.values(), s.rho.values());
    assert_eq!(back.theta.values(), s.theta.values());
    assert_eq!(back.lambda(), s.lambda());
    assert_eq!(back.t, s.t);
    assert!(decode_snapshot(b"NSFG2").is_err());
    assert!(decode_snapshot(&encode_snapshot(s)[..40]).is_err());
}
