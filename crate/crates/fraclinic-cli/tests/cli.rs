use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fraclinic")).args(args).current_dir(dir).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const PINNED: &str = "mode = solve-pinned\nseed = 3\n[grid]\nx = 10\nn = 201\n[frac]\ns = 0.75\n[pin]\na = -1\nb = 1\ndatum = 1\n";

#[test]
fn pinned_run_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "p.cfg", PINNED);
    for out in ["a", "b"] {
        let o = run(&["solve-pinned", "--config", &cfg, "--out", out], tmp.path());
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = fs::read(tmp.path().join("a/report.json")).unwrap();
    let b = fs::read(tmp.path().join("b/report.json")).unwrap();
    assert_eq!(a, b);
    let report: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(report["seed"], 3);
    assert_eq!(report["config"]["grid.n"], "201");
    assert_eq!(report["result"]["converged"], true);
    let csv = fs::read_to_string(tmp.path().join("a/profile.csv")).unwrap();
    assert!(csv.starts_with("x,q_1\n"));
    assert_eq!(csv.lines().count(), 202);
}

#[test]
fn unknown_key_exits_4_with_position() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "bad.cfg", "[grid]\nx = 3\n  bogus = 1\n");
    let o = run(&["layer", "--config", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(4));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3, column 3"), "{err}");
}

#[test]
fn unknown_catalog_parameter_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "bad.cfg", "[potential]\nname = power-W\nmu = 3\n");
    let o = run(&["solve-confined", "--config", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn missing_config_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["layer", "--config", "nope.cfg"], tmp.path());
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn hypothesis_failure_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "h.cfg", "[frac]\ns = 0.4\n[pin]\na = 0\nb = 0\n[grid]\nx = 5\nn = 101\n");
    let o = run(&["solve-pinned", "--config", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn iteration_cap_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "p.cfg", &format!("{PINNED}[solver]\nmax_iter = 2\n"));
    let o = run(&["solve-pinned", "--config", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(tmp.path().join("report.json").exists());
}

#[test]
fn mode_mismatch_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "p.cfg", PINNED);
    let o = run(&["layer", "--config", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn confined_then_certify() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.cfg", "[grid]\nx = 8\nn = 401\n[frac]\ns = 0.4\n");
    let o = run(&["solve-confined", "--config", &cfg, "--out", "run"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["certify", "--config", &cfg, "--out", "run", "--profile", "run/qcrit.csv"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let cert: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("run/certificate.json")).unwrap()).unwrap();
    assert_eq!(cert["result"]["pass"], true);
    assert!(cert["result"]["barrier"]["constants"]["r0"].as_f64().unwrap() > 1.0);
    assert_eq!(cert["result"]["eta_sweep"].as_array().unwrap().len(), 3);
}

#[test]
fn scaling_matches_library() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "s.cfg", "[frac]\ns = 0.25\n[grid]\nx = 2\nn = 801\n");
    let o = run(&["scaling-experiment", "--config", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let rep: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("scaling.json")).unwrap()).unwrap();
    let v = fraclinic::potentials::pinned_potential("quadratic-well", 1, &Default::default()).unwrap();
    let lib = fraclinic::pinned::scaling_experiment(
        &fraclinic::frac_ops::FracParams::new(0.25).unwrap(),
        &v,
        1.0,
        &[1.0, 0.5, 0.25, 0.125],
        &fraclinic::grid::Grid::new(2.0, 801).unwrap(),
    )
    .unwrap();
    assert_eq!(rep["result"]["slope"].as_f64().unwrap(), lib.slope);
}

#[test]
fn validate_passes_and_layer_writes_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "v.cfg", "[validate]\ncases = 20\n");
    let o = run(&["validate", "--config", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let cfg = write(tmp.path(), "l.cfg", "[frac]\ns = 0.5\n[layer]\nx = 40\nh = 0.1\n");
    let o = run(&["layer", "--config", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(tmp.path().join("layer.csv")).unwrap();
    assert!(csv.starts_with("x,profile,beta\n"));
}

#[test]
fn bad_thread_count_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "v.cfg", "[validate]\ncases = 1\n");
    let o = Command::new(env!("CARGO_BIN_EXE_fraclinic"))
        .args(["validate", "--config", &cfg])
        .env("FRACLINIC_THREADS", "zero")
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(4));
}
