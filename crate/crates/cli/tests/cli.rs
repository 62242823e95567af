use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gravfact")).current_dir(dir).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn report(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("JSON report on stdout")
}

/// Rows of a CSV as floats, header dropped.
fn rows(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let data = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    (header, data)
}

/// Exterior Schwarzschild `tau2 / tau1`.
fn exterior_delta(m: f64, rho: f64, v: f64) -> f64 {
    let root = |w: f64| ((v - w) - ((v - w).powi(2) + rho * rho).sqrt()) / rho;
    root(-m) / root(m)
}

#[test]
fn factorize_grid_matches_closed_form() {
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), &["factorize", "--model", "schwarzschild", "--m", "1", "--grid", "0.5,2,3,-0.5,0.5,3", "--out", "out"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (header, data) = rows(&tmp.path().join("out/fields.csv"));
    assert_eq!(header, ["rho", "v", "Delta", "Btilde", "B", "psi"]);
    assert_eq!(data.len(), 9);
    for r in &data {
        let expect = exterior_delta(1.0, r[0], r[1]);
        assert!((r[2] - expect).abs() < 1e-8 * expect, "{r:?} vs {expect}");
        assert_eq!(r[3], 0.0);
    }
    let rep = report(&o);
    assert_eq!(rep["command"], "factorize");
    assert!(rep["max_jump_residual"].as_f64().unwrap() < 1e-7);
    assert!(tmp.path().join("out/report.json").exists());
}

#[test]
fn output_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let args = |d: &'static str| ["factorize", "--model", "kerr", "--m", "2", "--a", "1", "--grid", "2.5,3.5,3,-0.5,0.5,3", "--out", d];
    assert_eq!(code(&run(tmp.path(), &args("a"))), 0);
    let single = Command::new(env!("CARGO_BIN_EXE_gravfact"))
        .current_dir(tmp.path())
        .env("GRAVFACT_THREADS", "1")
        .args(args("b"))
        .output()
        .unwrap();
    assert_eq!(code(&single), 0);
    let a = std::fs::read(tmp.path().join("a/fields.csv")).unwrap();
    let b = std::fs::read(tmp.path().join("b/fields.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    assert_eq!(code(&run(d, &["factorize", "--model", "schwarzschild", "--m", "-1", "--at", "1,0"])), 1);
    assert_eq!(code(&run(d, &["factorize", "--model", "nope", "--at", "1,0"])), 1);
    assert_eq!(code(&run(d, &["factorize", "--bogus"])), 1);
    assert_eq!(code(&run(d, &["factorize", "--model", "schwarzschild", "--m", "1", "--grid", "1,2"])), 1);
    assert_eq!(code(&run(d, &["--help"])), 0);
    assert_eq!(code(&run(d, &["--version"])), 0);
    // on the Kerr ergosurface there is no canonical factorisation, and nothing is written
    let o = run(d, &["factorize", "--model", "kerr", "--m", "2", "--a", "1", "--at", "1,0", "--out", "kerr"]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    assert!(!d.join("kerr").exists());
    assert_eq!(code(&run(d, &["generate", "--out", "g"])), 1);
}

#[test]
fn config_file_matches_flags() {
    let tmp = TempDir::new().unwrap();
    let cfg = r#"{
        "model": {"name": "schwarzschild", "params": {"m": 1.0}},
        "grid": {"rho_min": 0.5, "rho_max": 2.0, "n_rho": 3, "v_min": -0.5, "v_max": 0.5, "n_v": 3},
        "outputs": {"dir": "from_config"}
    }"#;
    std::fs::write(tmp.path().join("job.json"), cfg).unwrap();
    assert_eq!(code(&run(tmp.path(), &["factorize", "--config", "job.json"])), 0);
    let flags = ["factorize", "--model", "schwarzschild", "--m", "1", "--grid", "0.5,2,3,-0.5,0.5,3", "--out", "from_flags"];
    assert_eq!(code(&run(tmp.path(), &flags)), 0);
    let a = std::fs::read(tmp.path().join("from_config/fields.csv")).unwrap();
    let b = std::fs::read(tmp.path().join("from_flags/fields.csv")).unwrap();
    assert_eq!(a, b);
    std::fs::write(tmp.path().join("bad.json"), r#"{"modle": {}}"#).unwrap();
    assert_eq!(code(&run(tmp.path(), &["factorize", "--config", "bad.json"])), 1);
}

#[test]
fn ergosurface_rows() {
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), &["ergosurface", "--m", "2", "--a", "1", "--samples", "11", "--out", "e"]);
    assert_eq!(code(&o), 0);
    let (header, data) = rows(&tmp.path().join("e/ergosurface.csv"));
    assert_eq!(header, ["y", "u", "rho", "v"]);
    assert_eq!(data.len(), 11);
    for r in &data {
        assert!((r[1] - (4.0 - r[0] * r[0]).sqrt()).abs() < 1e-8, "{r:?}");
        assert!((r[3] - r[0] * r[1]).abs() < 1e-12);
    }
    assert!(report(&o)["max_deviation_from_closed_form"].as_f64().unwrap() < 1e-8);
    assert_eq!(code(&run(tmp.path(), &["ergosurface", "--m", "1", "--a", "1"])), 1);
}

#[test]
fn verify_reference_and_corruption() {
    let tmp = TempDir::new().unwrap();
    for name in ["kasner", "schwarzschild_exterior", "einstein_rosen"] {
        let o = run(tmp.path(), &["verify", "--reference", name, "--out", name]);
        assert_eq!(code(&o), 0, "{name}: {}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(report(&o)["pass"], true);
    }
    let o = run(tmp.path(), &["verify", "--reference", "schwarzschild_exterior", "--inject-corruption", "--out", "bad"]);
    assert_eq!(code(&o), 4);
    let rep: Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("bad/report.json")).unwrap()).unwrap();
    assert_eq!(rep["pass"], false);
    assert_eq!(rep["checks"]["field_equation"]["pass"], false);
}

#[test]
fn generate_flattens_interior_schwarzschild() {
    let tmp = TempDir::new().unwrap();
    let o = run(
        tmp.path(),
        &[
            "generate",
            "--pair",
            "interior_schwarzschild",
            "--pair",
            "gen:-1,-1:0.5,-0.5:plus",
            "--pair",
            "gen:1,1:-0.5,0.5:plus",
            "--grid",
            "0.1,0.4,4,-0.4,0.4,5",
            "--out",
            "flat",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (_, data) = rows(&tmp.path().join("flat/fields.csv"));
    assert_eq!(data.len(), 20);
    assert!(data.iter().all(|r| (r[2] - 1.0).abs() < 1e-12 && r[3].abs() < 1e-12));
}

#[test]
fn catalog_lists_everything() {
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), &["catalog"]);
    assert_eq!(code(&o), 0);
    let rep = report(&o);
    for key in ["families", "references", "pairs", "contours"] {
        assert!(rep[key].as_array().is_some_and(|a| !a.is_empty()), "{key}");
    }
    assert!(rep["families"].as_array().unwrap().iter().any(|x| x == "schwarzschild"));
}
