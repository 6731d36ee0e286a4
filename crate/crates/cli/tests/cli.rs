use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use intertwiner::io::{parse_matrix, MatrixJson};
use intertwiner::matrix::{c, expm, frobenius, identity, pauli};
use intertwiner::models::{build_dimer, build_pt_spin, SpinModelParams};
use intertwiner::CMatrix;
use serde_json::{json, Value};
use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_intertwiner"))
        .args(args)
        .current_dir(dir)
        .env_remove("INTERTWINER_TOL")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout_json(out: &Output) -> Value {
    assert_eq!(code(out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn write_matrix(dir: &Path, name: &str, m: &CMatrix) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string(&MatrixJson::from_matrix(m)).unwrap()).unwrap();
    path
}

fn diag(vals: &[f64]) -> CMatrix {
    CMatrix::from_fn(vals.len(), vals.len(), |r, k| if r == k { c(vals[r], 0.0) } else { c(0.0, 0.0) })
}

fn csv_columns(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    let mut cols = vec![Vec::new(); header.len()];
    for line in lines {
        for (k, v) in line.split(',').enumerate() {
            cols[k].push(v.parse::<f64>().unwrap());
        }
    }
    (header, cols)
}

fn relative_spread(col: &[f64]) -> f64 {
    let s0 = col[0];
    col.iter().map(|v| (v - s0).abs()).fold(0.0, f64::max) / s0.abs()
}

#[test]
fn analyze_reports_third_order_ep() {
    let dir = TempDir::new().unwrap();
    let h = build_pt_spin(&SpinModelParams::new(3, 1.0, 1.0).unwrap()).0;
    let path = write_matrix(dir.path(), "h3.json", &h);
    let report = stdout_json(&run(dir.path(), &["analyze", path.to_str().unwrap()]));
    let clusters = report["clusters"].as_array().unwrap();
    assert_eq!(clusters.len(), 1);
    assert_eq!(clusters[0]["ep_order"], 3);
    assert_eq!(clusters[0]["kind"], "exceptional");
}

#[test]
fn analyze_hermitian_and_random_inputs() {
    let dir = TempDir::new().unwrap();
    let (sx, _, sz) = pauli();
    let path = write_matrix(dir.path(), "herm.json", &(&sx + &sz * c(0.3, 0.0)));
    let report = stdout_json(&run(dir.path(), &["analyze", path.to_str().unwrap()]));
    assert!(report["eigenvalues"].as_array().unwrap().iter().all(|z| z[1].as_f64().unwrap().abs() < 1e-12));
    assert!(report["symmetries"].as_array().unwrap().iter().any(|s| s["class"] == "PT"));

    let random = CMatrix::from_fn(3, 3, |r, k| {
        c(0.37 * (r as f64 + 1.3).powi(2) - 0.2 * k as f64, 0.11 * (r * 3 + k) as f64 - 0.4)
    });
    let path = write_matrix(dir.path(), "random.json", &random);
    let report = stdout_json(&run(dir.path(), &["analyze", path.to_str().unwrap()]));
    assert!(report["symmetries"].as_array().unwrap().is_empty());
}

#[test]
fn analyze_rejects_malformed_input() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{\"n\": 2, \"data\": [[[1, 0]]]}").unwrap();
    assert_eq!(code(&run(dir.path(), &["analyze", path.to_str().unwrap()])), 1);
    fs::write(&path, "not json").unwrap();
    assert_eq!(code(&run(dir.path(), &["analyze", path.to_str().unwrap()])), 1);
    assert_eq!(code(&run(dir.path(), &["analyze", "missing.json"])), 1);
}

#[test]
fn conserve_counts() {
    let dir = TempDir::new().unwrap();
    let model = dir.path().join("h3.json");
    let out =
        run(dir.path(), &["model", "pt-spin", "--dim", "3", "--gamma", "0.5", "--output", model.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let set = stdout_json(&run(dir.path(), &["conserve", model.to_str().unwrap(), "--method", "recursive"]));
    assert_eq!(set["count"], 3);
    assert_eq!(set["construction"], "recursive");
    let h = build_pt_spin(&SpinModelParams::new(3, 1.0, 0.5).unwrap()).0;
    let p = intertwiner::models::parity(3);
    let want = [p.clone(), &p * &h, &p * &h * &h];
    for (eta, w) in set["etas"].as_array().unwrap().iter().zip(&want) {
        let m = parse_matrix(&eta["matrix"].to_string()).unwrap();
        assert!(frobenius(&(m - w)) < 1e-12);
        assert!(eta["residual"].as_f64().unwrap() < 1e-12);
    }

    let path = write_matrix(dir.path(), "id.json", &identity(3));
    assert_eq!(stdout_json(&run(dir.path(), &["conserve", path.to_str().unwrap()]))["count"], 9);
    let path = write_matrix(dir.path(), "diag.json", &diag(&[1.0, 1.0, 2.0]));
    let set = stdout_json(&run(dir.path(), &["conserve", path.to_str().unwrap(), "--method", "spectral"]));
    assert_eq!(set["count"], 5);
}

#[test]
fn conserve_without_symmetry_exits_3() {
    let dir = TempDir::new().unwrap();
    let path = write_matrix(dir.path(), "asym.json", &diag(&[1.0, 2.0]).map(|z| z * c(1.0, 0.5)));
    let out = run(dir.path(), &["conserve", path.to_str().unwrap(), "--method", "recursive"]);
    assert_eq!(code(&out), 3, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let out = run(dir.path(), &["conserve", path.to_str().unwrap(), "--method", "spectral"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn evolve_writes_flat_drift_columns() {
    let dir = TempDir::new().unwrap();
    let (h, _) = build_dimer(1.0, 0.5).unwrap();
    let (sx, _, _) = pauli();
    let hp = write_matrix(dir.path(), "h2.json", &h);
    let ep = write_matrix(dir.path(), "eta.json", &sx);
    let state = dir.path().join("psi.json");
    fs::write(&state, json!({"n": 2, "data": [[0.6, 0.0], [0.8, 0.0]]}).to_string()).unwrap();
    let out = run(
        dir.path(),
        &["evolve", hp.to_str().unwrap(), "--state", "psi.json", "--tmax", "20", "--etas", ep.to_str().unwrap()],
    );
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("max_relative_drift="));
    let (header, cols) = csv_columns(&dir.path().join("drift.csv"));
    assert_eq!(header, ["t", "norm", "eta_1"]);
    assert_eq!(cols[0].len(), 2001);
    assert!(relative_spread(&cols[2]) <= 1e-8);

    // Broken phase: the norm grows while the conserved column stays flat.
    let (h, _) = build_dimer(1.0, 1.5).unwrap();
    let hp = write_matrix(dir.path(), "broken.json", &h);
    let out = run(
        dir.path(),
        &[
            "evolve",
            hp.to_str().unwrap(),
            "--state",
            "psi.json",
            "--tmax",
            "10",
            "--etas",
            ep.to_str().unwrap(),
            "--output",
            "broken.csv",
        ],
    );
    assert_eq!(code(&out), 0);
    let (_, cols) = csv_columns(&dir.path().join("broken.csv"));
    assert!(cols[1].last().unwrap() > &(10.0 * cols[1][0]));
    assert!(relative_spread(&cols[2]) <= 1e-8);

    // Passive dimer with the uniform decay undone.
    let (h, _) = build_dimer(1.0, 0.5).unwrap();
    let hp = write_matrix(dir.path(), "passive.json", &(&h - identity(2) * c(0.0, 0.25)));
    let out = run(
        dir.path(),
        &[
            "evolve",
            hp.to_str().unwrap(),
            "--state",
            "psi.json",
            "--tmax",
            "20",
            "--etas",
            ep.to_str().unwrap(),
            "--gamma-shift",
            "0.25",
            "--output",
            "passive.csv",
        ],
    );
    assert_eq!(code(&out), 0);
    let (_, cols) = csv_columns(&dir.path().join("passive.csv"));
    assert!(relative_spread(&cols[2]) <= 1e-8);
}

#[test]
fn evolve_rejects_dimension_mismatch() {
    let dir = TempDir::new().unwrap();
    let hp = write_matrix(dir.path(), "h.json", &identity(3));
    let state = dir.path().join("psi.json");
    fs::write(&state, json!({"n": 2, "data": [[1.0, 0.0], [0.0, 0.0]]}).to_string()).unwrap();
    let out =
        run(dir.path(), &["evolve", hp.to_str().unwrap(), "--state", "psi.json", "--tmax", "1", "--etas", "h.json"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn model_outputs() {
    let dir = TempDir::new().unwrap();
    let file = stdout_json(&run(dir.path(), &["model", "pt-spin", "--dim", "3", "--gamma", "0.5"]));
    let seed = parse_matrix(&file["seed"].to_string()).unwrap();
    assert!(frobenius(&(seed - intertwiner::models::parity(3))) < 1e-15);

    let file = stdout_json(&run(dir.path(), &["model", "circuit", "--mu", "0.5", "--gamma", "1"]));
    assert_eq!(file["n"], 4);
    let seed = parse_matrix(&file["seed"].to_string()).unwrap();
    let (sx, _, _) = pauli();
    assert!(frobenius(&(seed - intertwiner::matrix::kron(&identity(2), &sx))) < 1e-15);

    let file = stdout_json(&run(dir.path(), &["model", "dimer", "--gamma", "0"]));
    let h = parse_matrix(&json!({"n": file["n"], "data": file["data"]}).to_string()).unwrap();
    assert!(frobenius(&(h - sx * c(0.5, 0.0))) < 1e-15);

    assert_eq!(code(&run(dir.path(), &["model", "circuit", "--mu", "1.0"])), 1);
    assert_eq!(code(&run(dir.path(), &["model", "pt-spin", "--dim", "1"])), 1);
}

#[test]
fn model_round_trip_reproduces_declared_class() {
    let dir = TempDir::new().unwrap();
    for (name, class) in [("pt-spin", "PT"), ("hatano-nelson", "PT"), ("circuit", "PT"), ("dimer", "PT")] {
        let path = dir.path().join(format!("{name}.json"));
        let out =
            run(dir.path(), &["model", name, "--gamma", "0.4", "--mu", "0.3", "--output", path.to_str().unwrap()]);
        assert_eq!(code(&out), 0);
        let file: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(file["symmetries"][0]["class"], class);
        let report = stdout_json(&run(dir.path(), &["analyze", path.to_str().unwrap()]));
        assert!(report["symmetries"].as_array().unwrap().iter().any(|s| s["class"] == class), "{name}");
    }
}

#[test]
fn floquet_outputs() {
    let dir = TempDir::new().unwrap();
    let (sx, _, sz) = pauli();
    let plus = build_dimer(1.0, 0.5).unwrap().0;
    let minus = (&sx + &sz * c(0.0, -0.5)) * c(0.5, 0.0);
    let segs = json!({"segments": [
        {"duration": 0.5, "hamiltonian": MatrixJson::from_matrix(&plus)},
        {"duration": 0.5, "hamiltonian": MatrixJson::from_matrix(&minus)},
    ]});
    fs::write(dir.path().join("drive.json"), segs.to_string()).unwrap();
    let out = run(dir.path(), &["floquet", "drive.json", "--out-dir", "out"]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let out_dir = dir.path().join("out");
    let set: Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("stroboscopic_etas.json")).unwrap()).unwrap();
    assert!(set["count"].as_u64().unwrap() >= 1);
    let (header, cols) = csv_columns(&out_dir.join("stroboscopic.csv"));
    assert_eq!(cols[0].len(), 101);
    assert!(header.len() > 2);
    for col in &cols[2..] {
        assert!(relative_spread(col) <= 1e-8);
    }

    let single = json!({"segments": [{"duration": 1.3, "hamiltonian": MatrixJson::from_matrix(&plus)}]});
    fs::write(dir.path().join("single.json"), single.to_string()).unwrap();
    assert_eq!(code(&run(dir.path(), &["floquet", "single.json", "--out-dir", "one"])), 0);
    let g = parse_matrix(&fs::read_to_string(dir.path().join("one/floquet_propagator.json")).unwrap()).unwrap();
    assert!(frobenius(&(g - expm(&(&plus * c(0.0, -1.3))).unwrap())) < 1e-12);

    fs::write(dir.path().join("empty.json"), "{\"segments\": []}").unwrap();
    assert_eq!(code(&run(dir.path(), &["floquet", "empty.json"])), 1);
}

#[test]
fn tolerance_from_environment_is_validated() {
    let dir = TempDir::new().unwrap();
    let path = write_matrix(dir.path(), "id.json", &identity(2));
    let out = Command::new(env!("CARGO_BIN_EXE_intertwiner"))
        .args(["conserve", path.to_str().unwrap()])
        .env("INTERTWINER_TOL", "-1")
        .output()
        .unwrap();
    assert_eq!(code(&out), 1);
    let out = Command::new(env!("CARGO_BIN_EXE_intertwiner"))
        .args(["conserve", path.to_str().unwrap()])
        .env("INTERTWINER_TOL", "1e-9")
        .output()
        .unwrap();
    assert_eq!(stdout_json(&out)["count"], 4);
}
