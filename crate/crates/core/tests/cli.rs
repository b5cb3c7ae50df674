use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn rabi2q(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rabi2q")).args(args).output().expect("binary runs")
}

fn report(args: &[&str]) -> Value {
    let out = rabi2q(args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn table(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn ground_decoupled_compare() {
    let r = report(&["ground", "--omega", "1", "--Omega", "1", "--g", "0", "--pairs", "1", "--compare"]);
    assert!((r["vm"]["energy"].as_f64().unwrap() + 1.0).abs() < 1e-8);
    assert!((r["ed"]["energy"].as_f64().unwrap() + 1.0).abs() < 1e-12);
    assert_eq!(r["vm"]["converged"], Value::Bool(true));
    assert_eq!(r["ansatz"]["n_pairs"], 1);
}

#[test]
fn ground_near_gc_compare() {
    let r = report(&["ground", "--omega", "1", "--Omega", "10", "--g-over-gc", "1", "--pairs", "2", "--compare"]);
    assert!(r["relative_error"].as_f64().unwrap() <= 1e-3);
    assert_eq!(r["g_over_gc"].as_f64().unwrap(), 1.0);
}

#[test]
fn ground_without_tunneling_is_bipolaron() {
    let r = report(&["ground", "--Omega", "0", "--g", "0.5"]);
    let probs = r["vm"]["observables"]["probs"].as_array().unwrap();
    assert!(probs[2].as_f64().unwrap() < 1e-10 && probs[3].as_f64().unwrap() < 1e-10);
    assert!((r["vm"]["energy"].as_f64().unwrap() + 1.0).abs() < 1e-8);
    assert_eq!(r["g_over_gc"], Value::Null);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(rabi2q(&["ground", "--Omega", "0", "--g-over-gc", "1"]).status.code(), Some(2));
    assert_eq!(rabi2q(&["ground", "--g", "1", "--g-over-gc", "1"]).status.code(), Some(2));
    assert_eq!(rabi2q(&["ground", "--omega", "-1"]).status.code(), Some(2));
    assert_eq!(rabi2q(&["sweep", "--from", "1", "--to", "1"]).status.code(), Some(2));
    assert_eq!(rabi2q(&["sweep", "--count", "1"]).status.code(), Some(2));
    assert_eq!(rabi2q(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(rabi2q(&["crossover", "--threshold", "0.3"]).status.code(), Some(2));
}

#[test]
fn sweep_is_deterministic_and_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    let paths = [dir.path().join("a.csv"), dir.path().join("b.csv")];
    for path in &paths {
        let out = rabi2q(&[
            "sweep", "--Omega", "1", "--from", "0", "--to", "1.5", "--count", "5", "--pairs", "1", "--starts", "3",
            "--seed", "9", "--out", path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(std::fs::read(&paths[0]).unwrap(), std::fs::read(&paths[1]).unwrap());

    let (header, rows) = table(&paths[0]);
    assert_eq!(rows.len(), 5);
    assert_eq!(&header[..3], ["g", "g_over_gc", "vm_energy"]);
    assert!(header.iter().any(|h| h == "err_energy"));
    assert!(rows.iter().all(|r| r.last().unwrap() == "ok"));
    assert!(rows[0][0].contains('e') && rows[1][0].len() >= 20);
    let p3 = column(&header, &rows, "ed_p3");
    assert!(p3.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{p3:?}");
    let err = column(&header, &rows, "err_energy");
    let ed = column(&header, &rows, "ed_energy");
    assert!(err.iter().zip(&ed).all(|(e, r)| *e >= -1e-8 && e.abs() / r.abs() < 1e-3));
}

#[test]
fn sweep_engine_selects_columns() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ed.csv");
    let out = rabi2q(&["sweep", "--engine", "ed", "--count", "3", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let (header, _) = table(&path);
    assert!(header.iter().all(|h| !h.starts_with("vm_") && !h.starts_with("err_")));
    assert!(header.iter().any(|h| h == "ed_n_max"));

    let json = rabi2q(&["sweep", "--engine", "ed", "--count", "3", "--format", "json"]);
    let v: Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 3);
    assert_eq!(v[0]["status"], "ok");
}

#[test]
fn config_file_sits_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "Omega = 0\ng = 0.25\npairs = 1\n# trailing comment\n").unwrap();
    let r = report(&["ground", "--config", cfg.to_str().unwrap()]);
    assert!((r["vm"]["energy"].as_f64().unwrap() + 0.25).abs() < 1e-8);
    let r = report(&["ground", "--config", cfg.to_str().unwrap(), "--g", "0.5"]);
    assert!((r["vm"]["energy"].as_f64().unwrap() + 1.0).abs() < 1e-8);
    std::fs::write(&cfg, "colour = blue\n").unwrap();
    assert_eq!(rabi2q(&["ground", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn potentials_at_zero_coupling_coincide() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.csv");
    assert_eq!(rabi2q(&["potentials", "--g", "0", "--points", "41", "--out", path.to_str().unwrap()]).status.code(), Some(0));
    let (header, rows) = table(&path);
    assert_eq!(header, ["x", "v_uu", "v_ud", "v_du", "v_dd"]);
    let x = column(&header, &rows, "x");
    for name in ["v_uu", "v_ud", "v_du", "v_dd"] {
        let v = column(&header, &rows, name);
        assert!(x.iter().zip(&v).all(|(x, v)| (v - 0.5 * x * x).abs() < 1e-14));
    }
}

#[test]
fn wavefunction_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.csv");
    let run = |args: &[&str]| {
        let mut all = vec!["wavefunction", "--out", path.to_str().unwrap()];
        all.extend_from_slice(args);
        assert_eq!(rabi2q(&all).status.code(), Some(0));
        table(&path)
    };

    let (header, rows) = run(&["--Omega", "0", "--g", "0.5"]);
    assert!(column(&header, &rows, "psi3").iter().chain(&column(&header, &rows, "psi4")).all(|v| *v == 0.0));

    let (header, rows) = run(&["--Omega", "1", "--g", "0"]);
    for name in ["psi1", "psi2", "psi3", "psi4"] {
        let v = column(&header, &rows, name);
        let humps = v.windows(3).filter(|w| w[1].abs() > w[0].abs() && w[1].abs() > w[2].abs()).count();
        assert_eq!(humps, 1, "{name}");
    }

    let (header, rows) = run(&["--Omega", "1", "--g", "2", "--x-min", "-10", "--x-max", "10", "--engine", "both"]);
    let x = column(&header, &rows, "x");
    let peak = |name: &str| {
        let v = column(&header, &rows, name);
        let i = (0..v.len()).max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs())).unwrap();
        (x[i], v[i].abs())
    };
    let well = 2.0 * 2f64.sqrt() * 2.0;
    let (x1, h1) = peak("ed_psi1");
    let (x2, _) = peak("ed_psi2");
    assert!((x1 + well).abs() < 0.3 && (x2 - well).abs() < 0.3);
    assert!(peak("ed_psi3").1 < 0.05 * h1);
    assert!((peak("vm_psi1").0 - x1).abs() < 0.3);
}

#[test]
fn wavefunction_warns_on_coarse_grid() {
    let out = rabi2q(&["wavefunction", "--points", "5", "--g", "0"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("coarse"));
}

#[test]
fn crossover_table_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.csv");
    let summary = dir.path().join("s.csv");
    let out = rabi2q(&[
        "crossover", "--Omega-list", "0,1,10", "--count", "31", "--out", path.to_str().unwrap(), "--summary-out",
        summary.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = table(&path);
    assert_eq!(rows.len(), 93);
    assert_eq!(header, ["omega", "Omega", "g", "p1", "p2", "p3", "p4", "status"]);
    let (sh, srows) = table(&summary);
    let g = column(&sh, &srows, "g_cross");
    assert_eq!(g[0], 0.0);
    assert!(g[0] < g[1] && g[1] < g[2], "{g:?}");

    let json = rabi2q(&["crossover", "--Omega-list", "1", "--count", "11", "--format", "json"]);
    let v: Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(v["table"].as_array().unwrap().len(), 11);
    assert!(v["crossover"][0]["g_cross"].as_f64().unwrap() > 0.0);
}

#[test]
fn ground_csv_is_one_row() {
    let out = rabi2q(&["ground", "--g", "0.2", "--pairs", "1", "--format", "csv", "--compare"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().next().unwrap().contains("err_energy"));
}
