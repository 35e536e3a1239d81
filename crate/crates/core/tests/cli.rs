use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use zgs::runner::{self, SweepAxis};
use zgs::scenario::{InitSpec, Scenario};

fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn zgs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zgs"))
        .args(args)
        .env_remove("ZGS_SEED")
        .output()
        .unwrap()
}

fn write_scenario(dir: &Path, s: &Scenario) -> String {
    let path = dir.join(format!("{}.json", s.name));
    std::fs::write(&path, s.to_json()).unwrap();
    path.to_str().unwrap().to_string()
}

fn parse_csv(bytes: &[u8]) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(bytes);
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn run_writes_expected_first_row() {
    let tmp = tempfile::tempdir().unwrap();
    let out = zgs(&[
        "run",
        scenario_path("path3_consensus.json").to_str().unwrap(),
        "--out-dir",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let bytes = std::fs::read(tmp.path().join("trajectory.csv")).unwrap();
    assert!(bytes.starts_with(b"t,V,V_bound_upper,V_bound_lower,grad_sum_norm,disagreement,err_to_xstar\r\n"));
    let (_, rows) = parse_csv(&bytes);
    assert_eq!(rows.len(), 81);
    let first = &rows[0];
    assert_eq!(num(&first[0]), 0.0);
    assert!((num(&first[1]) - 7.0).abs() < 1e-12);
    assert!((num(&first[2]) - 7.0).abs() < 1e-12);
    assert!((num(&first[3]) - 7.0).abs() < 1e-12);
    assert!(num(&first[4]) <= 1e-12);
    assert!((num(&first[5]) - 14.0).abs() < 1e-12);
    assert!((num(&first[6]) - 14f64.sqrt()).abs() < 1e-12);

    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("summary.json")).unwrap()).unwrap();
    for key in [
        "x_star",
        "v0",
        "rho",
        "rho_tilde",
        "rho_cor_lower",
        "rho_tilde_cor_upper",
        "lambda2",
        "lambdaN",
        "theta",
        "Theta",
        "gamma",
        "Gamma",
        "final_err",
        "max_drift",
        "fitted_rate",
        "schema_version",
    ] {
        assert!(summary.get(key).is_some(), "missing {key}");
    }
    assert_eq!(summary["schema_version"], 1);
    assert!((summary["x_star"][0].as_f64().unwrap() - 3.0).abs() < 1e-12);
}

#[test]
fn elementwise_run_leaves_bound_columns_empty() {
    let tmp = tempfile::tempdir().unwrap();
    let out = zgs(&[
        "run",
        scenario_path("tanh_path3.json").to_str().unwrap(),
        "--out-dir",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let (_, rows) = parse_csv(&std::fs::read(tmp.path().join("trajectory.csv")).unwrap());
    assert!(rows.iter().all(|r| r[2].is_empty() && r[3].is_empty() && !r[1].is_empty()));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();

    let garbage = tmp.path().join("garbage.json");
    std::fs::write(&garbage, "{ \"schema_version\": 1, ").unwrap();
    assert_eq!(zgs(&["validate", garbage.to_str().unwrap()]).status.code(), Some(2));

    let mut s = Scenario::from_path(scenario_path("path3_consensus.json")).unwrap();
    s.name = "bad_dimension".into();
    s.dimension = 2;
    let path = write_scenario(tmp.path(), &s);
    let out = zgs(&["run", &path, "--out-dir", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("objectives.functions[0].center"));

    let off = scenario_path("off_manifold.json");
    assert_eq!(zgs(&["validate", off.to_str().unwrap()]).status.code(), Some(3));
    assert_eq!(zgs(&["analyze", off.to_str().unwrap()]).status.code(), Some(3));

    let mut s = Scenario::from_path(scenario_path("path3_consensus.json")).unwrap();
    s.name = "underflow".into();
    s.integrator = zgs::scenario::IntegratorSpec::Rk45 {
        abs_tol: 1e-30,
        rel_tol: 1e-30,
        t_end: 1.0,
        sample_every: 0.5,
        h_init: Some(0.5),
        h_min: Some(1e-2),
        h_max: Some(1.0),
    };
    let path = write_scenario(tmp.path(), &s);
    let out = zgs(&["run", &path, "--out-dir", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));

    let ok = scenario_path("path3_consensus.json");
    let out = zgs(&["validate", ok.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok: 3 nodes, 2 edges"));

    let bad_seed = Command::new(env!("CARGO_BIN_EXE_zgs"))
        .args(["validate", ok.to_str().unwrap()])
        .env("ZGS_SEED", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(bad_seed.status.code(), Some(2));
}

#[test]
fn analyze_prints_bounds_without_integrating() {
    let out = zgs(&["analyze", scenario_path("path3_consensus.json").to_str().unwrap()]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["rho"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    assert!((v["rho_tilde"].as_f64().unwrap() - 6.0).abs() < 1e-9);
    assert!((v["v0"].as_f64().unwrap() - 7.0).abs() < 1e-12);
    assert!(v["final_err"].is_null());
    assert!(v["fitted_rate"].is_null());
}

#[test]
fn equilibrium_start_gives_constant_zero_v() {
    let mut s = Scenario::from_path(scenario_path("path3_consensus.json")).unwrap();
    s.initialization = InitSpec::Explicit {
        states: vec![vec![3.0]; 3],
    };
    let out = runner::run(&s).unwrap();
    let v0 = out.trajectory.diagnostics[0].v;
    assert!(v0 <= 1e-28, "{v0}");
    assert!(out.trajectory.diagnostics.iter().all(|d| d.v == v0));
    assert!(out.trajectory.states.iter().all(|x| x == out.prepared.validated.x0.state()));
    assert!(out.summary().fitted_rate.is_none_or(|r| r.0.abs() < 1e-12));
}

#[test]
fn step_size_sweep_shows_fourth_order() {
    let tmp = tempfile::tempdir().unwrap();
    let out = zgs(&[
        "sweep",
        scenario_path("two_node.json").to_str().unwrap(),
        "--axis",
        "step-size",
        "--values",
        "4e-3,2e-3,1e-3",
        "--out-dir",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = parse_csv(&std::fs::read(tmp.path().join("sweep_step-size.csv")).unwrap());
    assert_eq!(header, runner::SWEEP_HEADER);
    assert_eq!(rows.len(), 3);
    for k in 0..3 {
        assert!(tmp.path().join(format!("sweep_step-size_{k}.json")).exists());
    }
    let errs: Vec<f64> = rows.iter().map(|r| num(&r[6])).collect();
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((12.0..=20.0).contains(&ratio), "ratio {ratio} from {errs:?}");
    }
}

#[test]
fn graph_size_sweep_tracks_algebraic_connectivity() {
    let s = Scenario::from_path(scenario_path("path_family.json")).unwrap();
    let values: Vec<f64> = (3..=10).map(|n| n as f64).collect();
    let rows = runner::sweep(&s, SweepAxis::GraphSize, &values).unwrap();
    let mut previous = f64::INFINITY;
    for row in &rows {
        let n = row.value;
        let rho = row.output.prepared.analysis.bounds().unwrap().rho;
        let expected = 2.0 * 2.0 * (1.0 - (std::f64::consts::PI / n).cos());
        assert!((rho - expected).abs() < 1e-9, "N = {n}: {rho} vs {expected}");
        assert!(rho < previous);
        previous = rho;
    }
}

#[test]
fn curvature_ratio_sweep_widens_the_bounds() {
    let s = Scenario::from_path(scenario_path("path3_consensus.json")).unwrap();
    let rows = runner::sweep(&s, SweepAxis::CurvatureRatio, &[1.0, 4.0]).unwrap();
    let b0 = rows[0].output.prepared.analysis.bounds().unwrap();
    let b1 = rows[1].output.prepared.analysis.bounds().unwrap();
    assert!((b0.rho - 2.0).abs() < 1e-9);
    assert!(b1.rho < b0.rho);
    for row in &rows {
        let b = row.output.prepared.analysis.bounds().unwrap();
        let fit = row.output.trajectory.fitted_decay_rate().unwrap().rate;
        assert!(fit >= 0.98 * b.rho && fit <= 1.02 * b.rho_tilde, "{fit} vs {b:?}");
    }
}

#[test]
fn empty_sweep_writes_header_only() {
    let tmp = tempfile::tempdir().unwrap();
    let out = zgs(&[
        "sweep",
        scenario_path("path3_consensus.json").to_str().unwrap(),
        "--axis",
        "graph-size",
        "--values=",
        "--out-dir",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let bytes = std::fs::read(tmp.path().join("sweep_graph-size.csv")).unwrap();
    assert_eq!(bytes, b"value,fitted_rate,rho,rho_tilde,final_err,drift,step_err\r\n");
}

#[test]
fn inapplicable_sweep_axis_is_a_scenario_error() {
    let s = Scenario::from_path(scenario_path("path3_consensus.json")).unwrap();
    let e = runner::sweep(&s, SweepAxis::GraphSize, &[4.0]).unwrap_err();
    assert_eq!(e.exit_code(), 2);
    let logistic = Scenario::from_path(scenario_path("logistic_ring.json")).unwrap();
    assert_eq!(
        runner::sweep(&logistic, SweepAxis::CurvatureRatio, &[2.0]).unwrap_err().exit_code(),
        2
    );
    assert_eq!(
        runner::sweep(&logistic, SweepAxis::StepSize, &[1e-3]).unwrap_err().exit_code(),
        2
    );
}

#[test]
fn seed_override_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |seed: &str, dir: &str| {
        let d = tmp.path().join(dir);
        let status = Command::new(env!("CARGO_BIN_EXE_zgs"))
            .args(["run", scenario_path("random_quadratic.json").to_str().unwrap(), "--out-dir"])
            .arg(&d)
            .env("ZGS_SEED", seed)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(d.join("summary.json")).unwrap()
    };
    let a = run("5", "a");
    assert_eq!(a, run("5", "b"));
    assert_ne!(a, run("6", "c"));
    let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["seed"], 5);
}
