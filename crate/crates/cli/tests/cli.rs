use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn allocplan(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_allocplan"))
        .env_remove("ALLOCPLAN_SEED")
        .env_remove("ALLOCPLAN_THREADS")
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn fit_reports_parameters_in_box() {
    let dir = tempfile::tempdir().unwrap();
    let csv = "group,n_g,n,loss\nA,100,200,0.30\nA,200,400,0.22\nA,400,800,0.17\nA,800,1600,0.13\nA,100,1000,0.29\nA,400,500,0.18\nB,100,200,0.5\n";
    std::fs::write(dir.path().join("obs.csv"), csv).unwrap();
    let v = json(&allocplan(dir.path(), &["fit", "obs.csv", "--group", "A"]));
    assert_eq!(v.as_object().unwrap().keys().next().unwrap(), "schema_version");
    assert_eq!(v["group"], "A");
    for key in ["sigma2", "tau2", "delta"] {
        assert!(v[key].as_f64().unwrap() >= 0.0);
    }
    for key in ["p", "q"] {
        let x = v[key].as_f64().unwrap();
        assert!((0.0..=2.0).contains(&x));
    }
    assert_eq!(v["n_used"], 6);
    assert!(v["stderr"].is_object());
}

#[test]
fn fit_schema_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("missing.csv"), "group,n_g,loss\nA,1,0.5\n").unwrap();
    let out = allocplan(dir.path(), &["fit", "missing.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("'n'"), "{}", stderr(&out));

    std::fs::write(dir.path().join("empty.csv"), "").unwrap();
    assert_eq!(allocplan(dir.path(), &["fit", "empty.csv"]).status.code(), Some(2));

    std::fs::write(dir.path().join("bad.csv"), "group,n_g,n,loss\nA,1,2,0.5\nA,1,two,0.5\n").unwrap();
    let out = allocplan(dir.path(), &["fit", "bad.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));

    std::fs::write(dir.path().join("short.csv"), "group,n_g,n,loss\nA,10,20,0.5\nA,20,40,0.4\nA,40,80,0.3\n").unwrap();
    assert_eq!(allocplan(dir.path(), &["fit", "short.csv"]).status.code(), Some(2));
}

#[test]
fn simulated_powerlaw_round_trips_through_fit() {
    let dir = tempfile::tempdir().unwrap();
    let out = allocplan(
        dir.path(),
        &[
            "--output-dir", ".", "simulate", "--model", "powerlaw", "--sigma2", "3.61,2.56", "--p", "0.47,0.54",
            "--tau2", "0,0", "--q", "1,1", "--delta", "0.0011,0.0014", "--design", "b5-design",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let v = json(&allocplan(dir.path(), &["fit", "observations.csv"]));
    let fits = v["fits"].as_array().unwrap();
    assert_eq!(fits.len(), 2);
    for (f, (s2, p, d)) in fits.iter().zip([(3.61, 0.47, 0.0011), (2.56, 0.54, 0.0014)]) {
        assert!((f["sigma2"].as_f64().unwrap() - s2).abs() < 1e-6 * s2);
        assert!((f["p"].as_f64().unwrap() - p).abs() < 1e-6);
        assert!((f["delta"].as_f64().unwrap() - d).abs() < 1e-8);
    }
    std::fs::write(dir.path().join("fit.json"), serde_json::to_vec(&v).unwrap()).unwrap();
    let alloc = json(&allocplan(
        dir.path(),
        &["optimize", "--gamma", "0.5,0.5", "--model", "fit.json", "--objective", "minmax", "--n", "20000"],
    ));
    assert_eq!(alloc["method"], "bisection");
}

#[test]
fn optimize_examples() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&allocplan(dir.path(), &["optimize", "--gamma", "0.68,0.30,0.01,0.01", "--sigma2", "1,1,1,1", "--p", "1"]));
    let a = floats(&v["alpha_star"]);
    let want = 0.3f64.sqrt() / [0.68f64, 0.30, 0.01, 0.01].iter().map(|g| g.sqrt()).sum::<f64>();
    assert!((a[1] - want).abs() < 1e-12);
    assert!((a[1] - 0.3483).abs() < 1e-4);

    let v = json(&allocplan(dir.path(), &["optimize", "--gamma", "0.5,0.5", "--sigma2", "1,1", "--p", "1"]));
    assert_eq!(floats(&v["alpha_star"]), vec![0.5, 0.5]);

    let v = json(&allocplan(dir.path(), &["optimize", "--gamma", "0.2,0.8", "--sigma2", "4,1", "--p", "1"]));
    let b = &v["bounds"];
    let a = floats(&v["alpha_star"])[0];
    assert!(b["lower"].as_f64().unwrap() < a && a < b["upper"].as_f64().unwrap());

    let out = allocplan(dir.path(), &["optimize", "--gamma", "0.2,0.3,0.5", "--sigma2", "1,1,1", "--p", "1", "--objective", "minmax", "--n", "100"]);
    assert_eq!(out.status.code(), Some(2));
    let out = allocplan(dir.path(), &["optimize", "--gamma", "0.2,0.3", "--sigma2", "1,1", "--p", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn estimator_examples() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&allocplan(
        dir.path(),
        &["estimator", "--alpha", "0.25,0.75", "--w", "2,1", "--mean", "1,1", "--variance", "1,1", "--n", "100"],
    ));
    assert!((v["variance"].as_f64().unwrap() - 0.0175).abs() < 1e-15);
    assert!((v["variance_after"].as_f64().unwrap() - 0.015625).abs() < 1e-15);
    assert!(v["mc"].is_null());

    let v = json(&allocplan(
        dir.path(),
        &["estimator", "--gamma", "0.3,0.7", "--alpha", "0.3,0.7", "--weights", "iw", "--mean", "1,2", "--variance", "1,1", "--n", "50"],
    ));
    for w in floats(&v["weights"]) {
        assert!((w - 1.0).abs() < 1e-15);
    }
    assert_eq!(floats(&v["alpha_star"]).len(), 2);

    let out = allocplan(dir.path(), &["estimator", "--alpha", "1,0", "--w", "0,1", "--mean", "1,1", "--variance", "1,1", "--n", "10"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_linear_ratio_and_validation() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&allocplan(dir.path(), &["simulate", "--model", "linear", "--n", "2000", "--n-g", "100", "--trials", "200"]));
    let ratio = v["rows"][0]["ratio"].as_f64().unwrap();
    assert!((0.95..=1.05).contains(&ratio), "{ratio}");
    let out = allocplan(dir.path(), &["simulate", "--model", "linear", "--n", "2000", "--n-g", "100", "--trials", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let out = allocplan(dir.path(), &["simulate", "--model", "linear", "--n", "7", "--n-g", "3", "--trials", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn pilot_single_trial_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("p.json"),
        r#"{"preset": "synthetic-symmetric", "config": {"trials": 1, "n_new_multipliers": [1, 2], "grid_resolution": null}}"#,
    )
    .unwrap();
    let out = allocplan(dir.path(), &["--output-dir", "out", "pilot", "p.json", "--svg"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: Value = serde_json::from_slice(&std::fs::read(dir.path().join("out/pilot_report.json")).unwrap()).unwrap();
    let s = &v["multipliers"][0]["strategies"][0];
    assert!(s["max_group_loss"]["mean"].is_number());
    assert!(s["max_group_loss"]["se"].is_null());
    let svg = std::fs::read_to_string(dir.path().join("out/report.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("alpha_hat"));

    std::fs::write(dir.path().join("bad.json"), r#"{"preset": "no-such-preset"}"#).unwrap();
    assert_eq!(allocplan(dir.path(), &["pilot", "bad.json"]).status.code(), Some(2));
    std::fs::write(dir.path().join("typo.json"), r#"{"preset": "synthetic-symmetric", "confg": {}}"#).unwrap();
    assert_eq!(allocplan(dir.path(), &["pilot", "typo.json"]).status.code(), Some(2));
}

#[test]
fn logo_matrix_csv_and_label_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{
        "groups": ["X", "Y"],
        "counts": {"X": 300, "Y": 300},
        "evaluator": {"kind": "power_law", "noise_sd": 0.001, "model": [
            {"sigma2": 1.0, "p": 0.5, "tau2": 0.5, "q": 0.5, "delta": 0.01},
            {"sigma2": 1.0, "p": 0.5, "tau2": 0.5, "q": 0.5, "delta": 0.01}
        ]},
        "trials": 10
    }"#;
    std::fs::write(dir.path().join("logo.json"), cfg).unwrap();
    let out = allocplan(dir.path(), &["logo", "logo.json"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0], vec!["withheld", "X", "Y"]);
    let cell = |i: usize, j: usize| rows[i][j].parse::<f64>().unwrap();
    assert!(cell(1, 1) < 0.0 && cell(2, 2) < 0.0);
    assert!((cell(1, 1) - cell(2, 2)).abs() < 0.1 * cell(1, 1).abs());

    std::fs::write(dir.path().join("bad.json"), cfg.replace(r#""Y": 300"#, r#""Z": 300"#)).unwrap();
    let out = allocplan(dir.path(), &["logo", "bad.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("'Z'"));
}

#[test]
fn seed_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["estimator", "--alpha", "0.5,0.5", "--w", "1,1", "--mean", "1,1", "--variance", "1,1", "--n", "10", "--mc-trials", "100"];
    let run = |seed: &str| {
        Command::new(env!("CARGO_BIN_EXE_allocplan"))
            .env("ALLOCPLAN_SEED", seed)
            .current_dir(dir.path())
            .args(args)
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run("4"), run("4"));
    assert_ne!(run("4"), run("5"));
    let explicit = allocplan(dir.path(), &[&["--seed", "4"][..], &args[..]].concat()).stdout;
    assert_eq!(explicit, run("4"));
}
