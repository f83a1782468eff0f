use std::path::Path;
use std::process::{Command, Output};

use nlrm::{read_matrix, relative_residual, MatrixFormat};

fn nlrm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlrm"))
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(path: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "gen",
        "--rows",
        "30",
        "--cols",
        "20",
        "--seed",
        "4",
        "--out",
        s(path),
    ];
    args.extend_from_slice(extra);
    nlrm(&args)
}

#[test]
fn gen_is_deterministic_in_both_formats() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (
        dir.path().join("a.csv"),
        dir.path().join("b.csv"),
        dir.path().join("c.bin"),
    );
    for p in [&a, &b, &c] {
        let out = gen(p, &["--rank", "3", "--noise", "0.001"]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let from_csv = read_matrix(&a, MatrixFormat::Csv).unwrap();
    assert_eq!(from_csv.shape(), (30, 20));
    assert_eq!(read_matrix(&c, MatrixFormat::Bin).unwrap(), from_csv);
}

#[test]
fn approx_reports_recomputable_residual() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("a.csv");
    let x = dir.path().join("x.csv");
    let report = dir.path().join("r.json");
    assert_eq!(code(&gen(&input, &["--rank", "3"])), 0);
    let out = nlrm(&[
        "approx",
        "--in",
        s(&input),
        "--rank",
        "3",
        "--out",
        s(&x),
        "--report",
        s(&report),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let line = json(&out);
    let file: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(line, file);
    assert_eq!(line["experiment"], "approx");
    assert_eq!(line["summary"]["converged"], true);

    let a = read_matrix(&input, MatrixFormat::Csv).unwrap();
    let xm = read_matrix(&x, MatrixFormat::Csv).unwrap();
    assert!(xm.min_value() >= 0.0);
    let reported = line["summary"]["residual"].as_f64().unwrap();
    assert!(reported <= 1e-10);
    assert!((relative_residual(&a, &xm).unwrap() - reported).abs() <= 1e-12);
}

#[test]
fn nmf_spectrum_and_curve_commands() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("a.bin");
    assert_eq!(code(&gen(&input, &[])), 0);
    let inp = s(&input);

    let out = nlrm(&[
        "nmf",
        "--in",
        inp,
        "--rank",
        "4",
        "--algo",
        "hals",
        "--restarts",
        "2",
        "--nmf-max-iter",
        "50",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["methods"][0]["method"], "HALS");
    assert_eq!(v["methods"][0]["residuals"].as_array().unwrap().len(), 2);

    let out = nlrm(&["spectrum", "--in", inp, "--rank", "4"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let sources: Vec<_> = json(&out)["spectra"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["source"].clone())
        .collect();
    assert_eq!(sources, ["A", "X"]);

    let out = nlrm(&[
        "curve",
        "--in",
        inp,
        "--rank",
        "4",
        "--with-nmf",
        "mu,pg",
        "--restarts",
        "1",
        "--nmf-max-iter",
        "30",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let curves = json(&out)["curves"].as_array().unwrap().clone();
    let methods: Vec<_> = curves
        .iter()
        .map(|c| c["method"].as_str().unwrap().to_owned())
        .collect();
    assert_eq!(methods, ["NLRM", "MU", "PG"]);
    assert!(curves
        .iter()
        .all(|c| c["points"].as_array().unwrap().len() == 4));
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("a.csv");
    assert_eq!(code(&gen(&input, &[])), 0);
    let inp = s(&input);
    for args in [
        &["approx", "--in", inp, "--rank", "21"][..],
        &["approx", "--in", inp, "--rank", "0"],
        &["approx", "--in", inp, "--rank", "2", "--tol", "-1"],
        &["nmf", "--in", inp, "--rank", "2", "--algo", "nope"],
        &[
            "gen",
            "--rows",
            "3",
            "--cols",
            "3",
            "--rank",
            "5",
            "--seed",
            "0",
            "--out",
            "/tmp/unused.csv",
        ],
        &["experiment", "--suite", "face-style"],
        &["experiment", "--suite", "table4", "--dims", "100by80"],
        &["frobnicate"],
    ] {
        let out = nlrm(args);
        assert_eq!(
            code(&out),
            2,
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(out.stdout.is_empty(), "{args:?}");
    }
    assert_eq!(code(&nlrm(&["--help"])), 0);
}

#[test]
fn runtime_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let ragged = dir.path().join("r.csv");
    std::fs::write(&ragged, "1,2\n3\n").unwrap();
    let out = nlrm(&["approx", "--in", s(&ragged), "--rank", "1"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("r.csv:2"));

    let out = nlrm(&["approx", "--in", "/nonexistent/a.csv", "--rank", "1"]);
    assert_eq!(code(&out), 1);

    let zero = dir.path().join("z.csv");
    std::fs::write(&zero, "0,0\n0,0\n").unwrap();
    assert_eq!(code(&nlrm(&["approx", "--in", s(&zero), "--rank", "1"])), 1);
}

#[test]
fn experiment_echoes_configuration() {
    let out = nlrm(&[
        "experiment",
        "--suite",
        "figure1",
        "--seed",
        "11",
        "--dims",
        "100x80",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["experiment"], "figure1");
    assert_eq!(v["seed"], 11);
    assert_eq!(v["config"]["dims"], serde_json::json!([[100, 80]]));
    assert!(v["spectra"]
        .as_array()
        .unwrap()
        .iter()
        .all(|e| e["cell"].as_str().unwrap().starts_with("100x80/")));
    assert!(String::from_utf8_lossy(&out.stderr).contains("elapsed"));
}
