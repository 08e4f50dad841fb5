use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn tfbs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tfbs"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .expect("run tfbs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    assert_eq!(code(o), 0, "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn solve_summary() {
    let v = json(&tfbs(&[
        "solve",
        "--problem",
        "example1",
        "--alpha",
        "0.5",
        "--M",
        "10",
        "--N",
        "10",
    ]));
    let linf = v["linf"].as_f64().unwrap();
    assert!((linf - 1.779e-3).abs() < 0.15 * 1.779e-3);
    assert_eq!(v["final_level"].as_array().unwrap().len(), 11);
    assert_eq!(v["boundary"], "collocation");
}

#[test]
fn solve_from_config_with_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"problem": "example2", "alpha": [0.3], "M": 10, "N": 10, "stability_report": true}"#,
    )
    .unwrap();
    let v = json(&tfbs(&["solve", "--config", cfg.to_str().unwrap()]));
    assert!((v["l2_rss"].as_f64().unwrap() - 3.104e-2).abs() < 0.15 * 3.104e-2);
    assert_eq!(v["stability"]["condition_ok"], false);
    let w = json(&tfbs(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--problem",
        "example1",
    ]));
    assert_eq!(w["problem"], "example1");
}

#[test]
fn history_export() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = tfbs(&[
        "solve",
        "--alpha",
        "0.5",
        "--M",
        "8",
        "--N",
        "3",
        "--out-dir",
        out,
        "--history-csv",
    ]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(dir.path().join("history.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "step,node,s,eta,value");
    assert_eq!(text.lines().count(), 1 + 9 * 4);
    assert!(dir.path().join("summary.json").exists());
}

fn run_convergence(dir: &Path) -> Output {
    tfbs(&[
        "convergence",
        "--problem",
        "example2",
        "--schedule",
        "table4",
        "--alpha",
        "0.5,0.7",
        "--compare-golden",
        "--out-dir",
        dir.to_str().unwrap(),
    ])
}

#[test]
fn convergence_outputs_are_deterministic_and_round_trip() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(code(&run_convergence(a.path())), 0);
    assert_eq!(code(&run_convergence(b.path())), 0);
    for f in ["convergence.csv", "convergence.json", "golden_report.csv"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f} differs between identical runs"
        );
    }
    let csv = fs::read_to_string(a.path().join("convergence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 3);

    let c = tempfile::tempdir().unwrap();
    let o = tfbs(&[
        "compare-golden",
        "--input",
        a.path().join("convergence.json").to_str().unwrap(),
        "--out-dir",
        c.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        fs::read(a.path().join("golden_report.csv")).unwrap(),
        fs::read(c.path().join("golden_report.csv")).unwrap()
    );
}

#[test]
fn weights_dump() {
    let dir = tempfile::tempdir().unwrap();
    let o = tfbs(&[
        "weights",
        "--M",
        "12",
        "--dump",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    for f in ["X.csv", "Y.csv"] {
        let text = fs::read_to_string(dir.path().join(f)).unwrap();
        assert_eq!(text.lines().count(), 13);
        for line in text.lines() {
            let vals: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
            assert_eq!(vals.len(), 13);
            assert!(vals.iter().sum::<f64>().abs() < 1e-9);
        }
    }
}

#[test]
fn plot_data_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = tfbs(&[
        "plot-data",
        "--problem",
        "example1",
        "--alpha",
        "0.7",
        "--M",
        "20",
        "--N",
        "10",
        "--out-dir",
        out,
    ]);
    assert_eq!(code(&o), 0);
    let surface = fs::read_to_string(dir.path().join("surface.csv")).unwrap();
    assert_eq!(surface.lines().next().unwrap(), "s,eta,numerical,exact");
    assert_eq!(surface.lines().count(), 1 + 21 * 11);
    let curve = fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 1 + 21);

    let demo = tempfile::tempdir().unwrap();
    let o = tfbs(&[
        "plot-data",
        "--problem",
        "european-call-demo",
        "--alpha",
        "0.8",
        "--M",
        "16",
        "--N",
        "5",
        "--out-dir",
        demo.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let curve = fs::read_to_string(demo.path().join("curve.csv")).unwrap();
    assert_eq!(curve.lines().next().unwrap(), "s,numerical");
}

#[test]
fn zero_problem_gives_zero_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("zero.json");
    fs::write(
        &cfg,
        r#"{"problem": "custom", "custom": {
            "coefficients": {"a": 1.0, "b": 0.0, "c": 1.0},
            "domain": [0.0, 1.0], "horizon": 1.0,
            "initial": [], "left_bc": [], "right_bc": [], "exact": []}}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = tfbs(&[
        "plot-data",
        "--config",
        cfg.to_str().unwrap(),
        "--alpha",
        "0.5",
        "--M",
        "8",
        "--N",
        "4",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let surface = fs::read_to_string(out.join("surface.csv")).unwrap();
    for line in surface.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!((cols[2], cols[3]), (0.0, 0.0));
    }
}

#[test]
fn exit_codes() {
    // validation
    assert_eq!(
        code(&tfbs(&[
            "solve",
            "--problem",
            "nope",
            "--alpha",
            "0.5",
            "--M",
            "10",
            "--N",
            "10"
        ])),
        1
    );
    assert_eq!(
        code(&tfbs(&[
            "solve", "--alpha", "1.5", "--M", "10", "--N", "10"
        ])),
        1
    );
    assert_eq!(
        code(&tfbs(&["convergence", "--schedule", "20x10,10x20"])),
        1
    );
    assert_eq!(code(&tfbs(&["frobnicate"])), 1);
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"unknown_field": 1}"#).unwrap();
    assert_eq!(
        code(&tfbs(&["solve", "--config", bad.to_str().unwrap()])),
        1
    );

    // numerical: a source that overflows
    let cfg = dir.path().join("overflow.json");
    fs::write(
        &cfg,
        r#"{"problem": "custom", "custom": {
            "coefficients": {"a": 1.0, "b": 0.0, "c": 1.0},
            "domain": [0.0, 1.0], "horizon": 1.0,
            "initial": [], "left_bc": [], "right_bc": [],
            "source": [{"coef": 1e308}, {"coef": 1e308}]}}"#,
    )
    .unwrap();
    assert_eq!(
        code(&tfbs(&[
            "solve",
            "--config",
            cfg.to_str().unwrap(),
            "--alpha",
            "0.5",
            "--M",
            "8",
            "--N",
            "2"
        ])),
        2
    );

    // i/o
    let missing = dir.path().join("missing.json");
    assert_eq!(
        code(&tfbs(&["solve", "--config", missing.to_str().unwrap()])),
        3
    );
    let file = dir.path().join("plain");
    fs::write(&file, "x").unwrap();
    let under_file = file.join("sub");
    assert_eq!(
        code(&tfbs(&[
            "solve",
            "--alpha",
            "0.5",
            "--M",
            "8",
            "--N",
            "2",
            "--out-dir",
            under_file.to_str().unwrap()
        ])),
        3
    );
}
