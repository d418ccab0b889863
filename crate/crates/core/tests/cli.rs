use std::fs;
use std::path::Path;

use tvopt::cli::{main_with_args, EXIT_INVARIANT, EXIT_OK, EXIT_USAGE};

fn run(args: &[&str]) -> i32 {
    main_with_args(std::iter::once("tvopt").chain(args.iter().copied()))
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

const GOLDEN: &str = include_str!("fixtures/golden_quadratic_trajectory.csv");

#[test]
fn quadratic_run_matches_golden_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    let code = run(&[
        "run",
        "--scenario",
        "quadratic",
        "--steps",
        "100",
        "--alpha",
        "0.1",
        "--p",
        "0.01",
        "--d",
        "0.01",
        "--seed",
        "7",
        "--out",
        &out,
    ]);
    assert_eq!(code, EXIT_OK);
    let text = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(text.lines().count(), 102, "header plus 101 rows");
    assert_eq!(text, GOLDEN);
    for f in ["metrics.csv", "bounds.csv", "bounds.txt", "oracle.csv", "plot.py"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
}

#[test]
fn golden_iterates_follow_the_scalar_recursion() {
    // x+ = clip(x - a (2 (x - s) + p x), -1, 1) with s = 0.5 sin(0.02 k)
    let (alpha, p) = (0.1, 0.01);
    let mut rows = csv::Reader::from_reader(GOLDEN.as_bytes());
    assert_eq!(
        rows.headers().unwrap().iter().collect::<Vec<_>>(),
        [
            "k",
            "x_0",
            "h",
            "h_star",
            "regret_avg",
            "violation_avg_max",
            "tracking_err",
            "sigma_k",
            "e_y_realized"
        ]
    );
    let mut x: f64 = 0.0;
    for (k, row) in rows.records().enumerate() {
        let row = row.unwrap();
        assert_eq!(row[0].parse::<usize>().unwrap(), k);
        let logged: f64 = row[1].parse().unwrap();
        assert!((logged - x).abs() < 1e-11, "k = {k}: {logged} vs {x}");
        let s = 0.5 * (0.02 * k as f64).sin();
        let h: f64 = row[2].parse().unwrap();
        assert!((h - (x - s).powi(2)).abs() < 1e-11);
        x = (x - alpha * (2.0 * (x - s) + p * x)).clamp(-1.0, 1.0);
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    assert_eq!(run(&["run", "--scenario", "nowhere", "--out", &out]), EXIT_USAGE);
    assert_eq!(run(&["frobnicate"]), EXIT_USAGE);
    assert_eq!(
        run(&["run", "--scenario", "quadratic", "--alpha", "-1", "--out", &out]),
        EXIT_USAGE
    );
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "scenario = 3\n").unwrap();
    assert_eq!(
        run(&["run", "--config", bad.to_str().unwrap(), "--out", &out]),
        EXIT_USAGE
    );
    assert_eq!(run(&["--help"]), EXIT_OK);
    assert_ne!(EXIT_INVARIANT, EXIT_USAGE);
}

#[test]
fn check_passes_on_builtin_scenarios() {
    assert_eq!(run(&["check", "--steps", "100"]), EXIT_OK);
}

#[test]
fn oracle_bounds_and_sweep_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    assert_eq!(
        run(&["oracle", "--scenario", "static", "--steps", "20", "--out", &out]),
        EXIT_OK
    );
    let oracle = fs::read_to_string(dir.path().join("oracle.csv")).unwrap();
    assert_eq!(oracle.lines().count(), 22);

    assert_eq!(
        run(&[
            "bounds",
            "--scenario",
            "quadratic",
            "--steps",
            "50",
            "--samples",
            "200",
            "--out",
            &out
        ]),
        EXIT_OK
    );
    let report = fs::read_to_string(dir.path().join("bounds.txt")).unwrap();
    assert!(report.contains("contraction = "), "{report}");

    assert_eq!(
        run(&[
            "sweep",
            "--scenario",
            "quadratic",
            "--steps",
            "50",
            "--alphas",
            "0.05,0.1",
            "--ps",
            "0.01",
            "--ds",
            "0.01",
            "--out",
            &out,
        ]),
        EXIT_OK
    );
    let mut sweep = csv::Reader::from_path(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(sweep.records().count(), 2);
}

#[test]
fn config_file_runs_like_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(
        &cfg,
        r#"
[scenario]
seed = 7
[scenario.model]
name = "quadratic"
amplitude = 0.5
omega = 0.02

[algorithm]
alpha = 0.1
p = 0.01
d = 0.01
case = "case2"
horizon = 100
"#,
    )
    .unwrap();
    let out = dir.path().join("a");
    assert_eq!(
        run(&[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap()
        ]),
        EXIT_OK
    );
    let text = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(text, GOLDEN);
}
