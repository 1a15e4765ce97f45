//! End-to-end tests of the binary: catalogue listing, file outputs,
//! round-trips, exit codes and determinism.

use std::path::Path;
use std::process::{Command, Output};

fn phsplit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phsplit"))
        .args(args)
        .env_remove("PHSPLIT_TOL")
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    assert!(
        output.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout.clone()).expect("utf8 output")
}

#[test]
fn schemes_list_contains_expected_rows() {
    let text = stdout(&phsplit(&["schemes", "list"]));
    assert!(text.contains("ea5-a | a | 5 | 4 | yes | yes"));
    assert!(text.contains("tj4 | - | 7 | 4 | no | no"));
    assert!(text.contains("ea6gen-ii | a | 11 | 6 | yes | yes"));
    assert!(text.contains("pbs6-b | b | 7 | 6 | yes | yes"));
}

#[test]
fn run_row_count_and_energy_roundtrip() {
    let text = stdout(&phsplit(&[
        "run",
        "--model",
        "oscillator",
        "--scheme",
        "ea5-a",
        "--h",
        "0.01",
        "--t-end",
        "5",
    ]));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 502, "steps + initial node + header");
    assert_eq!(lines[0], "t,x_1,x_2,H,dH_per_h");
    for line in &lines[1..] {
        let cells: Vec<&str> = line.split(',').collect();
        let x1: f64 = cells[1].parse().unwrap();
        let x2: f64 = cells[2].parse().unwrap();
        let h: f64 = cells[3].parse().unwrap();
        assert!((0.5 * (x1 * x1 + x2 * x2) - h).abs() <= 1e-12);
    }
}

#[test]
fn rigid_body_energy_is_non_increasing() {
    let text = stdout(&phsplit(&[
        "run",
        "--model",
        "rigidbody",
        "--scheme",
        "ea9-a",
        "--h",
        "0.01",
        "--t-end",
        "2",
    ]));
    let h_col = text
        .lines()
        .next()
        .unwrap()
        .split(',')
        .position(|c| c == "H")
        .unwrap();
    let energies: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(h_col).unwrap().parse().unwrap())
        .collect();
    for w in energies.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "H increased: {} -> {}", w[0], w[1]);
    }
}

#[test]
fn unknown_scheme_is_a_config_error() {
    let output = phsplit(&[
        "run",
        "--model",
        "oscillator",
        "--scheme",
        "ea99",
        "--h",
        "0.1",
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("unknown scheme"));
}

#[test]
fn autonomous_scheme_on_driven_model_is_rejected() {
    let output = phsplit(&[
        "run",
        "--model",
        "oscillator",
        "--driven",
        "--scheme",
        "ea5-a",
        "--h",
        "0.1",
    ]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn overflowing_run_is_a_numeric_failure() {
    let output = phsplit(&[
        "run",
        "--model",
        "oscillator",
        "--scheme",
        "tj4",
        "--h",
        "10000",
        "--t-end",
        "20000",
    ]);
    assert_eq!(output.status.code(), Some(3));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let args = [
        "run",
        "--model",
        "oscillator",
        "--driven",
        "--scheme",
        "pbs4-a",
        "--h",
        "0.05",
        "--t-end",
        "1",
        "--format",
        "json",
    ];
    let first = stdout(&phsplit(&args));
    let second = stdout(&phsplit(&args));
    assert_eq!(first, second);
    assert!(first.contains("\"supplied_rate\""));
}

#[test]
fn converge_emits_footer_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("study.csv");
    let output = phsplit(&[
        "converge",
        "--model",
        "oscillator",
        "--scheme",
        "strang-a",
        "--scheme",
        "ea5-a",
        "--h-grid",
        "1..5",
        "--t-end",
        "1",
        "--out",
        out.to_str().unwrap(),
        "--plot",
    ]);
    assert!(output.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("scheme,h,error,pairwise_order\n"));
    let footer: Vec<&str> = text
        .lines()
        .skip_while(|l| *l != "scheme,fitted_slope")
        .skip(1)
        .collect();
    assert_eq!(footer.len(), 2);
    let strang_slope: f64 = footer[0]
        .strip_prefix("strang-a,")
        .unwrap()
        .parse()
        .unwrap();
    assert!((strang_slope - 2.0).abs() < 0.3, "strang slope {strang_slope}");
    let ea5_slope: f64 = footer[1].strip_prefix("ea5-a,").unwrap().parse().unwrap();
    assert!((ea5_slope - 4.0).abs() < 0.3, "ea5-a slope {ea5_slope}");

    let svg = std::fs::read_to_string(dir.path().join("study.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("ea5-a"));
}

#[test]
fn dissipation_summary_reports_violations() {
    let tj = stdout(&phsplit(&[
        "dissipation",
        "--model",
        "oscillator",
        "--scheme",
        "tj4",
        "--h",
        "0.09",
        "--t-end",
        "5",
    ]));
    let violation_line = tj
        .lines()
        .find(|l| l.starts_with("# first_violation"))
        .unwrap();
    assert_ne!(violation_line, "# first_violation,none");

    let ea5 = stdout(&phsplit(&[
        "dissipation",
        "--model",
        "oscillator",
        "--scheme",
        "ea5-a",
        "--h",
        "0.09",
        "--t-end",
        "5",
    ]));
    assert!(ea5.lines().any(|l| l == "# first_violation,none"));
}

#[test]
fn driven_dissipation_estimator_tracks_supplied_rate() {
    let text = stdout(&phsplit(&[
        "dissipation",
        "--model",
        "oscillator",
        "--driven",
        "--scheme",
        "pbs4-a",
        "--h",
        "0.01",
        "--t-end",
        "1",
    ]));
    let mut max_gap = 0.0f64;
    for line in text.lines().skip(1).filter(|l| !l.starts_with('#')) {
        let cells: Vec<&str> = line.split(',').collect();
        if cells[5].is_empty() {
            continue;
        }
        let d_rate: f64 = cells[5].parse().unwrap();
        let supplied: f64 = cells[6].parse().unwrap();
        max_gap = max_gap.max((d_rate - supplied).abs());
    }
    assert!(max_gap > 0.0);
    assert!(max_gap < 1e-3, "estimator rate vs supplied rate gap {max_gap}");
}

#[test]
fn custom_model_file_runs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.txt");
    // the benchmark oscillator written out by hand, driven through one port
    let omega = 1000.0f64.sqrt();
    std::fs::write(
        &path,
        format!("2 1\n0 {omega}\n{} 0\n0 0\n0 1\n0\n-1\n0 1\n", -omega),
    )
    .unwrap();
    let text = stdout(&phsplit(&[
        "run",
        "--model",
        "custom",
        "--model-file",
        path.to_str().unwrap(),
        "--scheme",
        "pbs4-a",
        "--h",
        "0.05",
        "--t-end",
        "1",
    ]));
    assert_eq!(text.lines().count(), 22);
    assert!(text.starts_with("t,x_1,x_2,H,dH_per_h,d_est_per_h,supplied_rate"));

    // same file with a broken structure matrix must be rejected
    std::fs::write(&path, "2 0\n1 0 0 1\n0 0 0 0\n").unwrap();
    let output = phsplit(&[
        "run",
        "--model",
        "custom",
        "--model-file",
        path.to_str().unwrap(),
        "--scheme",
        "ea5-a",
        "--h",
        "0.05",
        "--t-end",
        "1",
    ]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn tolerance_env_var_is_honored() {
    let output = Command::new(env!("CARGO_BIN_EXE_phsplit"))
        .args(["selftest"])
        .env("PHSPLIT_TOL", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("PHSPLIT_TOL"));
}

#[test]
fn selftest_passes() {
    let text = stdout(&phsplit(&["selftest", "--seed", "7"]));
    assert!(text.contains("all 5 suites passed"));
    assert!(Path::new(env!("CARGO_BIN_EXE_phsplit")).exists());
}
