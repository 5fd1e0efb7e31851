//! End-to-end checks of the command-line interface: exit codes, output
//! determinism, and agreement with the library entry points.

use std::path::Path;
use std::process::{Command, Output};

use scs_teleport::sweep::{render_csv, run_sweep, OutputFormat, SweepConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_scs-teleport"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("stdout is UTF-8")
}

fn small_config() -> SweepConfig {
    SweepConfig {
        alpha_sq_grid: vec![1.0, 4.0],
        theta_grid: vec![0.0, 0.9, std::f64::consts::PI],
        phi_grid: vec![0.7],
        truncation_tail: 1e-12,
        outputs: vec!["fig1_concurrence".into(), "fig8_avg_fidelity".into()],
        format: OutputFormat::Csv,
    }
}

fn write_config(dir: &Path, config: &SweepConfig) -> std::path::PathBuf {
    let path = dir.join("grid.json");
    std::fs::write(&path, config.to_json_string()).expect("config written");
    path
}

#[test]
fn validate_passes_and_lists_flags() {
    let output = run(&["validate"]);
    assert!(
        output.status.success(),
        "validate exited with {:?}: {}",
        output.status.code(),
        String::from_utf8_lossy(&output.stderr)
    );
    let text = stdout_of(&output);
    assert!(
        text.contains("overall: PASS"),
        "report must state the overall verdict:\n{text}"
    );
    assert!(
        text.contains("number-coefficient-normalization"),
        "report must list the printed-form disagreements:\n{text}"
    );
}

#[test]
fn validate_writes_json_report() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("report.json");
    let output = run(&[
        "validate",
        "--format",
        "json",
        "--out",
        path.to_str().expect("utf-8 path"),
    ]);
    assert!(
        output.status.success(),
        "validate exited with {:?}",
        output.status.code()
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).expect("report file"))
            .expect("report parses as JSON");
    assert!(
        report["passed"].as_bool() == Some(true),
        "report must pass: {report}"
    );
    let checks = report["checks"].as_array().expect("checks array");
    assert!(checks.len() >= 15, "expected ≥ 15 checks, got {}", checks.len());
    let flags = report["flags"].as_array().expect("flags array");
    assert!(flags.len() >= 12, "expected ≥ 12 flags, got {}", flags.len());
}

#[test]
fn figures_are_deterministic_and_named_after_outputs() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = small_config();
    let grid = write_config(dir.path(), &config);
    let out1 = dir.path().join("run1");
    let out2 = dir.path().join("run2");
    for out in [&out1, &out2] {
        let output = run(&[
            "figures",
            "--grid",
            grid.to_str().expect("utf-8 path"),
            "--out",
            out.to_str().expect("utf-8 path"),
        ]);
        assert!(
            output.status.success(),
            "figures exited with {:?}: {}",
            output.status.code(),
            String::from_utf8_lossy(&output.stderr)
        );
    }
    for name in &config.outputs {
        let file = format!("{name}.csv");
        let a = std::fs::read(out1.join(&file)).expect("first run wrote the file");
        let b = std::fs::read(out2.join(&file)).expect("second run wrote the file");
        assert!(a == b, "figure file {file} differs between identical runs");
        assert!(!a.is_empty(), "figure file {file} is empty");
    }
}

#[test]
fn sweep_stdout_matches_library_output() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = small_config();
    let grid = write_config(dir.path(), &config);
    let output = run(&["sweep", "--grid", grid.to_str().expect("utf-8 path")]);
    assert!(
        output.status.success(),
        "sweep exited with {:?}: {}",
        output.status.code(),
        String::from_utf8_lossy(&output.stderr)
    );
    let rows = run_sweep(&config).expect("library sweep");
    let expected = render_csv(&rows).expect("library rendering");
    let got = stdout_of(&output);
    assert!(
        got == expected,
        "sweep output differs from the library rendering\n--- binary ---\n{got}\n--- library ---\n{expected}"
    );
    let grid_points =
        config.alpha_sq_grid.len() * config.theta_grid.len() * config.phi_grid.len();
    assert!(
        got.lines().count() == 1 + grid_points,
        "expected one row per grid point plus a header"
    );
}

#[test]
fn sweep_json_override_produces_parseable_rows() {
    let output = run(&[
        "sweep",
        "--alpha-sq",
        "1,4",
        "--theta",
        "0.9",
        "--phi",
        "0.7",
        "--format",
        "json",
    ]);
    assert!(
        output.status.success(),
        "sweep exited with {:?}",
        output.status.code()
    );
    let rows: serde_json::Value =
        serde_json::from_str(&stdout_of(&output)).expect("JSON output parses");
    let rows = rows.as_array().expect("array of rows");
    assert!(rows.len() == 2, "expected 2 rows, got {}", rows.len());
    for row in rows {
        let map = row.as_object().expect("row object");
        for (key, value) in map {
            assert!(
                value.as_f64().is_some_and(f64::is_finite),
                "field {key} is not a finite number: {value}"
            );
        }
    }
}

#[test]
fn branch_table_lists_all_five_cases() {
    let output = run(&[
        "branch-table",
        "--alpha-sq",
        "4",
        "--theta",
        "0.9",
        "--phi",
        "0.7",
    ]);
    assert!(
        output.status.success(),
        "branch-table exited with {:?}",
        output.status.code()
    );
    let text = stdout_of(&output);
    for case in ["i ", "ii ", "iii ", "iv ", "v "] {
        assert!(
            text.lines().any(|l| l.starts_with(case)),
            "missing case row `{case}`:\n{text}"
        );
    }
    assert!(
        text.contains("sum = 1.000000000000"),
        "branch probabilities must sum to one:\n{text}"
    );
    assert!(
        text.contains("average fidelity"),
        "table must report the average fidelity:\n{text}"
    );
}

#[test]
fn bad_inputs_exit_with_usage_code() {
    // Negative mean photon number.
    let output = run(&["sweep", "--alpha-sq=-3"]);
    assert!(
        output.status.code() == Some(2),
        "negative |α|² must exit 2, got {:?}",
        output.status.code()
    );
    // Unusable tail bound.
    let output = run(&["validate", "--tail", "0.5"]);
    assert!(
        output.status.code() == Some(2),
        "loose tail bound must exit 2, got {:?}",
        output.status.code()
    );
    // Unknown flags are usage errors too.
    let output = run(&["sweep", "--no-such-flag"]);
    assert!(
        output.status.code() == Some(2),
        "unknown flag must exit 2, got {:?}",
        output.status.code()
    );
}

#[test]
fn missing_config_file_is_an_io_error() {
    let output = run(&["figures", "--grid", "/nonexistent/grid.json"]);
    assert!(
        output.status.code() == Some(3),
        "missing config must exit 3, got {:?}",
        output.status.code()
    );
}
