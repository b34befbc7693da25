//! End-to-end checks of the `vcm-sim` binary: exit codes, strict parsing
//! and the column layout of every table it writes.

use std::path::Path;
use std::process::{Command, Output};

use vcm_sim::config::RunConfig;
use vcm_sim::io::{CYCLE_COLUMNS, IV_COLUMNS, STATUS_COLUMNS, SUMMARY_COLUMNS, SWEEP_COLUMNS, TRACE_COLUMNS};

const COARSE: &str = "
[mesh]
dy = 2e-9
dz_electrode = 1e-8
dz_reservoir = 3e-9
dz_switch = 1e-9
dz_cml = 1e-8
";

fn run(args: &[&str], config: Option<&Path>, out: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_vcm-sim"));
    cmd.args(args).arg("--out").arg(out);
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    cmd.output().expect("failed to launch vcm-sim")
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path
}

/// Header row of a table, after the `#` metadata lines.
fn columns(path: &Path) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines().find(|l| !l.starts_with('#')).unwrap().to_string()
}

fn rows(path: &Path) -> Vec<String> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines().filter(|l| !l.starts_with('#')).skip(1).map(str::to_string).collect()
}

fn summary(path: &Path, key: &str) -> String {
    rows(path)
        .into_iter()
        .find_map(|r| r.strip_prefix(&format!("{key},")).map(str::to_string))
        .unwrap_or_else(|| panic!("{key} missing from {}", path.display()))
}

#[test]
fn print_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["print-config"], None, &dir.path().join("out"));
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(RunConfig::from_toml_str(&text).unwrap(), RunConfig::default());
}

#[test]
fn unknown_key_exits_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "seed = 1\n[materials]\nk1 = 9.4\nk3 = 1.0\n");
    let out_dir = dir.path().join("out");
    let out = run(&["form"], Some(&cfg), &out_dir);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("k3"), "{err}");
    assert!(err.contains("line 4"), "{err}");
    assert!(!out_dir.exists());
}

#[test]
fn out_of_range_value_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[compliance]\ni_cc = -1.0\n");
    let out_dir = dir.path().join("out");
    let out = run(&["cycle"], Some(&cfg), &out_dir);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_dir.exists());
}

#[test]
fn missing_config_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["form"], Some(&dir.path().join("nope.toml")), &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn zero_amplitude_reports_no_forming() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "{COARSE}\n[[waveforms.forming.segments]]\nkind = \"pulse\"\namplitude = 0.0\nduration = 1e-4\n"
    );
    let cfg = write_config(dir.path(), &text);
    let out_dir = dir.path().join("out");
    let out = run(&["form"], Some(&cfg), &out_dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = out_dir.join("summary.csv");
    assert_eq!(columns(&s), SUMMARY_COLUMNS);
    assert_eq!(summary(&s, "v_f"), "no-forming");
    assert_eq!(columns(&out_dir.join("trace.csv")), TRACE_COLUMNS);
    assert!(out_dir.join("final.vtk").exists());
}

#[test]
fn single_cycle_uniformity_unavailable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), COARSE);
    let out_dir = dir.path().join("out");
    let out = run(&["cycle", "--cycles", "1"], Some(&cfg), &out_dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = out_dir.join("summary.csv");
    assert_eq!(summary(&s, "uniformity_hrs"), "unavailable");
    assert_eq!(summary(&s, "uniformity_lrs"), "unavailable");
    let cycles = out_dir.join("cycles.csv");
    assert_eq!(columns(&cycles), CYCLE_COLUMNS);
    assert_eq!(rows(&cycles).len(), 1);
    assert_eq!(columns(&out_dir.join("set_001.csv")), TRACE_COLUMNS);
    assert_eq!(columns(&out_dir.join("reset_001.csv")), TRACE_COLUMNS);
}

#[test]
fn zero_cycles_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["cycle", "--cycles", "0"], None, &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_table_shape_and_baseline_consistency() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{COARSE}\n[sweep]\nk1 = [9.4, 12.0]\nk2 = [5.75, 3.0]\ncycles = 1\n");
    let cfg = write_config(dir.path(), &text);
    let sweep_dir = dir.path().join("sweep");
    let out = run(&["sweep", "--jobs", "2"], Some(&cfg), &sweep_dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let table = sweep_dir.join("sweep.csv");
    assert_eq!(columns(&table), SWEEP_COLUMNS);
    let data = rows(&table);
    assert_eq!(data.len(), 4);
    let status = sweep_dir.join("sweep_status.csv");
    assert_eq!(columns(&status), STATUS_COLUMNS);
    assert_eq!(rows(&status).len(), 4);

    // first row is the baseline point; the sweep mesh defaults to the
    // same coarse spacing set above for `form`
    let baseline: Vec<&str> = data[0].split(',').collect();
    assert_eq!(baseline[0].parse::<f64>().unwrap(), 9.4);
    assert_eq!(baseline[1].parse::<f64>().unwrap(), 5.75);
    let form_dir = dir.path().join("form");
    let out = run(&["form"], Some(&cfg), &form_dir);
    assert!(out.status.success());
    assert_eq!(summary(&form_dir.join("summary.csv"), "v_f"), baseline[2]);
}

#[test]
fn sweep_rejects_empty_axis() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[sweep]\nk1 = []\n");
    let out = run(&["sweep"], Some(&cfg), &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn iv_table_columns() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "{COARSE}\n[[waveforms.iv.segments]]\nkind = \"ramp\"\nstart = 0.0\nend = -0.5\nduration = 6e-4\npoints = 6\n"
    );
    let cfg = write_config(dir.path(), &text);
    let out_dir = dir.path().join("out");
    let out = run(&["iv"], Some(&cfg), &out_dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let iv = out_dir.join("iv.csv");
    assert_eq!(columns(&iv), IV_COLUMNS);
    assert_eq!(rows(&iv).len(), 6);
}

#[test]
fn header_records_seed_and_hash() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "{COARSE}\n[[waveforms.forming.segments]]\nkind = \"pulse\"\namplitude = -0.5\nduration = 1e-4\n"
    );
    let cfg = write_config(dir.path(), &text);
    let out_dir = dir.path().join("out");
    let out = run(&["form", "--seed", "77"], Some(&cfg), &out_dir);
    assert!(out.status.success());
    let mut expected = RunConfig::from_toml_str(&text).unwrap();
    expected.seed = 77;
    let trace = std::fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    let meta: Vec<&str> = trace.lines().take(4).collect();
    assert_eq!(meta[0], format!("# vcm-sim {}", env!("CARGO_PKG_VERSION")));
    assert_eq!(meta[1], "# command = form");
    assert_eq!(meta[2], "# seed = 77");
    assert_eq!(meta[3], format!("# config_sha256 = {}", expected.hash()));
}
