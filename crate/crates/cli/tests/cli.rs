use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use clockinterf_cli::{read_manifest, verify_manifest, CliError};

fn clockinterf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_clockinterf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

/// Data rows of a CSV written by the tool, parsed as floats.
fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# clockinterf "));
    let body = lines.collect::<Vec<_>>().join("\n");
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let header = reader.headers().unwrap().iter().map(String::from).collect();
    let rows = reader
        .records()
        .map(|r| r.unwrap().iter().map(|x| x.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn visibility_nulls_at_half_periods() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "v.json",
        r#"{"mode": "visibility", "f1": 1.0, "f2": 2.0, "t_grid": {"start": 0, "stop": 3, "points": 301}}"#,
    );
    let out = dir.path().join("out");
    let o = clockinterf(&["visibility", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let (header, rows) = csv_rows(&out.join("visibility.csv"));
    assert_eq!(header, ["t_s", "visibility", "residual"]);
    assert_eq!(rows.len(), 301);
    for r in &rows {
        assert!((r[1] - (PI * r[0]).cos().abs()).abs() < 1e-9);
    }
    let nulls = summary(&out)["results"]["nulls"]["times_s"].clone();
    let nulls: Vec<f64> = serde_json::from_value(nulls).unwrap();
    assert_eq!(nulls.len(), 3);
    for (t, expected) in nulls.iter().zip([0.5, 1.5, 2.5]) {
        assert!((t - expected).abs() < 1e-9, "{t}");
    }
}

#[test]
fn redshift_compare_reports_beat_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "r.json",
        r#"{"units": "scaled", "f1": 1.0, "f2": 1.25, "eps": 4e-4}"#,
    );
    let out = dir.path().join("out");
    let o = clockinterf(&["redshift-compare", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&out);
    let ratio = s["results"]["beats"]["beat_ratio"].as_f64().unwrap();
    assert!((ratio - 1.0004).abs() < 1e-9, "{ratio}");
    assert_eq!(s["results"]["beat_ratio_exact"].as_f64().unwrap(), 1.0004);
    assert!(out.join("visibility_reference.csv").exists());
    assert!(out.join("visibility_shifted.csv").exists());
}

#[test]
fn fringe_at_zero_time_is_raised_cosine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "f.json", r#"{"f1": 1.0, "f2": 1.25}"#);
    let out = dir.path().join("out");
    let o = clockinterf(&["fringe", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = csv_rows(&out.join("fringe.csv"));
    assert_eq!(header, ["phase_rad", "p_g", "p_c1", "p_c2"]);
    assert_eq!(rows.len(), 64);
    for r in rows {
        assert!((r[1] - (1.0 + r[0].cos()) / 2.0).abs() < 1e-12);
        assert!((r[1] + r[2] + r[3] - 1.0).abs() < 1e-12);
    }
}

#[test]
fn sampled_fringe_has_count_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "f.json",
        r#"{"f1": 1.0, "f2": 1.25, "interrogation_s": 0.7, "noise": {"atoms_per_point": 500}}"#,
    );
    let out = dir.path().join("out");
    let o = clockinterf(&["fringe", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "4"]);
    assert!(o.status.success());
    let (header, rows) = csv_rows(&out.join("fringe.csv"));
    assert_eq!(header, ["phase_rad", "p_g", "p_c1", "p_c2", "n_g", "n_c1", "n_c2"]);
    for r in rows {
        assert_eq!(r[4] + r[5] + r[6], 500.0);
        assert_eq!(r[1], r[4] / 500.0);
    }
    assert_eq!(read_manifest(&out.join("manifest.json")).unwrap().seed, 4);
}

#[test]
fn json_format() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "f.json", r#"{"f1": 1.0, "f2": 1.25, "n_phases": 8}"#);
    let out = dir.path().join("out");
    let o = clockinterf(&["fringe", "--config", &cfg, "--out", out.to_str().unwrap(), "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("fringe.json")).unwrap()).unwrap();
    assert_eq!(v["schema"], "clockinterf/fringe/v1");
    assert_eq!(v["rows"].as_array().unwrap().len(), 8);
    assert!(verify_manifest(&out.join("manifest.json")).is_ok());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();

    let bad_order = write_config(dir.path(), "a.json", r#"{"f1": 2.0, "f2": 1.0}"#);
    let o = clockinterf(&["fringe", "--config", &bad_order, "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("larger transition frequency"));

    let o = clockinterf(&["fringe", "--config", "/nonexistent/c.json", "--out", out]);
    assert_eq!(o.status.code(), Some(2));

    let wrong_mode = write_config(dir.path(), "b.json", r#"{"mode": "stack", "f1": 1, "f2": 2}"#);
    let o = clockinterf(&["fringe", "--config", &wrong_mode, "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`mode`"));

    let physical = write_config(
        dir.path(),
        "c.json",
        r#"{"units": "physical", "f1": 4e14, "f2": 4.1e14, "redshift": {"delta_h": 2e13}}"#,
    );
    let o = clockinterf(&["stack", "--config", &physical, "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("redshift.delta_h"));

    // too few samples per period for null tracking over the requested span
    let coarse = write_config(
        dir.path(),
        "d.json",
        r#"{"f1": 1, "f2": 2, "eps": 0.05, "stack": {"n_periods": 100000000}}"#,
    );
    let o = clockinterf(&["stack", "--config", &coarse, "--out", out]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error: stacking:"));

    let ok = write_config(dir.path(), "e.json", r#"{"f1": 1, "f2": 2}"#);
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let o = clockinterf(&["fringe", "--config", &ok, "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn manifest_detects_tampering_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "m.json",
        r#"{"f1": 1.0, "f2": 1.25, "seed": 11, "n_phases": 16, "t_grid": {"start": 0, "stop": 8, "points": 60}, "noise": {"atoms_per_point": 800}}"#,
    );
    let first = dir.path().join("first");
    let o = clockinterf(&["visibility", "--config", &cfg, "--out", first.to_str().unwrap()]);
    assert!(o.status.success());
    let manifest_path = first.join("manifest.json");
    let m = verify_manifest(&manifest_path).unwrap();
    let files: Vec<&str> = m.outputs.iter().map(|o| o.file.as_str()).collect();
    assert_eq!(files, ["visibility.csv", "summary.json"]);
    assert_eq!(m.config.seed, 11);
    assert!(m.started_at <= m.finished_at);

    let second = dir.path().join("second");
    let o = clockinterf(&[
        "replay",
        manifest_path.to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
        "--threads",
        "3",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        std::fs::read(first.join("visibility.csv")).unwrap(),
        std::fs::read(second.join("visibility.csv")).unwrap()
    );

    let csv = first.join("visibility.csv");
    let mut bytes = std::fs::read(&csv).unwrap();
    let last = bytes.len() - 2;
    bytes[last] = if bytes[last] == b'1' { b'2' } else { b'1' };
    std::fs::write(&csv, bytes).unwrap();
    match verify_manifest(&manifest_path) {
        Err(CliError::DigestMismatch { files }) => assert_eq!(files, ["visibility.csv"]),
        other => panic!("tampering not detected: {other:?}"),
    }
    let o = clockinterf(&["verify", manifest_path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn montecarlo_scatter_shrinks_with_atoms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "mc.json",
        r#"{"f1": 1.0, "f2": 1.25, "interrogation_s": 0.5, "montecarlo": {"atoms": [100, 10000], "replicates": 50}}"#,
    );
    let out = dir.path().join("out");
    let o = clockinterf(&["montecarlo", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let (_, rows) = csv_rows(&out.join("montecarlo.csv"));
    assert_eq!(rows.len(), 100);
    let slope = summary(&out)["results"]["stderr_loglog_slope"].as_f64().unwrap();
    assert!((slope + 0.5).abs() < 0.15, "{slope}");
}

#[test]
fn physical_stack_uses_extended_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "p.json",
        r#"{"units": "physical", "f1": 429.228e12, "f2": 429.229e12, "redshift": {"g": 9.8, "delta_h": 1.0}, "stack": {"tau_s": 1.0}}"#,
    );
    let out = dir.path().join("out");
    let o = clockinterf(&["stack", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&out);
    let check = &s["results"]["verification"]["extended_precision"];
    assert!(check["relative_error"].as_f64().unwrap() < 1e-2);
    assert_eq!(s["results"]["eps"]["rounded_c_squared"].as_f64().unwrap(), 9.8 / 9e16);
    let (header, rows) = csv_rows(&out.join("stack.csv"));
    assert_eq!(header, ["n_periods", "cumulative_shift_periods", "null_shift_s"]);
    assert_eq!(rows.last().unwrap()[0], 1000.0);
}
