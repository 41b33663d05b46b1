//! Black-box tests of the `schur` binary: exit codes, report files, and the
//! printed contracts.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn schur(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_schur"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.json");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn selftest_passes_and_filters() {
    let out = schur(&["selftest"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("tr(P_r)=(n-r)sigma_r"));
    assert!(text.contains("0 failed"));

    let out = schur(&["selftest", "--filter", "newton"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("newton"));
    assert!(!text.contains("oracle"), "filter must drop other groups:\n{text}");

    let out = schur(&["selftest", "--filter", "zzz-no-such-check"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn list_prints_the_contract_strings() {
    let out = schur(&["list"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("thm-1.7 (ine-r1, ine-r2)"));
    assert!(text.contains("spun_torus4(R1, r, d), requires d > r"));
    assert!(text.contains("\"Ric >= -(n-1)K\""));
    assert!(text.contains("\"Ric >= -K\""));
}

#[test]
fn config_rejection_is_exit_2_with_a_path() {
    let dir = tempfile::tempdir().unwrap();

    let out = schur(&["verify", &dir.path().join("missing.json").to_string_lossy()]);
    assert_eq!(code(&out), 2);

    let cfg = write_config(dir.path(), r#"{"version": 3, "tasks": []}"#);
    let out = schur(&["verify", &cfg]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("config.version"), "{}", stderr(&out));

    let cfg = write_config(
        dir.path(),
        r#"{
            "version": 1,
            "tasks": [{
                "geometry": {"kind": "flat", "n": 3, "len": 1.0, "bogus": 1},
                "resolutions": [8],
                "jobs": [{"theorem": "thm-1.11", "k": 2}]
            }]
        }"#,
    );
    let out = schur(&["verify", &cfg]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("bogus"), "{}", stderr(&out));

    let cfg = write_config(
        dir.path(),
        r#"{
            "version": 1,
            "tasks": [{
                "geometry": {"kind": "flat", "n": 3, "len": 1.0},
                "resolutions": [8],
                "jobs": [{"theorem": "thm-1.9"}]
            }]
        }"#,
    );
    let out = schur(&["verify", &cfg]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("jobs[0].r"), "{}", stderr(&out));
}

const FLAT_K2: &str = r#"{
    "version": 1,
    "tasks": [{
        "geometry": {"kind": "flat", "n": 3, "len": 1.0},
        "resolutions": [8],
        "jobs": [{"theorem": "thm-1.11", "k": 2}]
    }]
}"#;

#[test]
fn verify_writes_reports_in_the_requested_formats() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), FLAT_K2);
    let out_dir = dir.path().join("out");

    let out = schur(&["verify", &cfg, "--out", &out_dir.to_string_lossy(), "--format", "csv"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(out_dir.join("reports.csv").exists());
    assert!(!out_dir.join("reports.json").exists());

    let out = schur(&["verify", &cfg, "--out", &out_dir.to_string_lossy(), "--format", "both"]);
    assert_eq!(code(&out), 0);
    let csv = fs::read_to_string(out_dir.join("reports.csv")).unwrap();
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("theorem,geometry,resolution,"));
    assert_eq!(lines.count(), 2, "one row per equation form");
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("reports.json")).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 2);
    assert_eq!(json[0]["equality"], true, "flat T^3 is the k-scalar equality case");
}

#[test]
fn verify_is_deterministic_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), FLAT_K2);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(code(&schur(&["verify", &cfg, "--out", &a.to_string_lossy()])), 0);
    assert_eq!(code(&schur(&["verify", &cfg, "--out", &b.to_string_lossy()])), 0);
    let csv_a = fs::read(a.join("reports.csv")).unwrap();
    let csv_b = fs::read(b.join("reports.csv")).unwrap();
    assert_eq!(csv_a, csv_b, "CSV bytes must be identical");
}

#[test]
fn hypothesis_failure_exits_3_and_still_writes_reports() {
    // The torus of revolution has negatively curved regions, so forcing
    // K = 0 violates the nonnegative-Ricci hypothesis.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{
            "version": 1,
            "tasks": [{
                "geometry": {"kind": "torus3", "r1": 2.0, "r": 0.5},
                "resolutions": [16],
                "jobs": [{"theorem": "thm-1.8", "tensor": {"kind": "ricci"}}]
            }]
        }"#,
    );
    let out_dir = dir.path().join("out");
    let out = schur(&["verify", &cfg, "--out", &out_dir.to_string_lossy()]);
    assert_eq!(code(&out), 3, "stdout: {}", stdout(&out));
    let csv = fs::read_to_string(out_dir.join("reports.csv")).unwrap();
    assert!(csv.contains("thm-1.8"));
    assert!(csv.contains("ric_nonneg=false"), "{csv}");
}

#[test]
fn violated_inequality_exits_1() {
    // At subdivision 3 the sphere equality case sits above the exact-zero
    // threshold on the left side only: an honest discretization-noise
    // violation that refinement removes.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{
            "version": 1,
            "tasks": [{
                "geometry": {"kind": "icosphere", "rho": 1.0},
                "resolutions": [3],
                "jobs": [{"theorem": "perez-r1"}]
            }]
        }"#,
    );
    let out_dir = dir.path().join("out");
    let out = schur(&["verify", &cfg, "--out", &out_dir.to_string_lossy()]);
    assert_eq!(code(&out), 1, "stdout: {}", stdout(&out));
    assert!(stdout(&out).contains("VIOLATED"));
    assert!(out_dir.join("reports.csv").exists());
}

#[test]
fn custom_tensor_from_file_runs_on_grids() {
    let dir = tempfile::tempdir().unwrap();
    // T = g on the flat torus: 8^3 points, identity components per row.
    let points = 8 * 8 * 8;
    let mut csv = String::from("# packed symmetric samples\n");
    for _ in 0..points {
        csv.push_str("1, 0, 0, 1, 0, 1\n");
    }
    fs::write(dir.path().join("tensor.csv"), csv).unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{
            "version": 1,
            "tasks": [{
                "geometry": {"kind": "flat", "n": 3, "len": 1.0},
                "resolutions": [8],
                "jobs": [{"theorem": "thm-1.7", "tensor": {"kind": "custom-from-file", "path": "tensor.csv"}}]
            }]
        }"#,
    );
    let out_dir = dir.path().join("out");
    let out = schur(&["verify", &cfg, "--out", &out_dir.to_string_lossy()]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("equality"), "{}", stdout(&out));

    // A wrong row count is a config-class failure.
    fs::write(dir.path().join("tensor.csv"), "1,0,0,1,0,1\n").unwrap();
    let out = schur(&["verify", &cfg, "--out", &out_dir.to_string_lossy()]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("rows"), "{}", stderr(&out));
}

#[test]
fn mesh_file_geometry_loads_off_files() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = schur_core::mesh::generate::ellipsoid(1.0, 1.0, 1.2, 3).unwrap();
    fs::write(dir.path().join("surface.off"), schur_core::mesh::io::write_off(&mesh)).unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{
            "version": 1,
            "tasks": [{
                "geometry": {"kind": "mesh-file", "path": "surface.off"},
                "jobs": [{"theorem": "perez-r1"}]
            }]
        }"#,
    );
    let out_dir = dir.path().join("out");
    let out = schur(&["verify", &cfg, "--out", &out_dir.to_string_lossy()]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let csv = fs::read_to_string(out_dir.join("reports.csv")).unwrap();
    assert!(csv.contains("surface.off"), "{csv}");
    assert!(csv.contains("file"), "{csv}");

    // Same surface through the generator route gives the same ratio.
    let row = csv.lines().nth(1).unwrap().to_string();
    let ratio: f64 = row.split(',').nth(10).unwrap().parse().unwrap();
    assert!((ratio - 0.6214).abs() < 0.01, "ratio = {ratio}");
}

#[test]
fn perez_on_a_grid_is_a_config_class_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{
            "version": 1,
            "tasks": [{
                "geometry": {"kind": "flat", "n": 3, "len": 1.0},
                "resolutions": [8],
                "jobs": [{"theorem": "perez-r1"}]
            }]
        }"#,
    );
    let out = schur(&["verify", &cfg, "--out", &dir.path().join("out").to_string_lossy()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("mesh backend"), "{}", stderr(&out));
}
