use std::fs;
use std::path::Path;

use cnmbi_cli::{manifest_path, run, EXIT_DEGENERATE, EXIT_OK, EXIT_USAGE};
use tempfile::TempDir;

fn cnmbi(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("cnmbi").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn blobs_csv(dir: &TempDir) -> String {
    let file = path(dir, "blobs.csv");
    let (code, _, err) = cnmbi(&[
        "generate",
        "blobs",
        "--k",
        "3",
        "--per-cluster",
        "100",
        "--spread",
        "0.5",
        "--separation",
        "6",
        "--seed",
        "1",
        "--out",
        &file,
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    file
}

fn data_rows(file: &str) -> Vec<String> {
    fs::read_to_string(file).unwrap().lines().skip(1).map(str::to_string).collect()
}

#[test]
fn estimate_prints_k_star_and_writes_curve() {
    let dir = TempDir::new().unwrap();
    let input = blobs_csv(&dir);
    let (report, curve) = (path(&dir, "report.json"), path(&dir, "curve.csv"));
    let (code, out, _) = cnmbi(&[
        "estimate",
        "--input",
        &input,
        "--label-col",
        "label",
        "--k-max",
        "8",
        "--out",
        &report,
        "--emit-curve",
        &curve,
    ]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("K* = 3"), "{out}");
    let text = fs::read_to_string(&curve).unwrap();
    assert_eq!(text.lines().next(), Some("k,loss"));
    assert_eq!(text.lines().count() - 1, 8 - 2 + 1);

    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["k_star"], 3);
    assert!(json.get("timings").is_none());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(manifest_path(Path::new(&report))).unwrap()).unwrap();
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);
    assert_eq!(manifest["input"]["sha256"].as_str().unwrap().len(), 64);
    assert!(manifest["timings_ms"]["total_ms"].is_number());
}

#[test]
fn fingerprint_tracks_input_bytes() {
    let dir = TempDir::new().unwrap();
    let input = blobs_csv(&dir);
    let digest = |out: &str| -> String {
        cnmbi(&["estimate", "--input", &input, "--k-max", "3", "--restarts", "1", "--out", out]);
        let m: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(manifest_path(Path::new(out))).unwrap()).unwrap();
        m["input"]["sha256"].as_str().unwrap().to_string()
    };
    let first = digest(&path(&dir, "a.json"));
    assert_eq!(first, digest(&path(&dir, "b.json")));
    let mut bytes = fs::read(&input).unwrap();
    bytes.extend_from_slice(b"0.5,0.5,0\n");
    fs::write(&input, bytes).unwrap();
    assert_ne!(first, digest(&path(&dir, "c.json")));
}

#[test]
fn invalid_range_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let input = blobs_csv(&dir);
    let (code, out, err) = cnmbi(&["estimate", "--input", &input, "--k-min", "5", "--k-max", "3"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(out.is_empty());
    assert!(err.contains("--k-min 5 exceeds --k-max 3"), "{err}");
}

#[test]
fn usage_and_io_errors_exit_one() {
    assert_eq!(cnmbi(&["estimate", "--bogus"]).0, EXIT_USAGE);
    assert_eq!(cnmbi(&[]).0, EXIT_USAGE);
    let (code, _, err) = cnmbi(&["estimate", "--input", "/nonexistent/file.csv"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("/nonexistent/file.csv"));
    let dir = TempDir::new().unwrap();
    let bad = path(&dir, "bad.csv");
    fs::write(&bad, "1,2\n3,x\n").unwrap();
    let (code, _, err) = cnmbi(&["estimate", "--input", &bad]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("row 2, column 1"), "{err}");
    let input = blobs_csv(&dir);
    assert_eq!(cnmbi(&["estimate", "--input", &input, "--threads", "0"]).0, EXIT_USAGE);
}

#[test]
fn help_and_version_exit_zero() {
    let (code, out, _) = cnmbi(&["--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("estimate"));
    assert_eq!(cnmbi(&["--version"]).0, EXIT_OK);
}

#[test]
fn degenerate_data_exits_two() {
    let dir = TempDir::new().unwrap();
    let same = path(&dir, "same.csv");
    fs::write(&same, "1,1\n1,1\n1,1\n1,1\n1,1\n").unwrap();
    let (code, _, err) = cnmbi(&["estimate", "--input", &same]);
    assert_eq!(code, EXIT_DEGENERATE, "{err}");
}

#[test]
fn threads_flag_runs_in_dedicated_pool() {
    let dir = TempDir::new().unwrap();
    let input = blobs_csv(&dir);
    let (code, out, _) = cnmbi(&["--threads", "2", "estimate", "--input", &input, "--k-max", "4"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.starts_with("K* = 3"));
}

#[test]
fn trials_report_nc_and_acc() {
    let dir = TempDir::new().unwrap();
    let input = blobs_csv(&dir);
    let (code, out, _) = cnmbi(&["trials", "--input", &input, "--label-col", "label", "--trials", "1"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("ACC = 1") || out.contains("ACC = 0"), "{out}");

    let (code, out, _) = cnmbi(&["trials", "--input", &input, "--trials", "2", "--k-max", "5"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("NC = 3"));
    assert!(out.contains("ACC = unavailable"), "{out}");
}

#[test]
fn trials_on_count_scenario() {
    let dir = TempDir::new().unwrap();
    let input = path(&dir, "count5.csv");
    cnmbi(&["generate", "scenario", "--family", "count", "--level", "5", "--out", &input]);
    let report = path(&dir, "trials.json");
    let (code, out, _) =
        cnmbi(&["trials", "--input", &input, "--label-col", "label", "--trials", "20", "--out", &report]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("NC = 5"), "{out}");
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["k_stars"].as_array().unwrap().len(), 20);
    assert_eq!(json["true_k"], 5);
}

#[test]
fn boundary_export() {
    let dir = TempDir::new().unwrap();
    let input = path(&dir, "plus.csv");
    fs::write(&input, "x,y\n0,0\n1,0\n100,100\n-1,0\n0,1\n0,-1\n").unwrap();
    let (code, out, _) = cnmbi(&["boundary", "--input", &input, "--dc-percentile", "0.5", "--top", "1"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.lines().collect::<Vec<_>>(), vec!["original_index,phi", "2,inf"]);

    let (_, out, _) = cnmbi(&["boundary", "--input", &input, "--top", "0"]);
    assert_eq!(out.lines().count(), 1);

    let table = path(&dir, "phi.csv");
    let (code, out, _) = cnmbi(&["boundary", "--input", &input, "--dc-percentile", "0.5", "--out", &table]);
    assert_eq!(code, EXIT_OK);
    assert!(out.is_empty());
    let text = fs::read_to_string(&table).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "original_index,phi,neighbor_count,removed");
    assert_eq!(lines.len() - 1, 6);
    assert!(lines.contains(&"0,0,4,false"));
    assert!(lines.contains(&"1,1,1,false"));
    assert!(manifest_path(Path::new(&table)).exists());
}

#[test]
fn generate_outputs() {
    let dir = TempDir::new().unwrap();
    let a = path(&dir, "a.csv");
    let b = path(&dir, "b.csv");
    for file in [&a, &b] {
        let (code, _, _) =
            cnmbi(&["generate", "blobs", "--k", "3", "--per-cluster", "50", "--seed", "4", "--out", file]);
        assert_eq!(code, EXIT_OK);
    }
    assert_eq!(data_rows(&a).len(), 150);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let noise = path(&dir, "noise.csv");
    cnmbi(&["generate", "scenario", "--family", "noise", "--level", "30", "--out", &noise]);
    let rows = data_rows(&noise);
    let flagged = rows.iter().filter(|r| r.ends_with(",-1")).count();
    assert!((flagged as f64 / rows.len() as f64 - 0.3).abs() < 0.01);

    let (code, out, _) = cnmbi(&["generate", "unbalanced"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.lines().count(), 1501);
    assert_eq!(cnmbi(&["generate", "scenario", "--family", "density", "--level", "9"]).0, EXIT_USAGE);
}

#[test]
fn estimate_json_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let input = blobs_csv(&dir);
    let (a, b) = (path(&dir, "a.json"), path(&dir, "b.json"));
    for out in [&a, &b] {
        assert_eq!(cnmbi(&["estimate", "--input", &input, "--seed", "9", "--out", out]).0, EXIT_OK);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}
