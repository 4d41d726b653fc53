use std::path::{Path, PathBuf};
use std::process::Command;

use compass_cli::output::SCAN_HEADER;
use compass_cli::pipeline::ScreenReport;
use compass_cli::run;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").canonicalize().unwrap()
}

fn fixture(name: &str) -> String {
    fixtures().join(name).to_string_lossy().into_owned()
}

/// Writes `body` as config.json in a fresh temp dir.
fn config(body: serde_json::Value) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(&body).unwrap()).unwrap();
    (dir, path)
}

fn cli(args: &[&str]) -> i32 {
    run(std::iter::once("compass").chain(args.iter().copied()))
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn manifest_fci(file: &str) -> f64 {
    let text = std::fs::read_to_string(fixtures().join("manifest.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let entries = v.as_array().unwrap();
    entries.iter().find(|e| e["file"] == file).unwrap()["e_fci_frozen"].as_f64().unwrap()
}

#[test]
fn h2_scan_reaches_fci() {
    let files = ["h2_sto-3g_074.fcidump", "h2_sto-3g_150.fcidump"];
    let (dir, path) = config(serde_json::json!({
        "fixtures": files.iter().map(|f| fixture(f)).collect::<Vec<_>>(),
        "methods": [
            {"method": "compass", "eps1": 1e-5, "eps2": 1e-7},
            {"method": "uccsd"},
            {"method": "fci"}
        ],
    }));
    assert_eq!(cli(&["scan", "--config", path.to_str().unwrap()]), 0);
    let (header, rows) = read_csv(&dir.path().join("out/scan.csv"));
    assert_eq!(header, SCAN_HEADER);
    assert_eq!(rows.len(), 6);
    let col = |name: &str| SCAN_HEADER.iter().position(|h| *h == name).unwrap();
    for r in &rows {
        let err: f64 = r[col("error_hartree")].parse().unwrap();
        assert!(err.abs() < 1e-8, "{r:?}");
        assert_eq!(r[col("converged")], "true");
        let file = format!("{}.fcidump", r[col("geometry")]);
        let fci: f64 = r[col("fci_energy")].parse().unwrap();
        assert!((fci - manifest_fci(&file)).abs() < 1e-8);
    }
    assert_eq!(rows.iter().filter(|r| r[col("method")] == "FCI").count(), 2);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["geometries"], 2);
    assert!(dir.path().join("out/converged.json").is_file());
    assert!(!dir.path().join("out/noise.csv").exists());
}

#[test]
fn unusable_inputs_exit_two_without_output() {
    let cases = [
        serde_json::json!({"fixtures": [], "methods": [{"method": "fci"}]}),
        serde_json::json!({"fixtures": ["nowhere.fcidump"], "methods": [{"method": "fci"}]}),
        serde_json::json!({"fixtures": ["none_*.fcidump"], "methods": [{"method": "fci"}]}),
        serde_json::json!({"fixtures": [fixture("h2_sto-3g_074.fcidump")], "methods": []}),
        serde_json::json!({"fixtures": [fixture("h2_sto-3g_074.fcidump")], "methods": [{"method": "fci"}], "typo": 1}),
        serde_json::json!({"fixtures": [fixture("h2_sto-3g_074.fcidump")], "methods": [{"method": "compass", "eps1": -1.0, "eps2": 1e-6}]}),
    ];
    for body in cases {
        let (dir, path) = config(body.clone());
        assert_eq!(cli(&["scan", "--config", path.to_str().unwrap()]), 2, "{body}");
        assert!(!dir.path().join("out").exists(), "{body}");
    }
    assert_eq!(cli(&["fci", "--config", "/does/not/exist.json"]), 2);
    assert_eq!(cli(&["fci"]), 2);
}

#[test]
fn bad_command_line_exits_64() {
    assert_eq!(cli(&["--bogus"]), 64);
    assert_eq!(cli(&["frobnicate"]), 64);
    assert_eq!(cli(&["scan", "--threads", "many"]), 64);
    assert_eq!(cli(&["--help"]), 0);
}

#[test]
fn fcidump_check_reports_the_bad_line() {
    let good = fixture("h2_sto-3g_074.fcidump");
    let text = std::fs::read_to_string(&good).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    let last = lines.len() - 1;
    lines[last] = "  0.25  1  x  1  1";
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.fcidump");
    std::fs::write(&bad, lines.join("\n")).unwrap();

    let out = Command::new(env!("CARGO_BIN_EXE_compass"))
        .args(["fcidump-check", &good, bad.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains(&format!("line {}", last + 1)), "{stdout}");
    assert!(stdout.contains("NORB=2"), "{stdout}");

    let ok = Command::new(env!("CARGO_BIN_EXE_compass")).args(["fcidump-check", &good]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
}

fn h4_config(extra: &[(&str, serde_json::Value)]) -> (tempfile::TempDir, PathBuf) {
    let mut body = serde_json::json!({
        "fixtures": [fixture("h4_sto-3g_*.fcidump")],
        "methods": [
            {"method": "compass", "eps1": 1e-5, "eps2": 1e-7},
            {"method": "uccsd"}
        ],
        "frozen": [],
    });
    for (k, v) in extra {
        body[*k] = v.clone();
    }
    config(body)
}

#[test]
fn stored_ansatz_reproduces_the_scan() {
    let (dir, path) = h4_config(&[]);
    let p = path.to_str().unwrap();
    assert_eq!(cli(&["scan", "--config", p]), 0);
    assert_eq!(cli(&["ansatz", "--config", p]), 0);
    let ansatze = dir.path().join("out/ansatze.json");
    assert_eq!(cli(&["scan", "--config", p, "--from-ansatz", ansatze.to_str().unwrap(), "--output-dir", dir.path().join("again").to_str().unwrap()]), 0);

    let (_, direct) = read_csv(&dir.path().join("out/scan.csv"));
    let (_, replay) = read_csv(&dir.path().join("again/scan.csv"));
    assert_eq!(direct.len(), 4);
    for (a, b) in direct.iter().zip(&replay) {
        let (ea, eb): (f64, f64) = (a[3].parse().unwrap(), b[3].parse().unwrap());
        assert!((ea - eb).abs() < 1e-12, "{a:?} {b:?}");
        assert_eq!(a[7], b[7]);
    }

    // A stored file missing a method is an input error.
    std::fs::write(&ansatze, "[]").unwrap();
    assert_eq!(cli(&["scan", "--config", p, "--from-ansatz", ansatze.to_str().unwrap()]), 2);
}

#[test]
fn screen_report_is_sorted() {
    let (dir, path) = h4_config(&[]);
    assert_eq!(cli(&["screen", "--config", path.to_str().unwrap()]), 0);
    let text = std::fs::read_to_string(dir.path().join("out/screen.json")).unwrap();
    let reports: Vec<ScreenReport> = serde_json::from_str(&text).unwrap();
    assert_eq!(reports.len(), 2);
    for r in &reports {
        let de: Vec<f64> = r.run.blocks.iter().map(|b| b.tau.delta_e).collect();
        assert!(!de.is_empty());
        assert!(de.windows(2).all(|w| w[0] >= w[1]), "{de:?}");
        assert!(de.iter().all(|&d| d >= 1e-5));
        for b in &r.run.blocks {
            assert!(b.scatterers.iter().all(|s| s.delta_e >= 1e-7));
        }
    }
}

fn drop_timing(path: &Path) -> Vec<Vec<String>> {
    let (_, mut rows) = read_csv(path);
    for r in &mut rows {
        r.pop();
    }
    rows
}

#[test]
fn output_is_independent_of_thread_count() {
    let (dir, path) = h4_config(&[("noise", serde_json::json!({"sds": [1e-3], "n_samples": 8})), ("seed", 7.into())]);
    let p = path.to_str().unwrap();
    let mut scans = Vec::new();
    let mut noise = Vec::new();
    for t in ["1", "3"] {
        let out = dir.path().join(format!("t{t}"));
        assert_eq!(cli(&["scan", "--config", p, "--threads", t, "--output-dir", out.to_str().unwrap()]), 0);
        scans.push(drop_timing(&out.join("scan.csv")));
        noise.push(std::fs::read(out.join("noise.csv")).unwrap());
        assert!(std::fs::read_to_string(out.join("summary.json")).unwrap().contains("\"seed\": 7"));
    }
    assert_eq!(scans[0], scans[1]);
    assert_eq!(noise[0], noise[1]);
}

#[test]
fn noise_from_stored_results() {
    let (dir, path) = config(serde_json::json!({
        "fixtures": [fixture("h2_sto-3g_*.fcidump")],
        "methods": [{"method": "uccsd"}],
        "noise": {"sds": [1e-3, 1e-2], "n_samples": 16},
    }));
    let p = path.to_str().unwrap();
    assert_eq!(cli(&["noise", "--config", p]), 2);
    assert_eq!(cli(&["scan", "--config", p]), 0);
    let first = std::fs::read(dir.path().join("out/noise.csv")).unwrap();
    assert_eq!(cli(&["noise", "--config", p]), 0);
    assert_eq!(std::fs::read(dir.path().join("out/noise.csv")).unwrap(), first);

    let (_, rows) = read_csv(&dir.path().join("out/noise.csv"));
    assert_eq!(rows.len(), 5 * 2);
    for r in &rows {
        let mean_err: f64 = r[6].parse().unwrap();
        assert!(mean_err > -1e-12, "{r:?}");
        assert_eq!(r[8], "16");
    }
    // Larger perturbations cost more energy, geometry by geometry.
    for pair in rows.chunks(2) {
        let (a, b): (f64, f64) = (pair[0][6].parse().unwrap(), pair[1][6].parse().unwrap());
        assert!(b > a, "{pair:?}");
    }
}

#[test]
fn fci_subcommand_matches_manifest() {
    let (dir, path) = config(serde_json::json!({
        "fixtures": [fixture("bh_sto-3g_100.fcidump"), fixture("h2o_sto-3g_100.fcidump")],
        "methods": [{"method": "fci"}],
    }));
    assert_eq!(cli(&["fci", "--config", path.to_str().unwrap()]), 0);
    let (_, rows) = read_csv(&dir.path().join("out/fci.csv"));
    assert_eq!(rows.len(), 2);
    for r in &rows {
        let e: f64 = r[3].parse().unwrap();
        assert!((e - manifest_fci(&format!("{}.fcidump", r[0]))).abs() < 1e-8, "{r:?}");
    }
}
