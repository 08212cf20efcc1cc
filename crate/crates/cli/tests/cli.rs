use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use quakesift::trace_io::{save_catalog, save_trace, TraceFormat};
use quakesift::{Catalog, Trace};

const SMALL: &str = r#"{"n_event": 40, "n_noise": 60}"#;

fn qs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quakesift"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = qs(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// synth → extract → rank → train → scan in `dir`; returns the scan stdout.
fn pipeline(dir: &Path, extra: &[&str]) -> String {
    let cfg = dir.join("cfg.json");
    fs::write(&cfg, SMALL).unwrap();
    let with = |args: &[&str]| {
        let mut v: Vec<&str> = args.to_vec();
        v.extend(["--config", p(&cfg)]);
        v.extend(extra);
        ok(&v)
    };
    with(&["synth", "--out", p(dir), "--hours", "0.5", "--stations", "3", "--event-time", "300", "--event-time", "1200"]);
    with(&["extract", "--windows", p(&dir.join("windows")), "--out", p(&dir.join("matrix.csv"))]);
    with(&["rank", "--matrix", p(&dir.join("matrix.csv")), "--out", p(&dir.join("rank.json"))]);
    with(&["train", "--matrix", p(&dir.join("matrix.csv")), "--out", p(&dir.join("model.json"))]);
    with(&["scan", "--manifest", p(&dir.join("scan.json")), "--out", p(&dir.join("report.txt"))])
}

fn artifacts(dir: &Path) -> Vec<(String, Vec<u8>)> {
    ["matrix.csv", "matrix.norm.json", "rank.json", "model.json", "report.txt", "truth.csv", "scan.json"]
        .iter()
        .map(|f| (f.to_string(), fs::read(dir.join(f)).unwrap()))
        .collect()
}

#[test]
fn pipeline_is_deterministic_across_runs_and_modes() {
    let (a, b, c) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let out_a = pipeline(a.path(), &[]);
    let out_b = pipeline(b.path(), &[]);
    let out_c = pipeline(c.path(), &["--sequential"]);
    assert_eq!(out_a, out_b);
    assert_eq!(out_a, out_c);
    assert!(out_a.starts_with("seed: 42\n# seed: 42\n"));
    assert_eq!(artifacts(a.path()), artifacts(b.path()));
    assert_eq!(artifacts(a.path()), artifacts(c.path()));
}

#[test]
fn every_command_prints_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    pipeline(d, &["--seed", "9"]);
    let outputs = [
        ok(&["eval", "--seed", "9", "--model", p(&d.join("model.json")), "--matrix", p(&d.join("matrix.csv"))]),
        ok(&["rank", "--seed", "9", "--matrix", p(&d.join("matrix.csv")), "--out", p(&d.join("r2.json"))]),
    ];
    for o in outputs {
        assert!(o.starts_with("seed: 9\n"), "{o}");
    }
    let rank: serde_json::Value = serde_json::from_slice(&fs::read(d.join("r2.json")).unwrap()).unwrap();
    assert_eq!(rank["seed"], 9);
    assert_eq!(fs::read_to_string(d.join("report.txt")).unwrap().lines().next(), Some("# seed: 9"));
}

#[test]
fn extract_counts_and_shape() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = d.join("cfg.json");
    fs::write(&cfg, SMALL).unwrap();
    ok(&["synth", "--config", p(&cfg), "--out", p(d), "--hours", "0"]);
    let out = ok(&["extract", "--config", p(&cfg), "--windows", p(&d.join("windows")), "--out", p(&d.join("m.csv"))]);
    assert!(out.contains("event: 40\nnoise: 60\n"), "{out}");
    assert!(out.contains("100 rows x 16 features"));
    assert!(!d.join("continuous").exists());
}

#[test]
fn train_from_report_and_scan_formats_agree() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    pipeline(d, &[]);
    let out = ok(&[
        "train", "--config", p(&d.join("cfg.json")), "--matrix", p(&d.join("matrix.csv")),
        "--out", p(&d.join("m2.json")), "--from-report", p(&d.join("rank.json")),
    ]);
    assert!(out.contains("test accuracy: "));

    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(d.join("scan.json")).unwrap()).unwrap();
    let mut json = manifest.clone();
    json["report_format"] = "json".into();
    fs::write(d.join("scan_json.json"), json.to_string()).unwrap();
    let report = ok(&["scan", "--manifest", p(&d.join("scan_json.json"))]);
    let body = report.strip_prefix("seed: 42\n").unwrap();
    let parsed = quakesift::detector::parse_json_report(body).unwrap();
    let text = fs::read_to_string(d.join("report.txt")).unwrap();
    let rows: Vec<String> = text.lines().skip(2).map(String::from).collect();
    let from_json: Vec<String> = parsed
        .detections
        .iter()
        .map(|x| format!("{}, {}", quakesift::trace_io::format_hms(x.window_start), x.n_stations))
        .collect();
    assert_eq!(rows, from_json);

    fs::write(d.join("report.json"), body).unwrap();
    let scored = ok(&["eval", "--report", p(&d.join("report.json")), "--catalog", p(&d.join("truth.csv"))]);
    assert!(scored.contains("events: 2\n"), "{scored}");

    let mut quorum = manifest;
    quorum["min_stations"] = 4.into();
    fs::write(d.join("scan_q.json"), quorum.to_string()).unwrap();
    let none = ok(&["scan", "--manifest", p(&d.join("scan_q.json"))]);
    assert_eq!(none.lines().count(), 3, "{none}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    fs::write(d.join("bad.json"), r#"{"no_such_key": 1}"#).unwrap();
    assert_eq!(qs(&["rank", "--config", p(&d.join("bad.json")), "--matrix", "x", "--out", "y"]).status.code(), Some(2));
    assert_eq!(qs(&["frobnicate"]).status.code(), Some(2));

    let missing = qs(&["rank", "--matrix", p(&d.join("nope.csv")), "--out", p(&d.join("o.json"))]);
    assert_eq!(missing.status.code(), Some(3));

    let short = Trace::new("S1", "Z", 0.0, 200.0, vec![0.5; 2000]).unwrap();
    save_trace(&short, &d.join("short.csv"), TraceFormat::Csv).unwrap();
    save_catalog(&Catalog::new(Vec::new()), &d.join("empty.csv")).unwrap();
    let none = qs(&[
        "extract", "--traces", p(&d.join("short.csv")), "--catalog", p(&d.join("empty.csv")),
        "--out", p(&d.join("m.csv")),
    ]);
    assert_eq!(none.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&none.stderr).contains("no usable windows"));

    pipeline(d, &[]);
    fs::write(d.join("hot.json"), r#"{"n_event": 40, "n_noise": 60, "learning_rate": 1e300}"#).unwrap();
    let diverged = qs(&[
        "train", "--config", p(&d.join("hot.json")), "--matrix", p(&d.join("matrix.csv")),
        "--out", p(&d.join("hot_model.json")),
    ]);
    assert_eq!(diverged.status.code(), Some(4), "{}", String::from_utf8_lossy(&diverged.stderr));

    let no_model = qs(&["scan", "--manifest", p(&d.join("scan.json")), "--model", p(&d.join("gone.json"))]);
    assert_eq!(no_model.status.code(), Some(3));
}
