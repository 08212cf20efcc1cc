use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::bail;
use log::{info, warn};
use quakesift::detector::{below_quorum, parse_json_report, report, scan_stations, ReportFormat};
use quakesift::matrix::{BuildReport, NormParam};
use quakesift::model::evaluate;
use quakesift::pipeline::{featurize, selected_feature_names, train_and_evaluate};
use quakesift::selection::{apply_normalization, normalize_matrix, run_selection, SelectionReport};
use quakesift::synth::{make_continuous, make_corpus};
use quakesift::trace_io::{
    label_windows, load_catalog, load_trace, save_catalog, save_trace, TraceFormat,
};
use quakesift::{Error, Feature, FeatureMatrix, Label, LogRegModel, PipelineConfig, Window};
use serde::{Deserialize, Serialize};

use crate::{EvalArgs, ExtractArgs, RankArgs, ScanArgs, SynthArgs, TrainArgs};

const DEFAULT_EVENT_TIMES: [f64; 7] = [748.0, 1868.0, 3368.0, 5008.0, 7408.0, 9988.0, 12768.0];
const MOVEOUT_STEP_S: f64 = 0.6;
const LABELS_FILE: &str = "labels.csv";

/// A JSON artifact tagged with the seed that produced it.
#[derive(Serialize, Deserialize)]
struct Seeded<T> {
    seed: u64,
    #[serde(flatten)]
    body: T,
}

#[derive(Serialize, Deserialize)]
struct ExtractReport {
    build: BuildReport,
    dropped_by_normalization: Vec<String>,
    norm_params: Vec<NormParam>,
}

/// Scan job description. Relative paths resolve against the manifest's directory.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub model_path: Option<PathBuf>,
    pub traces: Vec<PathBuf>,
    pub window_s: Option<f64>,
    pub step_s: Option<f64>,
    pub threshold: Option<f64>,
    pub min_stations: Option<usize>,
    pub report_format: Option<ReportFormat>,
}

#[derive(Debug, Deserialize, Serialize)]
struct LabelRow {
    file: String,
    label: String,
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn read_text(path: &Path) -> anyhow::Result<String> {
    Ok(fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

fn create_dir(path: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn synth(cfg: &PipelineConfig, a: &SynthArgs) -> anyhow::Result<()> {
    let windows = make_corpus(&cfg.synth(), &cfg.corpus(), cfg.exec)?;
    let wdir = a.out.join("windows");
    create_dir(&wdir)?;
    let mut index = csv::Writer::from_writer(Vec::new());
    for (k, w) in windows.iter().enumerate() {
        let file = format!("w{k:05}.csv");
        save_trace(&w.to_trace(), &wdir.join(&file), TraceFormat::Csv)?;
        index.serialize(LabelRow { file, label: w.label.as_str().to_string() })?;
    }
    write_text(&wdir.join(LABELS_FILE), &String::from_utf8(index.into_inner()?)?)?;
    let (events, noise) = (cfg.n_event, cfg.n_noise);
    println!("windows: {} ({events} event, {noise} noise) in {}", windows.len(), wdir.display());

    if a.hours <= 0.0 {
        return Ok(());
    }
    let duration = a.hours * 3600.0;
    let times: Vec<f64> = if a.event_times.is_empty() {
        DEFAULT_EVENT_TIMES.iter().copied().filter(|&t| t < duration).collect()
    } else {
        a.event_times.clone()
    };
    let moveout: Vec<f64> = (0..a.stations).map(|i| i as f64 * MOVEOUT_STEP_S).collect();
    let rec = make_continuous(&cfg.synth(), a.start, duration, &times, a.stations, &moveout, cfg.exec)?;
    let cdir = a.out.join("continuous");
    create_dir(&cdir)?;
    let mut traces = Vec::new();
    for t in &rec.traces {
        let name = PathBuf::from("continuous").join(format!("{}.bin", t.station_id));
        save_trace(t, &a.out.join(&name), TraceFormat::Binary)?;
        traces.push(name);
    }
    save_catalog(&rec.truth, &a.out.join("truth.csv"))?;
    let manifest = Manifest {
        model_path: Some("model.json".into()),
        traces,
        window_s: Some(cfg.window_s),
        step_s: Some(cfg.step_s),
        threshold: Some(cfg.threshold),
        min_stations: Some(cfg.min_stations),
        report_format: Some(ReportFormat::Text),
    };
    write_text(&a.out.join("scan.json"), &(serde_json::to_string_pretty(&manifest)? + "\n"))?;
    println!(
        "continuous: {} stations x {:.1} h, {} events, manifest {}",
        a.stations,
        a.hours,
        times.len(),
        a.out.join("scan.json").display()
    );
    Ok(())
}

fn load_window_dir(dir: &Path) -> anyhow::Result<Vec<Window>> {
    let index = dir.join(LABELS_FILE);
    let text = read_text(&index)?;
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for row in rows.deserialize::<LabelRow>() {
        let row = row.map_err(Error::from)?;
        let trace = load_trace(&dir.join(&row.file), TraceFormat::Csv)?;
        out.push(Window::from_trace(trace, Label::parse(&row.label)?));
    }
    Ok(out)
}

pub fn extract(cfg: &PipelineConfig, a: &ExtractArgs) -> anyhow::Result<()> {
    let windows = match (&a.windows, &a.catalog) {
        (Some(dir), _) => load_window_dir(dir)?,
        (None, Some(cat)) => {
            let catalog = load_catalog(cat)?;
            let mut out = Vec::new();
            for path in &a.traces {
                let trace = load_trace(path, TraceFormat::from_path(path))?;
                out.extend(label_windows(&trace, &catalog, cfg.window_s, cfg.guard_s)?);
            }
            out
        }
        (None, None) => bail!("give either --windows or --traces with --catalog"),
    };
    if windows.is_empty() {
        return Err(Error::NoUsableWindows.into());
    }
    let (matrix, build) = featurize(&windows, &Feature::ALL, cfg)?;
    if build.dropped_rows > 0 {
        warn!("{} unusable windows dropped", build.dropped_rows);
    }
    let (normalized, norm) = normalize_matrix(&matrix)?;
    matrix.save(&a.out)?;
    let extract_report = Seeded {
        seed: cfg.seed,
        body: ExtractReport {
            build,
            dropped_by_normalization: norm.dropped,
            norm_params: normalized.norm_params.unwrap_or_default(),
        },
    };
    let report_path = a.out.with_extension("norm.json");
    write_text(&report_path, &(serde_json::to_string_pretty(&extract_report)? + "\n"))?;
    let (events, noise) = matrix.class_counts();
    println!("event: {events}");
    println!("noise: {noise}");
    println!(
        "matrix: {} rows x {} features -> {}",
        matrix.n_rows(),
        matrix.feature_names.len(),
        a.out.display()
    );
    Ok(())
}

pub fn rank(cfg: &PipelineConfig, a: &RankArgs) -> anyhow::Result<()> {
    let matrix = FeatureMatrix::load(&a.matrix)?;
    let sel = run_selection(&matrix, cfg.top_k, cfg.r_max, cfg.exec)?;
    for e in &sel.ranked {
        println!(
            "{:>3} {:<28} {:.4} {}",
            e.rank,
            e.feature.name,
            e.feature.single_feature_accuracy,
            if e.kept { "kept" } else { "pruned" }
        );
    }
    if !sel.dropped_columns.is_empty() {
        println!("constant columns: {}", sel.dropped_columns.join(", "));
    }
    let out = Seeded { seed: cfg.seed, body: sel };
    write_text(&a.out, &(serde_json::to_string_pretty(&out)? + "\n"))?;
    Ok(())
}

pub fn train(cfg: &PipelineConfig, a: &TrainArgs) -> anyhow::Result<()> {
    let matrix = FeatureMatrix::load(&a.matrix)?;
    let features = if let Some(path) = &a.from_report {
        let sel: Seeded<SelectionReport> =
            serde_json::from_str(&read_text(path)?).map_err(Error::from)?;
        sel.body.top_kept(quakesift::model::N_FEATURES)
    } else if a.features.is_empty() {
        selected_feature_names()
    } else {
        a.features.clone()
    };
    info!("training on {}", features.join(", "));
    let summary = train_and_evaluate(&matrix, &features, cfg)?;
    let d = &summary.model.diagnostics;
    if !d.converged {
        warn!(
            "stopped after {} iterations without meeting tol (gradient inf-norm {:.3e})",
            d.iterations, d.grad_inf_norm
        );
    }
    summary.model.save(&a.out)?;
    println!("features: {}", features.join(", "));
    println!("train accuracy: {:.4}", summary.train_metrics.accuracy);
    println!("test accuracy: {:.4}", summary.test_metrics.accuracy);
    println!("iterations: {} (converged: {})", d.iterations, d.converged);
    println!("final loss: {:.6}", d.final_loss);
    Ok(())
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn scan(cfg: &PipelineConfig, a: &ScanArgs) -> anyhow::Result<()> {
    let manifest: Manifest = serde_json::from_str(&read_text(&a.manifest)?)
        .map_err(|e| Error::InvalidParameter(format!("manifest: {e}")))?;
    let base = a.manifest.parent().unwrap_or(Path::new("."));
    let model_path = match (&a.model, &manifest.model_path) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => resolve(base, p),
        (None, None) => bail!(Error::InvalidParameter("manifest has no model_path".into())),
    };
    let model = LogRegModel::load(&model_path)?;
    let mut scan = cfg.scan();
    scan.window_s = manifest.window_s.unwrap_or(scan.window_s);
    scan.step_s = manifest.step_s.unwrap_or(scan.step_s);
    scan.threshold = manifest.threshold.unwrap_or(scan.threshold);
    scan.min_stations = manifest.min_stations.unwrap_or(scan.min_stations);
    let format = manifest.report_format.unwrap_or(ReportFormat::Text);

    let traces = manifest
        .traces
        .iter()
        .map(|p| {
            let p = resolve(base, p);
            load_trace(&p, TraceFormat::from_path(&p))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let per_station: BTreeMap<_, _> =
        scan_stations(&traces, &model, &scan, &cfg.bandpass(), &cfg.features(), cfg.exec)?;
    let dets = quakesift::detector::vote(&per_station, &scan)?;
    if cfg.log_single_flags {
        for d in below_quorum(&per_station, &scan)? {
            info!(
                "below quorum: {} flagged by {} station(s)",
                quakesift::trace_io::format_hms(d.window_start),
                d.n_stations
            );
        }
    }
    let text = report(&dets, format, Some(cfg.seed))?;
    print!("{text}");
    if let Some(out) = &a.out {
        write_text(out, &text)?;
    }
    Ok(())
}

pub fn eval(cfg: &PipelineConfig, a: &EvalArgs) -> anyhow::Result<()> {
    match (&a.model, &a.matrix, &a.report, &a.catalog) {
        (Some(model), Some(matrix), _, _) => {
            let model = LogRegModel::load(model)?;
            let raw = FeatureMatrix::load(matrix)?.select(&model.feature_names)?;
            let m = apply_normalization(&raw, &model.norm_params)?;
            let r = evaluate(&model, &m, cfg.threshold)?;
            println!("accuracy: {:.4}", r.accuracy);
            println!("precision: {:.4}", r.precision);
            println!("recall: {:.4}", r.recall);
            println!(
                "tp {} fp {} tn {} fn {}",
                r.true_positive, r.false_positive, r.true_negative, r.false_negative
            );
            Ok(())
        }
        (_, None, Some(rep), Some(cat)) => {
            let dets = parse_json_report(&read_text(rep)?)?.detections;
            let catalog = load_catalog(cat)?;
            // a hit may sit one grid step either side of the containing window
            let near = |origin: f64, start: f64| {
                origin >= start - cfg.step_s && origin < start + cfg.window_s + cfg.step_s
            };
            let found = catalog
                .entries()
                .iter()
                .filter(|e| dets.iter().any(|d| near(e.origin_time, d.window_start)))
                .count();
            let stray = dets
                .iter()
                .filter(|d| !catalog.entries().iter().any(|e| near(e.origin_time, d.window_start)))
                .count();
            println!("events: {}", catalog.len());
            println!("found: {found}");
            println!("missed: {}", catalog.len() - found);
            println!("detections: {}", dets.len());
            println!("stray: {stray}");
            Ok(())
        }
        _ => bail!("give --model with --matrix, or --report with --catalog"),
    }
}
