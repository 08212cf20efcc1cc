//! Continuous scanning and multi-station voting.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::features::{extract_features, Feature, FeatureConfig};
use crate::model::LogRegModel;
use crate::preprocess::{BandpassSpec, Preprocessor};
use crate::trace_io::{cut_windows, format_hms, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub window_s: f64,
    pub step_s: f64,
    pub threshold: f64,
    pub min_stations: usize,
    /// A station also counts toward window `k` if it flagged a window within
    /// `slack_windows` grid steps of `k`.
    pub slack_windows: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            window_s: 20.0,
            step_s: 20.0,
            threshold: 0.5,
            min_stations: 2,
            slack_windows: 0,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_stations < 1 {
            return Err(Error::InvalidParameter("min_stations must be at least 1".into()));
        }
        if !(self.window_s > 0.0 && self.step_s > 0.0) {
            return Err(Error::InvalidParameter("window and step must be positive".into()));
        }
        Ok(())
    }
}

/// Probability for one scan window of one station.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowProb {
    pub window_start: f64,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationProb {
    pub station_id: String,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub window_start: f64,
    /// Every station's probability for this window, in station order.
    pub stations: Vec<StationProb>,
    /// Stations at or above the threshold.
    pub n_stations: usize,
}

/// Resolve a model's feature names to extractable features.
pub fn model_features(model: &LogRegModel) -> Result<Vec<Feature>> {
    model
        .feature_names
        .iter()
        .map(|n| Feature::from_name(n))
        .collect()
}

/// Probability of an event in each window of one station's trace. Windows
/// that cannot be pre-processed or featurized score 0.
pub fn scan_station(
    trace: &Trace,
    model: &LogRegModel,
    cfg: &ScanConfig,
    bandpass: &BandpassSpec,
    features: &FeatureConfig,
    mode: ExecMode,
) -> Result<Vec<WindowProb>> {
    cfg.validate()?;
    let which = model_features(model)?;
    let pre = Preprocessor::new(*bandpass, trace.sampling_rate)?;
    let windows = cut_windows(trace, cfg.window_s, cfg.step_s)?;
    Ok(exec::map(mode, &windows, |w| {
        let probability = pre
            .window(w)
            .map(|p| extract_features(&p, &which, features))
            .and_then(|v| model.probability(&v));
        match probability {
            Ok(p) => WindowProb {
                window_start: w.start_time,
                probability: p,
            },
            Err(e) => {
                log::warn!(
                    "{}: window at {} skipped ({e})",
                    trace.station_id,
                    format_hms(w.start_time)
                );
                WindowProb {
                    window_start: w.start_time,
                    probability: 0.0,
                }
            }
        }
    }))
}

/// Scan several stations, each on its own worker.
pub fn scan_stations(
    traces: &[Trace],
    model: &LogRegModel,
    cfg: &ScanConfig,
    bandpass: &BandpassSpec,
    features: &FeatureConfig,
    mode: ExecMode,
) -> Result<BTreeMap<String, Vec<WindowProb>>> {
    let per_station = exec::map(mode, traces, |t| {
        // windows inside a station run sequentially when stations already fan out
        let inner = if traces.len() > 1 { ExecMode::Sequential } else { mode };
        scan_station(t, model, cfg, bandpass, features, inner).map(|p| (t.station_id.clone(), p))
    });
    let mut out = BTreeMap::new();
    for r in per_station {
        let (station, probs) = r?;
        if out.insert(station.clone(), probs).is_some() {
            return Err(Error::InvalidParameter(format!(
                "station {station} listed more than once"
            )));
        }
    }
    Ok(out)
}

fn shared_grid(per_station: &BTreeMap<String, Vec<WindowProb>>, step_s: f64) -> Result<Vec<f64>> {
    let mut iter = per_station.iter();
    let Some((first_name, first)) = iter.next() else {
        return Ok(Vec::new());
    };
    let tol = 1e-6 * step_s.max(1.0);
    for (name, probs) in iter {
        let aligned = probs.len() == first.len()
            && probs
                .iter()
                .zip(first)
                .all(|(a, b)| (a.window_start - b.window_start).abs() <= tol);
        if !aligned {
            return Err(Error::MisalignedGrids(format!(
                "{name} does not share the window grid of {first_name}"
            )));
        }
    }
    Ok(first.iter().map(|w| w.window_start).collect())
}

fn flag_counts(per_station: &BTreeMap<String, Vec<WindowProb>>, cfg: &ScanConfig, n: usize) -> Vec<usize> {
    let mut counts = vec![0usize; n];
    for probs in per_station.values() {
        let flags: Vec<bool> = probs.iter().map(|w| w.probability >= cfg.threshold).collect();
        for (k, c) in counts.iter_mut().enumerate() {
            let lo = k.saturating_sub(cfg.slack_windows);
            let hi = (k + cfg.slack_windows).min(n - 1);
            if flags[lo..=hi].iter().any(|&f| f) {
                *c += 1;
            }
        }
    }
    counts
}

fn detection_at(per_station: &BTreeMap<String, Vec<WindowProb>>, k: usize, start: f64, n: usize) -> Detection {
    Detection {
        window_start: start,
        stations: per_station
            .iter()
            .map(|(s, p)| StationProb {
                station_id: s.clone(),
                probability: p[k].probability,
            })
            .collect(),
        n_stations: n,
    }
}

/// Windows flagged by at least `min_stations` stations, in time order.
pub fn vote(per_station: &BTreeMap<String, Vec<WindowProb>>, cfg: &ScanConfig) -> Result<Vec<Detection>> {
    cfg.validate()?;
    let grid = shared_grid(per_station, cfg.step_s)?;
    if grid.is_empty() {
        return Ok(Vec::new());
    }
    let counts = flag_counts(per_station, cfg, grid.len());
    Ok(grid
        .iter()
        .enumerate()
        .filter(|(k, _)| counts[*k] >= cfg.min_stations)
        .map(|(k, &t)| detection_at(per_station, k, t, counts[k]))
        .collect())
}

/// Windows flagged by some stations but fewer than the quorum.
pub fn below_quorum(
    per_station: &BTreeMap<String, Vec<WindowProb>>,
    cfg: &ScanConfig,
) -> Result<Vec<Detection>> {
    let grid = shared_grid(per_station, cfg.step_s)?;
    if grid.is_empty() {
        return Ok(Vec::new());
    }
    let counts = flag_counts(per_station, cfg, grid.len());
    Ok(grid
        .iter()
        .enumerate()
        .filter(|(k, _)| counts[*k] > 0 && counts[*k] < cfg.min_stations)
        .map(|(k, &t)| detection_at(per_station, k, t, counts[k]))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Text,
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(ReportFormat::Text),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::InvalidParameter(format!("unknown report format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonReport {
    pub seed: Option<u64>,
    pub detections: Vec<Detection>,
}

/// Render detections as a start-time / station-count table.
pub fn report(detections: &[Detection], format: ReportFormat, seed: Option<u64>) -> Result<String> {
    let seed_line = seed.map(|s| format!("# seed: {s}\n")).unwrap_or_default();
    Ok(match format {
        ReportFormat::Text => {
            let mut out = seed_line;
            out.push_str("Event window start time, Number of sensors\n");
            for d in detections {
                out.push_str(&format!("{}, {}\n", format_hms(d.window_start), d.n_stations));
            }
            out
        }
        ReportFormat::Csv => {
            let mut out = seed_line;
            out.push_str("window_start,n_stations,window_start_epoch\n");
            for d in detections {
                out.push_str(&format!(
                    "{},{},{:?}\n",
                    format_hms(d.window_start),
                    d.n_stations,
                    d.window_start
                ));
            }
            out
        }
        ReportFormat::Json => {
            let r = JsonReport {
                seed,
                detections: detections.to_vec(),
            };
            serde_json::to_string_pretty(&r)? + "\n"
        }
    })
}

pub fn parse_json_report(text: &str) -> Result<JsonReport> {
    Ok(serde_json::from_str(text)?)
}
