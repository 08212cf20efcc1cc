//! End-to-end configuration and the glue between modules.

use serde::{Deserialize, Serialize};

use crate::detector::ScanConfig;
use crate::error::{Error, Result};
use crate::exec::ExecMode;
use crate::features::{extract_windows, Feature, FeatureConfig, SurpriseSpec};
use crate::matrix::{BuildReport, FeatureMatrix};
use crate::model::{self, evaluate, Hyper, LogRegModel, Metrics, SplitSpec};
use crate::preprocess::{BandpassSpec, Preprocessor};
use crate::selection::{apply_normalization, normalize_matrix};
use crate::synth::{CorpusSpec, NoiseModel, SynthSpec, Wavelet};
use crate::trace_io::{Window, DEFAULT_GUARD_S, DEFAULT_WINDOW_S};

/// Every knob of the pipeline under flat keys, as read from a JSON config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub exec: ExecMode,

    pub low_hz: f64,
    pub high_hz: f64,
    pub filter_order: usize,
    pub zero_phase: bool,

    pub window_s: f64,
    pub step_s: f64,
    pub guard_s: f64,

    pub surprise_groups: usize,
    pub surprise_memory: usize,
    pub surprise_n_eval: usize,

    pub top_k: usize,
    pub r_max: f64,

    pub train_fraction: f64,
    pub stratified: bool,
    pub learning_rate: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub l2: f64,

    pub threshold: f64,
    pub min_stations: usize,
    pub slack_windows: usize,
    pub log_single_flags: bool,

    pub rate: f64,
    pub wavelet_hz: f64,
    pub n_event: usize,
    pub n_noise: usize,
    pub snr_min: f64,
    pub snr_max: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let bp = BandpassSpec::default();
        let sp = SurpriseSpec::default();
        let hy = Hyper::default();
        let split = SplitSpec::default();
        let scan = ScanConfig::default();
        let corpus = CorpusSpec::default();
        PipelineConfig {
            seed: 42,
            exec: ExecMode::Parallel,
            low_hz: bp.low_hz,
            high_hz: bp.high_hz,
            filter_order: bp.order,
            zero_phase: bp.zero_phase,
            window_s: DEFAULT_WINDOW_S,
            step_s: scan.step_s,
            guard_s: DEFAULT_GUARD_S,
            surprise_groups: sp.n_groups,
            surprise_memory: sp.memory,
            surprise_n_eval: sp.n_eval,
            top_k: crate::selection::DEFAULT_TOP_K,
            r_max: crate::selection::DEFAULT_R_MAX,
            train_fraction: split.train_fraction,
            stratified: split.stratified,
            learning_rate: hy.learning_rate,
            max_iters: hy.max_iters,
            tol: hy.tol,
            l2: hy.l2,
            threshold: scan.threshold,
            min_stations: scan.min_stations,
            slack_windows: scan.slack_windows,
            log_single_flags: true,
            rate: 200.0,
            wavelet_hz: 12.0,
            n_event: corpus.n_event,
            n_noise: corpus.n_noise,
            snr_min: corpus.snr_min,
            snr_max: corpus.snr_max,
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<PipelineConfig> {
        serde_json::from_str(text).map_err(|e| Error::InvalidParameter(format!("config: {e}")))
    }

    pub fn bandpass(&self) -> BandpassSpec {
        BandpassSpec {
            low_hz: self.low_hz,
            high_hz: self.high_hz,
            order: self.filter_order,
            zero_phase: self.zero_phase,
        }
    }

    pub fn features(&self) -> FeatureConfig {
        FeatureConfig {
            surprise: SurpriseSpec {
                n_groups: self.surprise_groups,
                memory: self.surprise_memory,
                n_eval: self.surprise_n_eval,
                rng_seed: self.seed,
            },
        }
    }

    pub fn split(&self) -> SplitSpec {
        SplitSpec {
            train_fraction: self.train_fraction,
            stratified: self.stratified,
            seed: self.seed,
        }
    }

    pub fn hyper(&self) -> Hyper {
        Hyper {
            learning_rate: self.learning_rate,
            max_iters: self.max_iters,
            tol: self.tol,
            l2: self.l2,
        }
    }

    pub fn scan(&self) -> ScanConfig {
        ScanConfig {
            window_s: self.window_s,
            step_s: self.step_s,
            threshold: self.threshold,
            min_stations: self.min_stations,
            slack_windows: self.slack_windows,
        }
    }

    pub fn synth(&self) -> SynthSpec {
        SynthSpec {
            rate: self.rate,
            noise_model: NoiseModel::White,
            event_wavelet: Wavelet::Ricker {
                center_hz: self.wavelet_hz,
            },
            snr: self.snr_max,
            rng_seed: self.seed,
        }
    }

    pub fn corpus(&self) -> CorpusSpec {
        CorpusSpec {
            n_event: self.n_event,
            n_noise: self.n_noise,
            snr_min: self.snr_min,
            snr_max: self.snr_max,
            window_s: self.window_s,
            ..CorpusSpec::default()
        }
    }
}

/// Pre-process and featurize raw windows into a raw (un-normalized) matrix.
pub fn featurize(
    windows: &[Window],
    which: &[Feature],
    cfg: &PipelineConfig,
) -> Result<(FeatureMatrix, BuildReport)> {
    let Some(first) = windows.first() else {
        return Err(Error::NoUsableWindows);
    };
    if windows.iter().any(|w| w.sampling_rate != first.sampling_rate) {
        return Err(Error::InvalidParameter(
            "all windows must share one sampling rate".into(),
        ));
    }
    let pre = Preprocessor::new(cfg.bandpass(), first.sampling_rate)?;
    let vectors = extract_windows(windows, &pre, which, &cfg.features(), cfg.exec);
    let meta: Vec<_> = windows.iter().map(|w| (w.start_time, w.label)).collect();
    FeatureMatrix::from_vectors(&meta, &vectors, which)
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub model: LogRegModel,
    pub train_metrics: Metrics,
    pub test_metrics: Metrics,
    pub loss_history: Vec<f64>,
}

/// Split, fit normalization on the training rows only, train, and score.
pub fn train_and_evaluate(
    raw: &FeatureMatrix,
    features: &[String],
    cfg: &PipelineConfig,
) -> Result<TrainSummary> {
    if features.len() != model::N_FEATURES {
        return Err(Error::InvalidParameter(format!(
            "need exactly {} features, got {}",
            model::N_FEATURES,
            features.len()
        )));
    }
    let raw = raw.select(features)?;
    let (train_raw, test_raw) = model::split(&raw, &cfg.split())?;
    let (train, norm) = normalize_matrix(&train_raw)?;
    if !norm.dropped.is_empty() {
        return Err(Error::DegenerateFeature("selected feature has zero IQR on training rows"));
    }
    let params = train.norm_params.clone().expect("normalized");
    let test = apply_normalization(&test_raw, &params)?;
    let outcome = model::train(&train, &cfg.hyper(), cfg.exec)?;
    let mut model = outcome.model;
    let train_metrics = evaluate(&model, &train, cfg.threshold)?;
    let test_metrics = evaluate(&model, &test, cfg.threshold)?;
    model.diagnostics.train_accuracy = Some(train_metrics.accuracy);
    model.diagnostics.test_accuracy = Some(test_metrics.accuracy);
    Ok(TrainSummary {
        model,
        train_metrics,
        test_metrics,
        loss_history: outcome.loss_history,
    })
}

/// The four selected features by name, in their canonical order.
pub fn selected_feature_names() -> Vec<String> {
    Feature::SELECTED.iter().map(|f| f.name().to_string()).collect()
}
