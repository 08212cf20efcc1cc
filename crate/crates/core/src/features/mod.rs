//! Per-window feature extraction.
//!
//! Sixteen features are available: the four discriminating time-series
//! operations (named with their `hctsa` operation identifiers) and twelve
//! `baseline.*` descriptors that populate the ranking pool. The four
//! selected features run on the z-scored window; the baselines run on the
//! pre-processed window as-is.

pub mod acf;
pub mod baseline;
pub mod info;
pub mod selected;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::preprocess::Preprocessor;
use crate::trace_io::Window;

pub use acf::{acf, first_zero_crossing, first_zero_crossing_of};
pub use info::{coarse_grain_quantile, feat_surprise, mutual_information_hist, SurpriseSpec};
pub use selected::{feat_momentcorr, feat_removepoints, feat_slidingwindow, zscore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Feature {
    RemovePoints,
    SlidingWindow,
    MomentCorr,
    Surprise,
    Variance,
    Skewness,
    Kurtosis,
    ZeroCrossingRate,
    Acf1,
    Acf5,
    FirstZeroCrossing,
    SpectralCentroid,
    SpectralRolloff90,
    HistogramEntropy,
    PeakPosition,
    HalfRmsRatio,
}

impl Feature {
    pub const ALL: [Feature; 16] = [
        Feature::RemovePoints,
        Feature::SlidingWindow,
        Feature::MomentCorr,
        Feature::Surprise,
        Feature::Variance,
        Feature::Skewness,
        Feature::Kurtosis,
        Feature::ZeroCrossingRate,
        Feature::Acf1,
        Feature::Acf5,
        Feature::FirstZeroCrossing,
        Feature::SpectralCentroid,
        Feature::SpectralRolloff90,
        Feature::HistogramEntropy,
        Feature::PeakPosition,
        Feature::HalfRmsRatio,
    ];

    pub const SELECTED: [Feature; 4] = [
        Feature::RemovePoints,
        Feature::SlidingWindow,
        Feature::MomentCorr,
        Feature::Surprise,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Feature::RemovePoints => "DN_RemovePoints_min_05_fzcacrat",
            Feature::SlidingWindow => "SY_SlidingWindow_s_s_5_1",
            Feature::MomentCorr => "ST_MomentCorr_002_02_mean_std_sqrt_mi",
            Feature::Surprise => "FC_Surprise_dist_100_5_q_500_tstat",
            Feature::Variance => "baseline.variance",
            Feature::Skewness => "baseline.skewness",
            Feature::Kurtosis => "baseline.kurtosis",
            Feature::ZeroCrossingRate => "baseline.zero_crossing_rate",
            Feature::Acf1 => "baseline.acf_1",
            Feature::Acf5 => "baseline.acf_5",
            Feature::FirstZeroCrossing => "baseline.first_zero_crossing",
            Feature::SpectralCentroid => "baseline.spectral_centroid",
            Feature::SpectralRolloff90 => "baseline.spectral_rolloff_90",
            Feature::HistogramEntropy => "baseline.histogram_entropy",
            Feature::PeakPosition => "baseline.peak_position",
            Feature::HalfRmsRatio => "baseline.half_rms_ratio",
        }
    }

    pub fn from_name(name: &str) -> Result<Feature> {
        Feature::ALL
            .into_iter()
            .find(|f| f.name() == name)
            .ok_or_else(|| Error::UnknownFeature(name.to_string()))
    }

    pub fn is_selected(self) -> bool {
        Feature::SELECTED.contains(&self)
    }
}

impl std::fmt::Display for Feature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Feature {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Feature {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        Feature::from_name(&name).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub surprise: SurpriseSpec,
}

/// Feature values for one window, in request order. A `None` value marks a
/// feature whose input was degenerate or whose result was not finite.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub entries: Vec<(Feature, Option<f64>)>,
    /// Set when any requested selected feature is missing.
    pub unusable: bool,
}

impl FeatureVector {
    pub fn get(&self, feature: Feature) -> Option<f64> {
        self.entries
            .iter()
            .find(|(f, _)| *f == feature)
            .and_then(|(_, v)| *v)
    }

    pub fn get_by_name(&self, name: &str) -> Option<f64> {
        Feature::from_name(name).ok().and_then(|f| self.get(f))
    }

    pub fn unusable(features: &[Feature]) -> FeatureVector {
        FeatureVector {
            entries: features.iter().map(|&f| (f, None)).collect(),
            unusable: true,
        }
    }
}

fn compute(
    feature: Feature,
    samples: &[f64],
    z: &Result<Vec<f64>>,
    rate: f64,
    cfg: &FeatureConfig,
) -> Result<f64> {
    let zs = || z.as_deref().map_err(|_| Error::DegenerateWindow);
    match feature {
        Feature::RemovePoints => feat_removepoints(zs()?),
        Feature::SlidingWindow => feat_slidingwindow(zs()?),
        Feature::MomentCorr => feat_momentcorr(zs()?),
        Feature::Surprise => feat_surprise(zs()?, &cfg.surprise),
        Feature::Variance => baseline::variance(samples),
        Feature::Skewness => baseline::skewness(samples),
        Feature::Kurtosis => baseline::kurtosis(samples),
        Feature::ZeroCrossingRate => baseline::zero_crossing_rate(samples),
        Feature::Acf1 => baseline::acf_at(samples, 1),
        Feature::Acf5 => baseline::acf_at(samples, 5),
        Feature::FirstZeroCrossing => baseline::first_zero_crossing(samples),
        Feature::SpectralCentroid => baseline::spectral_centroid(samples, rate),
        Feature::SpectralRolloff90 => baseline::spectral_rolloff_90(samples, rate),
        Feature::HistogramEntropy => baseline::histogram_entropy(samples),
        Feature::PeakPosition => baseline::peak_position(samples),
        Feature::HalfRmsRatio => baseline::half_rms_ratio(samples),
    }
}

/// Evaluate the requested features on raw sample values.
pub fn extract_samples(
    samples: &[f64],
    rate: f64,
    which: &[Feature],
    cfg: &FeatureConfig,
) -> FeatureVector {
    let needs_z = which.iter().any(|f| f.is_selected());
    let z = if needs_z {
        zscore(samples)
    } else {
        Err(Error::DegenerateWindow)
    };
    let entries: Vec<(Feature, Option<f64>)> = which
        .iter()
        .map(|&f| {
            let v = compute(f, samples, &z, rate, cfg)
                .ok()
                .filter(|v| v.is_finite());
            (f, v)
        })
        .collect();
    let unusable = entries.iter().any(|(f, v)| f.is_selected() && v.is_none());
    FeatureVector { entries, unusable }
}

/// Evaluate the requested features on an already pre-processed window.
pub fn extract_features(window: &Window, which: &[Feature], cfg: &FeatureConfig) -> FeatureVector {
    extract_samples(&window.samples, window.sampling_rate, which, cfg)
}

/// The twelve `baseline.*` descriptors.
pub fn baseline_features(samples: &[f64], rate: f64) -> Result<FeatureVector> {
    let which: Vec<Feature> = Feature::ALL.into_iter().filter(|f| !f.is_selected()).collect();
    let v = extract_samples(samples, rate, &which, &FeatureConfig::default());
    if v.entries.iter().any(|(_, x)| x.is_none()) {
        return Err(Error::DegenerateWindow);
    }
    Ok(v)
}

/// Pre-process and featurize a batch of raw windows. Windows that fail
/// pre-processing come back as unusable vectors.
pub fn extract_windows(
    windows: &[Window],
    pre: &Preprocessor,
    which: &[Feature],
    cfg: &FeatureConfig,
    mode: ExecMode,
) -> Vec<FeatureVector> {
    exec::map(mode, windows, |w| match pre.window(w) {
        Ok(p) => extract_features(&p, which, cfg),
        Err(e) => {
            log::debug!(
                "{} @ {:.2}: skipped ({e})",
                w.station_id,
                w.start_time
            );
            FeatureVector::unusable(which)
        }
    })
}
