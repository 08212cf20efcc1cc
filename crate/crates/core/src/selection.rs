//! Feature normalization, univariate ranking and correlation pruning.
//!
//! Each column is squashed with an outlier-robust sigmoid centered on its
//! median and scaled by its IQR. Columns are then ranked by the accuracy of
//! the best single-feature threshold classifier, and the top of the ranking
//! is walked greedily, keeping a feature only when it is not strongly
//! correlated with anything already kept.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::stats;
use crate::trace_io::Label;

pub use crate::matrix::{FeatureMatrix, NormParam};

/// IQR of a unit normal; turns an IQR into a robust sigma.
pub const IQR_TO_SIGMA: f64 = 1.35;
pub const DEFAULT_TOP_K: usize = 50;
pub const DEFAULT_R_MAX: f64 = 0.8;

pub fn robust_sigmoid(x: f64, median: f64, iqr: f64) -> Result<f64> {
    if !(iqr > 0.0) {
        return Err(Error::DegenerateFeature("zero IQR"));
    }
    let z = (x - median) / (iqr / IQR_TO_SIGMA);
    Ok(1.0 / (1.0 + (-z).exp()))
}

impl NormParam {
    pub fn apply(&self, x: f64) -> f64 {
        let z = (x - self.median) / (self.iqr / IQR_TO_SIGMA);
        1.0 / (1.0 + (-z).exp())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NormalizationReport {
    /// Columns removed because their IQR is zero.
    pub dropped: Vec<String>,
}

/// Fit median/IQR per column and apply the robust sigmoid.
pub fn normalize_matrix(m: &FeatureMatrix) -> Result<(FeatureMatrix, NormalizationReport)> {
    if m.is_normalized() {
        return Err(Error::DoubleNormalization);
    }
    if m.n_rows() == 0 {
        return Err(Error::EmptyData);
    }
    let mut report = NormalizationReport::default();
    let mut params = Vec::new();
    let mut keep = Vec::new();
    for (j, name) in m.feature_names.iter().enumerate() {
        let (median, iqr) = stats::median_iqr(&m.column(j));
        if iqr > 0.0 {
            keep.push(j);
            params.push(NormParam {
                feature: name.clone(),
                median,
                iqr,
            });
        } else {
            report.dropped.push(name.clone());
        }
    }
    let rows = m
        .rows
        .iter()
        .map(|r| keep.iter().zip(&params).map(|(&j, p)| p.apply(r[j])).collect())
        .collect();
    Ok((
        FeatureMatrix {
            feature_names: params.iter().map(|p| p.feature.clone()).collect(),
            start_times: m.start_times.clone(),
            labels: m.labels.clone(),
            rows,
            norm_params: Some(params),
        },
        report,
    ))
}

/// Apply previously fitted parameters (never refits).
pub fn apply_normalization(m: &FeatureMatrix, params: &[NormParam]) -> Result<FeatureMatrix> {
    if m.is_normalized() {
        return Err(Error::DoubleNormalization);
    }
    let names: Vec<String> = params.iter().map(|p| p.feature.clone()).collect();
    let mut out = m.select(&names)?;
    for r in &mut out.rows {
        for (v, p) in r.iter_mut().zip(params) {
            *v = p.apply(*v);
        }
    }
    out.norm_params = Some(params.to_vec());
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarity {
    /// Event iff value >= threshold.
    #[serde(rename = ">=")]
    Ge,
    /// Event iff value < threshold.
    #[serde(rename = "<")]
    Lt,
}

impl Polarity {
    pub fn predicts_event(self, value: f64, threshold: f64) -> bool {
        match self {
            Polarity::Ge => value >= threshold,
            Polarity::Lt => value < threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeature {
    pub name: String,
    pub single_feature_accuracy: f64,
    pub threshold: f64,
    pub polarity: Polarity,
}

/// Candidate thresholds: one below the smallest value, then the midpoints
/// between consecutive distinct values, ascending.
pub fn candidate_thresholds(values: &[f64]) -> Vec<f64> {
    let mut sorted = stats::sorted_copy(values);
    sorted.dedup();
    let mut out = Vec::with_capacity(sorted.len());
    if let Some(&first) = sorted.first() {
        out.push(first - 1.0);
    }
    out.extend(sorted.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0));
    out
}

fn class_flags(labels: &[Label]) -> Result<Vec<bool>> {
    labels
        .iter()
        .map(|l| match l {
            Label::Event => Ok(true),
            Label::Noise => Ok(false),
            Label::Unlabeled => Err(Error::MalformedData(
                "ranking needs labeled rows".into(),
            )),
        })
        .collect()
}

/// Best single-threshold classifier for one feature.
///
/// Sweeps the candidate thresholds in ascending order, checking `>=` before
/// `<` at each, and only replaces the incumbent on a strictly higher count of
/// correct predictions.
pub fn rank_single_feature(name: &str, values: &[f64], labels: &[Label]) -> Result<RankedFeature> {
    if values.len() != labels.len() {
        return Err(Error::LengthMismatch(values.len(), labels.len()));
    }
    let is_event = class_flags(labels)?;
    let n_event = is_event.iter().filter(|&&e| e).count();
    let n_noise = is_event.len() - n_event;
    if n_event == 0 {
        return Err(Error::EmptyClass("event"));
    }
    if n_noise == 0 {
        return Err(Error::EmptyClass("noise"));
    }

    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let thresholds = candidate_thresholds(values);

    let (mut ev_below, mut no_below) = (0usize, 0usize);
    let mut cursor = 0;
    let mut best: Option<(usize, f64, Polarity)> = None;
    for &t in &thresholds {
        while cursor < order.len() && values[order[cursor]] < t {
            if is_event[order[cursor]] {
                ev_below += 1;
            } else {
                no_below += 1;
            }
            cursor += 1;
        }
        let ge = no_below + (n_event - ev_below);
        let lt = ev_below + (n_noise - no_below);
        for (correct, pol) in [(ge, Polarity::Ge), (lt, Polarity::Lt)] {
            if best.is_none_or(|(c, _, _)| correct > c) {
                best = Some((correct, t, pol));
            }
        }
    }
    let (correct, threshold, polarity) = best.expect("at least one candidate threshold");
    Ok(RankedFeature {
        name: name.to_string(),
        single_feature_accuracy: correct as f64 / values.len() as f64,
        threshold,
        polarity,
    })
}

/// Rank every column, best first. Equal accuracies keep column order.
pub fn rank_features(m: &FeatureMatrix, mode: ExecMode) -> Result<Vec<RankedFeature>> {
    let mut ranked = exec::map_range(mode, m.feature_names.len(), |j| {
        rank_single_feature(&m.feature_names[j], &m.column(j), &m.labels)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| b.single_feature_accuracy.total_cmp(&a.single_feature_accuracy));
    Ok(ranked)
}

fn abs_corr(a: &[f64], b: &[f64]) -> f64 {
    stats::pearson(a, b).map(f64::abs).unwrap_or(0.0)
}

/// Greedy pass over the first `top_k` ranked features: keep a feature iff its
/// |Pearson r| with every feature kept so far is at most `r_max`.
pub fn prune_correlated(
    m: &FeatureMatrix,
    ranking: &[RankedFeature],
    top_k: usize,
    r_max: f64,
) -> Result<Vec<String>> {
    if !(r_max > 0.0 && r_max < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "r_max must lie in (0, 1), got {r_max}"
        )));
    }
    let mut kept: Vec<(String, Vec<f64>)> = Vec::new();
    for r in ranking.iter().take(top_k) {
        let col = m.column(m.column_index(&r.name)?);
        if kept.iter().all(|(_, k)| abs_corr(&col, k) <= r_max) {
            kept.push((r.name.clone(), col));
        }
    }
    Ok(kept.into_iter().map(|(n, _)| n).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    #[serde(flatten)]
    pub feature: RankedFeature,
    pub rank: usize,
    pub kept: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub top_k: usize,
    pub r_max: f64,
    pub class_counts: BTreeMap<String, usize>,
    pub dropped_columns: Vec<String>,
    pub norm_params: Vec<NormParam>,
    pub ranked: Vec<RankedEntry>,
    pub kept: Vec<String>,
    /// Feature names indexing `abs_corr`, in rank order (first `top_k`).
    pub corr_names: Vec<String>,
    pub abs_corr: Vec<Vec<f64>>,
}

impl SelectionReport {
    /// The first `n` kept features, in rank order.
    pub fn top_kept(&self, n: usize) -> Vec<String> {
        self.kept.iter().take(n).cloned().collect()
    }
}

/// Normalize, rank and prune a raw labeled matrix.
pub fn run_selection(
    raw: &FeatureMatrix,
    top_k: usize,
    r_max: f64,
    mode: ExecMode,
) -> Result<SelectionReport> {
    let (events, noise) = raw.class_counts();
    if events == 0 {
        return Err(Error::EmptyClass("event"));
    }
    if noise == 0 {
        return Err(Error::EmptyClass("noise"));
    }
    let (m, norm_report) = normalize_matrix(raw)?;
    let ranking = rank_features(&m, mode)?;
    let kept = prune_correlated(&m, &ranking, top_k, r_max)?;

    let corr_names: Vec<String> = ranking.iter().take(top_k).map(|r| r.name.clone()).collect();
    let cols: Vec<Vec<f64>> = corr_names
        .iter()
        .map(|n| m.column(m.column_index(n).unwrap()))
        .collect();
    let abs_corr = exec::map_range(mode, cols.len(), |i| {
        cols.iter().map(|c| abs_corr(&cols[i], c)).collect()
    });

    let ranked = ranking
        .into_iter()
        .enumerate()
        .map(|(i, f)| RankedEntry {
            kept: kept.contains(&f.name),
            rank: i + 1,
            feature: f,
        })
        .collect();
    Ok(SelectionReport {
        top_k,
        r_max,
        class_counts: BTreeMap::from([("event".into(), events), ("noise".into(), noise)]),
        dropped_columns: norm_report.dropped,
        norm_params: m.norm_params.clone().unwrap_or_default(),
        ranked,
        kept,
        corr_names,
        abs_corr,
    })
}
