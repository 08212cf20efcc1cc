//! Histogram mutual information and the coarse-grained surprise statistic.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

fn equal_width_bins(x: &[f64], bins: usize) -> Result<Vec<usize>> {
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(hi > lo) || !(hi - lo).is_finite() {
        return Err(Error::DegenerateFeature("constant vector in histogram"));
    }
    let width = hi - lo;
    Ok(x.iter()
        .map(|&v| (((v - lo) / width * bins as f64).floor() as usize).min(bins - 1))
        .collect())
}

/// Mutual information in bits over an equal-width `bins × bins` histogram.
///
/// Terms are summed in sorted order so that `MI(x, y) == MI(y, x)` holds
/// bit-for-bit. A constant input has no equal-width binning and is rejected.
pub fn mutual_information_hist(x: &[f64], y: &[f64], bins: usize) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 4 {
        return Err(Error::TooShort {
            need: 4,
            got: x.len(),
        });
    }
    if bins < 2 {
        return Err(Error::InvalidParameter("need at least 2 bins".into()));
    }
    let bx = equal_width_bins(x, bins)?;
    let by = equal_width_bins(y, bins)?;
    let n = x.len() as f64;
    let mut joint = vec![0usize; bins * bins];
    let mut px = vec![0usize; bins];
    let mut py = vec![0usize; bins];
    for (&i, &j) in bx.iter().zip(&by) {
        joint[i * bins + j] += 1;
        px[i] += 1;
        py[j] += 1;
    }
    let mut terms = Vec::new();
    for i in 0..bins {
        for j in 0..bins {
            let c = joint[i * bins + j];
            if c == 0 {
                continue;
            }
            let pij = c as f64 / n;
            let (pi, pj) = (px[i] as f64 / n, py[j] as f64 / n);
            terms.push(pij * (pij / (pi * pj)).log2());
        }
    }
    Ok(crate::exec::order_invariant_sum(&mut terms).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurpriseSpec {
    pub n_groups: usize,
    pub memory: usize,
    pub n_eval: usize,
    pub rng_seed: u64,
}

impl Default for SurpriseSpec {
    fn default() -> Self {
        SurpriseSpec {
            n_groups: 5,
            memory: 100,
            n_eval: 500,
            rng_seed: 42,
        }
    }
}

impl SurpriseSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_groups < 2 || self.memory < 1 || self.n_eval < 2 {
            return Err(Error::InvalidParameter(format!(
                "surprise spec needs n_groups >= 2, memory >= 1, n_eval >= 2 (got {self:?})"
            )));
        }
        Ok(())
    }
}

/// Map each sample to one of `n_groups` quantile bands of the series itself.
/// A value equal to a band boundary goes to the lower band.
pub fn coarse_grain_quantile(x: &[f64], n_groups: usize) -> Vec<usize> {
    let sorted = stats::sorted_copy(x);
    let edges: Vec<f64> = (1..n_groups)
        .map(|g| stats::quantile_sorted(&sorted, g as f64 / n_groups as f64))
        .collect();
    x.iter()
        .map(|&v| edges.iter().filter(|&&e| e < v).count())
        .collect()
}

/// Evaluation indices for the surprise statistic: `n_eval` distinct indices
/// in `memory..n`, drawn without replacement from a seeded stream and sorted.
pub fn surprise_eval_indices(n: usize, spec: &SurpriseSpec) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let mut idx: Vec<usize> = rand::seq::index::sample(&mut rng, n - spec.memory, spec.n_eval)
        .into_iter()
        .map(|i| i + spec.memory)
        .collect();
    idx.sort_unstable();
    idx
}

/// t-statistic of the information gain `-log2 p̂` of each evaluated symbol,
/// where `p̂` is its frequency among the preceding `memory` symbols (floored
/// at `1 / (memory + 1)` for unseen symbols).
pub fn feat_surprise(samples: &[f64], spec: &SurpriseSpec) -> Result<f64> {
    spec.validate()?;
    let n = samples.len();
    let need = spec.memory + spec.n_eval;
    if n < need {
        return Err(Error::TooShort { need, got: n });
    }
    let symbols = coarse_grain_quantile(samples, spec.n_groups);
    let floor = 1.0 / (spec.memory + 1) as f64;
    let gains: Vec<f64> = surprise_eval_indices(n, spec)
        .into_iter()
        .map(|t| {
            let seen = symbols[t - spec.memory..t]
                .iter()
                .filter(|&&s| s == symbols[t])
                .count();
            let p = if seen == 0 {
                floor
            } else {
                seen as f64 / spec.memory as f64
            };
            -p.log2()
        })
        .collect();
    let sd = stats::sample_std(&gains);
    if stats::is_constant(&gains) || !(sd > 0.0) {
        return Err(Error::DegenerateFeature("information gain has zero spread"));
    }
    Ok(stats::mean(&gains) / (sd / (gains.len() as f64).sqrt()))
}
