//! The four discriminating operations, each evaluated on a z-scored window.

use crate::error::{Error, Result};
use crate::features::acf::first_zero_crossing_of;
use crate::features::info::mutual_information_hist;
use crate::stats;

/// Standardize to zero mean and unit (n - 1) standard deviation.
pub fn zscore(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.len() < 2 || stats::is_constant(samples) {
        return Err(Error::DegenerateWindow);
    }
    let m = stats::mean(samples);
    let sd = stats::sample_std(samples);
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(Error::DegenerateWindow);
    }
    Ok(samples.iter().map(|x| (x - m) / sd).collect())
}

/// Ratio of the autocorrelation first zero crossing after dropping the lowest
/// half of the samples to the crossing of the full series.
///
/// The `round(n / 2)` smallest values are removed (equal values: earlier index
/// first) and the survivors keep their original order.
pub fn feat_removepoints(samples: &[f64]) -> Result<f64> {
    let n = samples.len();
    if n < 40 {
        return Err(Error::TooShort { need: 40, got: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| samples[a].total_cmp(&samples[b]).then(a.cmp(&b)));
    let n_remove = (n as f64 * 0.5).round() as usize;
    let mut keep = order[n_remove..].to_vec();
    keep.sort_unstable();
    let reduced: Vec<f64> = keep.iter().map(|&i| samples[i]).collect();

    let original = first_zero_crossing_of(samples)?;
    let trimmed = first_zero_crossing_of(&reduced)
        .map_err(|_| Error::DegenerateFeature("reduced series has zero variance"))?;
    Ok(trimmed as f64 / original as f64)
}

/// Standard deviation of the standard deviations of five equal,
/// non-overlapping segments, relative to the standard deviation of the whole
/// series. Remainder samples past `5 * floor(n / 5)` are ignored.
pub fn feat_slidingwindow(samples: &[f64]) -> Result<f64> {
    const SEGMENTS: usize = 5;
    let n = samples.len();
    if n < 10 {
        return Err(Error::TooShort { need: 10, got: n });
    }
    let full = stats::sample_std(samples);
    if stats::is_constant(samples) || !(full > 0.0) {
        return Err(Error::DegenerateFeature("zero-variance series"));
    }
    let seg = n / SEGMENTS;
    let stds: Vec<f64> = samples
        .chunks_exact(seg)
        .take(SEGMENTS)
        .map(stats::sample_std)
        .collect();
    Ok(stats::sample_std(&stds) / full)
}

/// Window length and hop used by [`feat_momentcorr`] for a series of `n`.
pub fn momentcorr_geometry(n: usize) -> (usize, usize) {
    let window = (0.02 * n as f64).round() as usize;
    let step = ((0.8 * window as f64).round() as usize).max(1);
    (window, step)
}

/// Histogram bin count per axis for `n_windows` paired moments.
pub fn momentcorr_bins(n_windows: usize) -> usize {
    (((n_windows as f64).sqrt() / 2.0).floor() as usize).max(2)
}

/// Mutual information between local means and local standard deviations of
/// the signed square root of the series, over windows of 2% of the length
/// hopping by 80% of a window.
pub fn feat_momentcorr(samples: &[f64]) -> Result<f64> {
    let n = samples.len();
    if n < 200 {
        return Err(Error::TooShort { need: 200, got: n });
    }
    let x: Vec<f64> = samples.iter().map(|v| v.signum() * v.abs().sqrt()).collect();
    let (window, step) = momentcorr_geometry(n);
    let mut means = Vec::new();
    let mut stds = Vec::new();
    let mut start = 0;
    while start + window <= n {
        let w = &x[start..start + window];
        means.push(stats::mean(w));
        stds.push(stats::sample_std(w));
        start += step;
    }
    if means.len() < 4 {
        return Err(Error::DegenerateFeature("fewer than 4 moment windows"));
    }
    if stats::is_constant(&means) || stats::is_constant(&stds) {
        return Err(Error::DegenerateFeature("zero-variance moment vector"));
    }
    mutual_information_hist(&means, &stds, momentcorr_bins(means.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zscore_alternating() {
        let z = zscore(&[1.0, -1.0, 1.0, -1.0]).unwrap();
        let s = (4.0f64 / 3.0).sqrt();
        for (a, b) in z.iter().zip([1.0 / s, -1.0 / s, 1.0 / s, -1.0 / s]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((z[0] - 0.8660254037844386).abs() < 1e-12);
        assert!(matches!(zscore(&[2.0; 8]), Err(Error::DegenerateWindow)));
    }

    #[test]
    fn removepoints_alternating_is_degenerate() {
        let x: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let z = zscore(&x).unwrap();
        assert!(matches!(
            feat_removepoints(&z),
            Err(Error::DegenerateFeature(_))
        ));
    }

    #[test]
    fn removepoints_low_frequency_shortens() {
        let x: Vec<f64> = (0..2000)
            .map(|i| (2.0 * std::f64::consts::PI * i as f64 / 400.0).sin())
            .collect();
        let r = feat_removepoints(&zscore(&x).unwrap()).unwrap();
        assert!(r < 1.0, "{r}");
    }

    #[test]
    fn slidingwindow_partition_rule() {
        // 17 samples: five segments of 3, the last two samples are ignored
        let mut x: Vec<f64> = (0..15).map(|i| ((i * 7) % 5) as f64).collect();
        x.extend([1e6, -1e6]);
        let head = feat_slidingwindow(&x[..15]).unwrap() * stats::sample_std(&x[..15]);
        let full = feat_slidingwindow(&x).unwrap() * stats::sample_std(&x);
        assert!((head - full).abs() < 1e-9 * head.abs().max(1.0));
    }

    #[test]
    fn momentcorr_geometry_default_window() {
        assert_eq!(momentcorr_geometry(4000), (80, 64));
        assert_eq!(momentcorr_bins(62), 3);
        assert_eq!(momentcorr_bins(4), 2);
        assert!(matches!(
            feat_momentcorr(&[0.0; 400]),
            Err(Error::DegenerateFeature(_))
        ));
    }
}
