//! Generic distribution, correlation and spectral descriptors. They widen the
//! candidate pool seen by feature ranking; none of them feed the final model
//! unless ranking picks them.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::features::acf::{acf, first_zero_crossing_of};
use crate::stats;

fn central_moments(x: &[f64]) -> (f64, f64, f64) {
    let m = stats::mean(x);
    let n = x.len() as f64;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in x {
        let d = v - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    (m2 / n, m3 / n, m4 / n)
}

fn require_spread(x: &[f64]) -> Result<()> {
    if x.len() < 2 || stats::is_constant(x) || !(stats::sample_variance(x) > 0.0) {
        return Err(Error::DegenerateWindow);
    }
    Ok(())
}

pub fn variance(x: &[f64]) -> Result<f64> {
    require_spread(x)?;
    Ok(stats::sample_variance(x))
}

pub fn skewness(x: &[f64]) -> Result<f64> {
    require_spread(x)?;
    let (m2, m3, _) = central_moments(x);
    Ok(m3 / m2.powf(1.5))
}

/// Non-excess kurtosis (3 for a Gaussian).
pub fn kurtosis(x: &[f64]) -> Result<f64> {
    require_spread(x)?;
    let (m2, _, m4) = central_moments(x);
    Ok(m4 / (m2 * m2))
}

/// Sign changes per sample step.
pub fn zero_crossing_rate(x: &[f64]) -> Result<f64> {
    require_spread(x)?;
    let crossings = x.windows(2).filter(|w| (w[0] >= 0.0) != (w[1] >= 0.0)).count();
    Ok(crossings as f64 / (x.len() - 1) as f64)
}

pub fn acf_at(x: &[f64], lag: usize) -> Result<f64> {
    Ok(acf(x, lag)?[lag])
}

pub fn first_zero_crossing(x: &[f64]) -> Result<f64> {
    Ok(first_zero_crossing_of(x)? as f64)
}

/// One-sided power spectrum of the mean-removed series, with bin frequencies.
pub fn power_spectrum(x: &[f64], rate: f64) -> Vec<(f64, f64)> {
    let n = x.len();
    let m = stats::mean(x);
    let mut buf: Vec<Complex64> = x.iter().map(|v| Complex64::new(v - m, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    (0..=n / 2)
        .map(|k| (k as f64 * rate / n as f64, buf[k].norm_sqr()))
        .collect()
}

fn spectrum_total(spec: &[(f64, f64)]) -> Result<f64> {
    let total: f64 = spec.iter().map(|(_, p)| p).sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateWindow);
    }
    Ok(total)
}

pub fn spectral_centroid(x: &[f64], rate: f64) -> Result<f64> {
    require_spread(x)?;
    let spec = power_spectrum(x, rate);
    let total = spectrum_total(&spec)?;
    Ok(spec.iter().map(|(f, p)| f * p).sum::<f64>() / total)
}

/// Lowest frequency below which 90% of the power lies.
pub fn spectral_rolloff_90(x: &[f64], rate: f64) -> Result<f64> {
    require_spread(x)?;
    let spec = power_spectrum(x, rate);
    let total = spectrum_total(&spec)?;
    let mut acc = 0.0;
    for (f, p) in &spec {
        acc += p;
        if acc >= 0.9 * total {
            return Ok(*f);
        }
    }
    Ok(spec.last().map(|(f, _)| *f).unwrap_or(0.0))
}

/// Shannon entropy (bits) of a 10-bin equal-width amplitude histogram.
pub fn histogram_entropy(x: &[f64]) -> Result<f64> {
    require_spread(x)?;
    const BINS: usize = 10;
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let mut counts = [0usize; BINS];
    for v in x {
        let b = (((v - lo) / (hi - lo) * BINS as f64).floor() as usize).min(BINS - 1);
        counts[b] += 1;
    }
    let n = x.len() as f64;
    Ok(-counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.log2()
        })
        .sum::<f64>())
}

/// Position of the largest absolute amplitude as a fraction of the length.
pub fn peak_position(x: &[f64]) -> Result<f64> {
    require_spread(x)?;
    let (idx, _) = x
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, v)| {
            if v.abs() > bv {
                (i, v.abs())
            } else {
                (bi, bv)
            }
        });
    Ok(idx as f64 / x.len() as f64)
}

/// RMS of the first half over RMS of the second half.
pub fn half_rms_ratio(x: &[f64]) -> Result<f64> {
    require_spread(x)?;
    let rms = |s: &[f64]| (s.iter().map(|v| v * v).sum::<f64>() / s.len() as f64).sqrt();
    let (a, b) = x.split_at(x.len() / 2);
    let denom = rms(b);
    if !(denom > 0.0) {
        return Err(Error::DegenerateFeature("silent second half"));
    }
    Ok(rms(a) / denom)
}
