use crate::error::{Error, Result};

fn centered(samples: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = samples.len();
    if n == 0 {
        return Err(Error::EmptyData);
    }
    if crate::stats::is_constant(samples) {
        return Err(Error::DegenerateFeature("zero variance"));
    }
    let m = samples.iter().sum::<f64>() / n as f64;
    let d: Vec<f64> = samples.iter().map(|x| x - m).collect();
    let c0: f64 = d.iter().map(|v| v * v).sum();
    if !(c0 > 0.0) {
        return Err(Error::DegenerateFeature("zero variance"));
    }
    Ok((d, c0))
}

fn lag_product(d: &[f64], k: usize) -> f64 {
    d[..d.len() - k]
        .iter()
        .zip(&d[k..])
        .map(|(a, b)| a * b)
        .sum()
}

/// Normalized linear autocorrelation for lags `0..=max_lag`.
pub fn acf(samples: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if max_lag >= samples.len() {
        return Err(Error::InvalidParameter(format!(
            "max_lag {max_lag} must be below the series length {}",
            samples.len()
        )));
    }
    let (d, c0) = centered(samples)?;
    Ok((0..=max_lag)
        .map(|k| if k == 0 { 1.0 } else { lag_product(&d, k) / c0 })
        .collect())
}

/// Smallest lag `k >= 1` with `acf[k] <= 0`, or the last lag when the
/// sequence never crosses.
pub fn first_zero_crossing(acf_values: &[f64]) -> usize {
    acf_values
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, v)| **v <= 0.0)
        .map(|(k, _)| k)
        .unwrap_or(acf_values.len().saturating_sub(1))
}

/// First zero crossing of the autocorrelation of `samples`, computing lags
/// only until the crossing is found. Searches up to `len - 1`.
pub fn first_zero_crossing_of(samples: &[f64]) -> Result<usize> {
    let (d, c0) = centered(samples)?;
    let max_lag = d.len() - 1;
    for k in 1..=max_lag {
        if lag_product(&d, k) / c0 <= 0.0 {
            return Ok(k);
        }
    }
    Ok(max_lag)
}
