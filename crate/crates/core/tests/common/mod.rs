//! Naive reference implementations used as test oracles. Written directly
//! from the feature definitions, sharing no code with the library.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn naive_mean(x: &[f64]) -> f64 {
    let mut s = 0.0;
    for v in x {
        s += v;
    }
    s / x.len() as f64
}

pub fn naive_std(x: &[f64]) -> f64 {
    let m = naive_mean(x);
    let mut s = 0.0;
    for v in x {
        s += (v - m) * (v - m);
    }
    (s / (x.len() - 1) as f64).sqrt()
}

pub fn all_equal(x: &[f64]) -> bool {
    x.iter().all(|v| *v == x[0])
}

pub fn naive_zscore(x: &[f64]) -> Option<Vec<f64>> {
    if x.len() < 2 || all_equal(x) {
        return None;
    }
    let m = naive_mean(x);
    let s = naive_std(x);
    Some(x.iter().map(|v| (v - m) / s).collect())
}

/// Full autocorrelation at every lag, then the first non-positive lag.
pub fn naive_fzc(x: &[f64]) -> Option<usize> {
    if all_equal(x) {
        return None;
    }
    let n = x.len();
    let m = naive_mean(x);
    let mut c0 = 0.0;
    for v in x {
        c0 += (v - m) * (v - m);
    }
    for k in 1..n {
        let mut c = 0.0;
        for i in 0..n - k {
            c += (x[i] - m) * (x[i + k] - m);
        }
        if c / c0 <= 0.0 {
            return Some(k);
        }
    }
    Some(n - 1)
}

pub fn naive_removepoints(z: &[f64]) -> Option<f64> {
    let n = z.len();
    let mut pairs: Vec<(f64, usize)> = z.iter().copied().zip(0..).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let drop = (n as f64 / 2.0).round() as usize;
    let mut survivors: Vec<(f64, usize)> = pairs[drop..].to_vec();
    survivors.sort_by_key(|p| p.1);
    let reduced: Vec<f64> = survivors.iter().map(|p| p.0).collect();
    let full = naive_fzc(z)?;
    let part = naive_fzc(&reduced)?;
    Some(part as f64 / full as f64)
}

pub fn naive_slidingwindow(z: &[f64]) -> Option<f64> {
    if all_equal(z) {
        return None;
    }
    let seg = z.len() / 5;
    let mut stds = Vec::new();
    for s in 0..5 {
        stds.push(naive_std(&z[s * seg..(s + 1) * seg]));
    }
    Some(naive_std(&stds) / naive_std(z))
}

/// Histogram mutual information, looping over every cell.
pub fn naive_mi(x: &[f64], y: &[f64], bins: usize) -> Option<f64> {
    let bin = |v: &[f64]| -> Option<Vec<usize>> {
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if hi <= lo {
            return None;
        }
        Some(
            v.iter()
                .map(|a| (((a - lo) / (hi - lo) * bins as f64).floor() as usize).min(bins - 1))
                .collect(),
        )
    };
    let bx = bin(x)?;
    let by = bin(y)?;
    let n = x.len() as f64;
    let mut mi = 0.0;
    for i in 0..bins {
        for j in 0..bins {
            let nij = bx.iter().zip(&by).filter(|(a, b)| **a == i && **b == j).count();
            if nij == 0 {
                continue;
            }
            let ni = bx.iter().filter(|a| **a == i).count();
            let nj = by.iter().filter(|b| **b == j).count();
            let pij = nij as f64 / n;
            mi += pij * (pij / ((ni as f64 / n) * (nj as f64 / n))).log2();
        }
    }
    Some(mi.max(0.0))
}

pub fn naive_momentcorr(z: &[f64]) -> Option<f64> {
    let n = z.len();
    let x: Vec<f64> = z
        .iter()
        .map(|v| if *v < 0.0 { -(-v).sqrt() } else { v.sqrt() })
        .collect();
    let w = (n as f64 * 0.02).round() as usize;
    let step = (w as f64 * 0.8).round() as usize;
    let mut means = Vec::new();
    let mut stds = Vec::new();
    let mut s = 0;
    while s + w <= n {
        means.push(naive_mean(&x[s..s + w]));
        stds.push(naive_std(&x[s..s + w]));
        s += step;
    }
    let bins = ((means.len() as f64).sqrt() / 2.0).floor().max(2.0) as usize;
    naive_mi(&means, &stds, bins)
}

fn type7_quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn naive_surprise(z: &[f64], groups: usize, memory: usize, n_eval: usize, seed: u64) -> Option<f64> {
    let n = z.len();
    let mut sorted = z.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let edges: Vec<f64> = (1..groups)
        .map(|g| type7_quantile(&sorted, g as f64 / groups as f64))
        .collect();
    let sym: Vec<usize> = z
        .iter()
        .map(|v| {
            let mut g = 0;
            for e in &edges {
                if v > e {
                    g += 1;
                }
            }
            g
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = rand::seq::index::sample(&mut rng, n - memory, n_eval).into_vec();
    idx.sort();
    let mut gains = Vec::new();
    for i in idx {
        let t = i + memory;
        let mut count = 0;
        for s in &sym[t - memory..t] {
            if *s == sym[t] {
                count += 1;
            }
        }
        let p = if count == 0 {
            1.0 / (memory + 1) as f64
        } else {
            count as f64 / memory as f64
        };
        gains.push(-p.log2());
    }
    if all_equal(&gains) {
        return None;
    }
    Some(naive_mean(&gains) / (naive_std(&gains) / (gains.len() as f64).sqrt()))
}

/// A seeded mix of signal shapes: white, AR(1), tones in noise and bursts.
pub fn random_series(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    match seed % 4 {
        0 => (0..n).map(|_| normal.sample(&mut rng)).collect(),
        1 => {
            let phi: f64 = rng.random_range(0.5..0.99);
            let mut x = vec![0.0; n];
            for i in 1..n {
                x[i] = phi * x[i - 1] + normal.sample(&mut rng);
            }
            x
        }
        2 => {
            let f: f64 = rng.random_range(2.0..40.0);
            (0..n)
                .map(|i| (2.0 * std::f64::consts::PI * f * i as f64 / 200.0).sin() + 0.3 * normal.sample(&mut rng))
                .collect()
        }
        _ => {
            let at = rng.random_range(n / 5..4 * n / 5);
            (0..n)
                .map(|i| {
                    let d = i as f64 - at as f64;
                    let env = 8.0 * (-(d / 60.0).powi(2)).exp();
                    normal.sample(&mut rng) * (1.0 + env)
                })
                .collect()
        }
    }
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}
