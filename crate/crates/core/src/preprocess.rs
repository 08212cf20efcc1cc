//! Window conditioning: demean, linear detrend, Butterworth bandpass and
//! peak normalization, always applied in that order.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace_io::Window;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandpassSpec {
    pub low_hz: f64,
    pub high_hz: f64,
    pub order: usize,
    pub zero_phase: bool,
}

impl Default for BandpassSpec {
    fn default() -> Self {
        BandpassSpec {
            low_hz: 5.0,
            high_hz: 25.0,
            order: 4,
            zero_phase: true,
        }
    }
}

impl BandpassSpec {
    pub fn validate(&self, rate: f64) -> Result<()> {
        let nyquist = rate / 2.0;
        if self.order == 0 {
            return Err(Error::InvalidFilter("order must be positive".into()));
        }
        if !(self.low_hz > 0.0 && self.low_hz < self.high_hz) {
            return Err(Error::InvalidFilter(format!(
                "need 0 < low ({}) < high ({})",
                self.low_hz, self.high_hz
            )));
        }
        if !(self.high_hz < nyquist) {
            return Err(Error::InvalidFilter(format!(
                "corner frequency {} Hz is at or above Nyquist ({nyquist} Hz)",
                self.high_hz
            )));
        }
        Ok(())
    }
}

pub fn demean(samples: &[f64]) -> Vec<f64> {
    if samples.is_empty() {
        return Vec::new();
    }
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    samples.iter().map(|x| x - mean).collect()
}

/// Subtract the least-squares line through `(i, samples[i])`.
pub fn detrend_linear(samples: &[f64]) -> Result<Vec<f64>> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::TooShort { need: 2, got: n });
    }
    let nf = n as f64;
    let t_mean = (nf - 1.0) / 2.0;
    let x_mean = samples.iter().sum::<f64>() / nf;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (i, x) in samples.iter().enumerate() {
        let dt = i as f64 - t_mean;
        sxy += dt * (x - x_mean);
        sxx += dt * dt;
    }
    let slope = sxy / sxx;
    Ok(samples
        .iter()
        .enumerate()
        .map(|(i, x)| x - x_mean - slope * (i as f64 - t_mean))
        .collect())
}

/// Divide by the peak absolute amplitude so that `max|out| == 1`.
pub fn normalize_unity(samples: &[f64]) -> Result<Vec<f64>> {
    let peak = samples.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if !(peak > 0.0) || !peak.is_finite() {
        return Err(Error::DegenerateWindow);
    }
    Ok(samples.iter().map(|x| x / peak).collect())
}

/// One second-order section, `a[0] == 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        let num = self.b[0] + z_inv * self.b[1] + z2 * self.b[2];
        let den = self.a[0] + z_inv * self.a[1] + z2 * self.a[2];
        num / den
    }

    fn run(&self, x: &mut [f64]) {
        let [b0, b1, b2] = self.b;
        let [_, a1, a2] = self.a;
        let (mut z1, mut z2) = (0.0, 0.0);
        for v in x.iter_mut() {
            let input = *v;
            let y = b0 * input + z1;
            z1 = b1 * input - a1 * y + z2;
            z2 = b2 * input - a2 * y;
            *v = y;
        }
    }
}

/// Cascade of biquads realizing a digital Butterworth bandpass.
#[derive(Debug, Clone, PartialEq)]
pub struct SosFilter {
    pub sections: Vec<Biquad>,
    /// Order of the analog lowpass prototype.
    pub prototype_order: usize,
}

impl SosFilter {
    /// Butterworth bandpass via the lowpass-to-bandpass transform of the
    /// analog prototype and a prewarped bilinear transform. The prototype of
    /// order N yields N biquads (2N poles); each section carries one zero at
    /// DC and one at Nyquist and is scaled to unit gain at the band center.
    pub fn butterworth_bandpass(spec: &BandpassSpec, rate: f64) -> Result<SosFilter> {
        spec.validate(rate)?;
        let n = spec.order;
        let fs2 = 2.0 * rate;
        let w_lo = fs2 * (std::f64::consts::PI * spec.low_hz / rate).tan();
        let w_hi = fs2 * (std::f64::consts::PI * spec.high_hz / rate).tan();
        let bw = w_hi - w_lo;
        let w0_sq = w_lo * w_hi;

        let bilinear = |s: Complex64| (fs2 + s) / (fs2 - s);
        let mut upper = Vec::new();
        let mut real = Vec::new();
        for k in 0..n {
            let theta = std::f64::consts::PI * (2 * k + 1 + n) as f64 / (2 * n) as f64;
            let p = Complex64::from_polar(1.0, theta);
            let half = p * (bw / 2.0);
            let disc = (half * half - w0_sq).sqrt();
            for s in [half + disc, half - disc] {
                let z = bilinear(s);
                if z.im.abs() <= 1e-12 * z.norm().max(1.0) {
                    real.push(z.re);
                } else if z.im > 0.0 {
                    upper.push(z);
                }
            }
        }
        real.sort_by(f64::total_cmp);

        let mut sections: Vec<Biquad> = upper
            .iter()
            .map(|z| Biquad {
                b: [1.0, 0.0, -1.0],
                a: [1.0, -2.0 * z.re, z.norm_sqr()],
            })
            .collect();
        for pair in real.chunks(2) {
            let (r1, r2) = (pair[0], pair.get(1).copied().unwrap_or(0.0));
            sections.push(Biquad {
                b: [1.0, 0.0, -1.0],
                a: [1.0, -(r1 + r2), r1 * r2],
            });
        }
        if sections.len() != n {
            return Err(Error::InvalidFilter(format!(
                "pole pairing produced {} sections for order {n}",
                sections.len()
            )));
        }

        let center_hz = rate / std::f64::consts::PI * (w0_sq.sqrt() / fs2).atan();
        let z_inv = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * center_hz / rate);
        for s in &mut sections {
            let g = 1.0 / s.response(z_inv).norm();
            for b in &mut s.b {
                *b *= g;
            }
        }
        Ok(SosFilter {
            sections,
            prototype_order: n,
        })
    }

    /// Complex frequency response of one causal pass at `freq_hz`.
    pub fn response(&self, freq_hz: f64, rate: f64) -> Complex64 {
        let z_inv = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * freq_hz / rate);
        self.sections
            .iter()
            .fold(Complex64::new(1.0, 0.0), |h, s| h * s.response(z_inv))
    }

    /// Single causal pass with zero initial conditions.
    pub fn filter(&self, samples: &[f64]) -> Vec<f64> {
        let mut out = samples.to_vec();
        self.filter_in_place(&mut out);
        out
    }

    fn filter_in_place(&self, x: &mut [f64]) {
        for s in &self.sections {
            s.run(x);
        }
    }

    /// Samples of odd reflection added at each end before a zero-phase pass.
    pub fn pad_len(&self) -> usize {
        3 * 2 * self.prototype_order
    }

    /// Forward-backward pass over an odd-reflected copy of the input.
    pub fn filtfilt(&self, samples: &[f64]) -> Vec<f64> {
        let n = samples.len();
        if n == 0 {
            return Vec::new();
        }
        let pad = self.pad_len().min(n - 1);
        let (first, last) = (samples[0], samples[n - 1]);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * first - samples[i]));
        ext.extend_from_slice(samples);
        ext.extend((1..=pad).map(|i| 2.0 * last - samples[n - 1 - i]));

        self.filter_in_place(&mut ext);
        ext.reverse();
        self.filter_in_place(&mut ext);
        ext.reverse();
        ext[pad..pad + n].to_vec()
    }
}

pub fn bandpass(samples: &[f64], rate: f64, spec: &BandpassSpec) -> Result<Vec<f64>> {
    let filter = SosFilter::butterworth_bandpass(spec, rate)?;
    Ok(apply(&filter, spec, samples))
}

fn apply(filter: &SosFilter, spec: &BandpassSpec, samples: &[f64]) -> Vec<f64> {
    if spec.zero_phase {
        filter.filtfilt(samples)
    } else {
        filter.filter(samples)
    }
}

/// A designed filter bound to one sampling rate, reusable across windows.
#[derive(Debug, Clone)]
pub struct Preprocessor {
    spec: BandpassSpec,
    rate: f64,
    filter: SosFilter,
}

impl Preprocessor {
    pub fn new(spec: BandpassSpec, rate: f64) -> Result<Self> {
        let filter = SosFilter::butterworth_bandpass(&spec, rate)?;
        Ok(Preprocessor { spec, rate, filter })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn spec(&self) -> &BandpassSpec {
        &self.spec
    }

    pub fn run(&self, samples: &[f64]) -> Result<Vec<f64>> {
        let x = demean(samples);
        let x = detrend_linear(&x)?;
        let x = apply(&self.filter, &self.spec, &x);
        normalize_unity(&x)
    }

    pub fn window(&self, window: &Window) -> Result<Window> {
        if (window.sampling_rate - self.rate).abs() > 1e-9 * self.rate {
            return Err(Error::InvalidParameter(format!(
                "window sampled at {} Hz, filter designed for {} Hz",
                window.sampling_rate, self.rate
            )));
        }
        Ok(window.with_samples(self.run(&window.samples)?))
    }
}

pub fn preprocess_window(window: &Window, spec: &BandpassSpec) -> Result<Window> {
    Preprocessor::new(*spec, window.sampling_rate)?.window(window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace_io::Label;

    #[test]
    fn demean_examples() {
        assert_eq!(demean(&[1.0, 2.0, 3.0]), vec![-1.0, 0.0, 1.0]);
        assert_eq!(demean(&[5.0; 4]), vec![0.0; 4]);
    }

    #[test]
    fn detrend_examples() {
        assert_eq!(detrend_linear(&[0.0, 1.0, 2.0, 3.0]).unwrap(), vec![0.0; 4]);
        assert!(detrend_linear(&[7.0; 9]).unwrap().iter().all(|&x| x == 0.0));
        assert!(matches!(detrend_linear(&[1.0]), Err(Error::TooShort { .. })));
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(
            normalize_unity(&[0.0, -2.0, 1.0]).unwrap(),
            vec![0.0, -1.0, 0.5]
        );
        let err = normalize_unity(&[0.0; 3]).unwrap_err();
        assert_eq!(err.to_string(), "degenerate window");
    }

    #[test]
    fn rejects_corners_at_nyquist() {
        let spec = BandpassSpec {
            high_hz: 100.0,
            ..Default::default()
        };
        assert!(matches!(
            bandpass(&[0.0; 10], 200.0, &spec),
            Err(Error::InvalidFilter(_))
        ));
        let spec = BandpassSpec {
            low_hz: 30.0,
            ..Default::default()
        };
        assert!(bandpass(&[0.0; 10], 200.0, &spec).is_err());
    }

    #[test]
    fn design_shape() {
        let f = SosFilter::butterworth_bandpass(&BandpassSpec::default(), 200.0).unwrap();
        assert_eq!(f.sections.len(), 4);
        // unit gain at the geometric band center, zeros at DC and Nyquist
        let center = f.response(11.0, 200.0).norm();
        assert!((center - 1.0).abs() < 0.02, "{center}");
        assert!(f.response(0.0, 200.0).norm() < 1e-12);
        assert!(f.response(100.0, 200.0).norm() < 1e-12);
        // half-power at the corners
        for corner in [5.0, 25.0] {
            let g = f.response(corner, 200.0).norm();
            assert!((g - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9, "{corner}: {g}");
        }
        // poles inside the unit circle
        for s in &f.sections {
            assert!(s.a[2] < 1.0 && s.a[2] > 0.0);
        }
    }

    #[test]
    fn odd_order_designs() {
        for order in [1, 3, 5] {
            let spec = BandpassSpec {
                order,
                ..Default::default()
            };
            let f = SosFilter::butterworth_bandpass(&spec, 200.0).unwrap();
            assert_eq!(f.sections.len(), order);
            for corner in [5.0, 25.0] {
                let g = f.response(corner, 200.0).norm();
                assert!((g - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn zero_window_is_degenerate() {
        let w = Window {
            station_id: "S".into(),
            channel: "Z".into(),
            start_time: 0.0,
            sampling_rate: 200.0,
            samples: vec![0.0; 4000],
            label: Label::Noise,
        };
        let err = preprocess_window(&w, &BandpassSpec::default()).unwrap_err();
        assert!(matches!(err, Error::DegenerateWindow));
    }
}
