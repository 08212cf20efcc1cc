//! Seeded synthetic seismograms: noise windows, event windows and
//! continuous multi-station records with a ground-truth catalog.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::trace_io::{Catalog, CatalogEntry, Label, Trace, Window};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    White,
    /// Power spectrum falling as `1 / f^exponent`.
    Colored { exponent: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Wavelet {
    Ricker { center_hz: f64 },
    DampedSine { freq_hz: f64, decay_s: f64 },
}

impl Wavelet {
    /// Samples from the onset onwards until the envelope has died out.
    /// The Ricker peak sits one period after the onset.
    pub fn samples(&self, rate: f64) -> Vec<f64> {
        match *self {
            Wavelet::Ricker { center_hz } => {
                let delay = 1.0 / center_hz;
                let n = (2.0 * delay * rate).ceil() as usize + 1;
                (0..n)
                    .map(|i| {
                        let t = i as f64 / rate - delay;
                        let a = (std::f64::consts::PI * center_hz * t).powi(2);
                        (1.0 - 2.0 * a) * (-a).exp()
                    })
                    .collect()
            }
            Wavelet::DampedSine { freq_hz, decay_s } => {
                let n = (8.0 * decay_s * rate).ceil() as usize + 1;
                (0..n)
                    .map(|i| {
                        let t = i as f64 / rate;
                        (2.0 * std::f64::consts::PI * freq_hz * t).sin() * (-t / decay_s).exp()
                    })
                    .collect()
            }
        }
    }

    fn frequency(&self) -> f64 {
        match *self {
            Wavelet::Ricker { center_hz } => center_hz,
            Wavelet::DampedSine { freq_hz, .. } => freq_hz,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub rate: f64,
    pub noise_model: NoiseModel,
    pub event_wavelet: Wavelet,
    /// Peak wavelet amplitude over noise RMS.
    pub snr: f64,
    pub rng_seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            rate: 200.0,
            noise_model: NoiseModel::White,
            event_wavelet: Wavelet::Ricker { center_hz: 12.0 },
            snr: 5.0,
            rng_seed: 42,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rate > 0.0) {
            return Err(Error::NonPositiveRate);
        }
        if !(self.snr > 0.0) {
            return Err(Error::InvalidParameter("snr must be positive".into()));
        }
        let f = self.event_wavelet.frequency();
        if !(f > 0.0 && f < self.rate / 2.0) {
            return Err(Error::InvalidParameter(format!(
                "wavelet frequency {f} Hz outside (0, {}) Hz",
                self.rate / 2.0
            )));
        }
        if let Wavelet::DampedSine { decay_s, .. } = self.event_wavelet {
            if !(decay_s > 0.0) {
                return Err(Error::InvalidParameter("decay must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> SynthSpec {
        SynthSpec {
            rng_seed: seed,
            ..*self
        }
    }
}

fn n_samples(duration_s: f64, rate: f64) -> usize {
    (duration_s * rate).round() as usize
}

/// Zero-mean, unit-variance noise from `rng`.
pub fn noise(model: NoiseModel, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let white: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    match model {
        NoiseModel::White => white,
        NoiseModel::Colored { exponent } => shape_spectrum(&white, exponent),
    }
}

fn shape_spectrum(white: &[f64], exponent: f64) -> Vec<f64> {
    let n = white.len();
    if n < 2 {
        return white.to_vec();
    }
    let mut buf: Vec<Complex64> = white.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    buf[0] = Complex64::new(0.0, 0.0);
    for (k, c) in buf.iter_mut().enumerate().skip(1) {
        let f = k.min(n - k) as f64;
        *c *= f.powf(-exponent / 2.0);
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let x: Vec<f64> = buf.iter().map(|c| c.re).collect();
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    x.iter().map(|v| v / rms).collect()
}

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// Add `wavelet` starting at sample `onset`, scaled so its peak is `peak`.
fn inject(target: &mut [f64], wavelet: &[f64], onset: usize, peak: f64) {
    let wmax = wavelet.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    for (t, w) in target.iter_mut().skip(onset).zip(wavelet) {
        *t += w / wmax * peak;
    }
}

fn window(spec: &SynthSpec, samples: Vec<f64>, label: Label) -> Window {
    Window {
        station_id: "SYN".into(),
        channel: "Z".into(),
        start_time: 0.0,
        sampling_rate: spec.rate,
        samples,
        label,
    }
}

pub fn make_noise_window(spec: &SynthSpec, duration_s: f64) -> Result<Window> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let x = noise(spec.noise_model, n_samples(duration_s, spec.rate), &mut rng);
    Ok(window(spec, x, Label::Noise))
}

/// Noise plus one wavelet whose peak equals `snr` times the noise RMS.
pub fn make_event_window(spec: &SynthSpec, duration_s: f64, onset_s: f64) -> Result<Window> {
    spec.validate()?;
    if !(onset_s >= 0.0 && onset_s < duration_s) {
        return Err(Error::InvalidParameter(format!(
            "onset {onset_s} s outside [0, {duration_s}) s"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let mut x = noise(spec.noise_model, n_samples(duration_s, spec.rate), &mut rng);
    let peak = spec.snr * rms(&x);
    let wavelet = spec.event_wavelet.samples(spec.rate);
    inject(&mut x, &wavelet, n_samples(onset_s, spec.rate), peak);
    Ok(window(spec, x, Label::Event))
}

#[derive(Debug, Clone)]
pub struct ContinuousRecord {
    pub traces: Vec<Trace>,
    pub truth: Catalog,
}

/// Multi-station record with shared events. Station `i` uses seed
/// `rng_seed + i` for its noise and sees each event `moveout_s[i]` seconds
/// after the catalog origin time.
pub fn make_continuous(
    spec: &SynthSpec,
    start_time: f64,
    duration_s: f64,
    event_times: &[f64],
    stations: usize,
    moveout_s: &[f64],
    mode: ExecMode,
) -> Result<ContinuousRecord> {
    spec.validate()?;
    if moveout_s.len() != stations {
        return Err(Error::LengthMismatch(moveout_s.len(), stations));
    }
    if let Some(t) = event_times.iter().find(|&&t| !(t >= 0.0 && t < duration_s)) {
        return Err(Error::InvalidParameter(format!(
            "event time {t} s outside the record"
        )));
    }
    let n = n_samples(duration_s, spec.rate);
    let wavelet = spec.event_wavelet.samples(spec.rate);
    let traces = exec::map_range(mode, stations, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed.wrapping_add(i as u64));
        let mut x = noise(spec.noise_model, n, &mut rng);
        let peak = spec.snr * rms(&x);
        for &t in event_times {
            let onset = n_samples(t + moveout_s[i], spec.rate);
            if onset < n {
                inject(&mut x, &wavelet, onset, peak);
            }
        }
        Trace {
            station_id: format!("ST{:02}", i + 1),
            channel: "Z".into(),
            start_time,
            sampling_rate: spec.rate,
            samples: x,
        }
    });
    let truth = Catalog::new(
        event_times
            .iter()
            .enumerate()
            .map(|(k, &t)| CatalogEntry {
                origin_time: start_time + t,
                magnitude: spec.snr,
                id: format!("syn{:03}", k + 1),
            })
            .collect(),
    );
    Ok(ContinuousRecord { traces, truth })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub n_event: usize,
    pub n_noise: usize,
    pub snr_min: f64,
    pub snr_max: f64,
    pub window_s: f64,
    /// Event onsets are drawn uniformly from this fraction range of the window.
    pub onset_min_frac: f64,
    pub onset_max_frac: f64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            n_event: 200,
            n_noise: 300,
            snr_min: 2.0,
            snr_max: 10.0,
            window_s: 20.0,
            onset_min_frac: 0.2,
            onset_max_frac: 0.8,
        }
    }
}

/// Labeled training windows: events first, then noise. Window `k` uses its
/// own seed derived from the base seed, so windows can be built in parallel.
pub fn make_corpus(spec: &SynthSpec, corpus: &CorpusSpec, mode: ExecMode) -> Result<Vec<Window>> {
    spec.validate()?;
    if !(corpus.snr_min > 0.0 && corpus.snr_min <= corpus.snr_max) {
        return Err(Error::InvalidParameter("need 0 < snr_min <= snr_max".into()));
    }
    let mut draw = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let params: Vec<(f64, f64)> = (0..corpus.n_event)
        .map(|_| {
            let snr = draw.random_range(corpus.snr_min..=corpus.snr_max);
            let frac = draw.random_range(corpus.onset_min_frac..=corpus.onset_max_frac);
            (snr, frac * corpus.window_s)
        })
        .collect();
    let base = spec.rng_seed.wrapping_mul(1_000_003);
    let total = corpus.n_event + corpus.n_noise;
    let windows = exec::map_range(mode, total, |k| {
        let s = SynthSpec {
            rng_seed: base.wrapping_add(k as u64 + 1),
            ..*spec
        };
        let mut w = if k < corpus.n_event {
            let (snr, onset) = params[k];
            make_event_window(&SynthSpec { snr, ..s }, corpus.window_s, onset)?
        } else {
            make_noise_window(&s, corpus.window_s)?
        };
        w.station_id = format!("W{k:05}");
        w.start_time = k as f64 * corpus.window_s;
        Ok(w)
    });
    windows.into_iter().collect()
}
