use proptest::prelude::*;
use quakesift::preprocess::{
    bandpass, demean, detrend_linear, normalize_unity, preprocess_window, BandpassSpec, SosFilter,
};
use quakesift::synth::{make_event_window, SynthSpec};
use quakesift::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

fn white(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    (0..n).map(|_| normal.sample(&mut rng)).collect()
}

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

fn spectrum(x: &[f64]) -> Vec<f64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(x.len()).process(&mut buf);
    buf[..=x.len() / 2].iter().map(|c| c.norm_sqr()).collect()
}

#[test]
fn demean_random_series() {
    let x: Vec<f64> = white(1, 4000).iter().map(|v| v * 30.0 + 1e3).collect();
    let y = demean(&x);
    let max = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!((y.iter().sum::<f64>() / y.len() as f64).abs() < 1e-12 * max);
}

#[test]
fn detrend_matches_normal_equations() {
    let n = 1000;
    let noise = white(2, n);
    let x: Vec<f64> = (0..n).map(|i| 0.37 * i as f64 - 12.0 + noise[i]).collect();
    // closed form least squares for y = a + b t
    let t: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let (st, sy) = (t.iter().sum::<f64>(), x.iter().sum::<f64>());
    let stt = t.iter().map(|v| v * v).sum::<f64>();
    let sty = t.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
    let nf = n as f64;
    let b = (nf * sty - st * sy) / (nf * stt - st * st);
    let a = (sy - b * st) / nf;
    let want: Vec<f64> = x.iter().zip(&t).map(|(v, ti)| v - a - b * ti).collect();
    let got = detrend_linear(&x).unwrap();
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).abs() < 1e-9, "{g} vs {w}");
    }
    let dot1: f64 = got.iter().sum();
    let dott: f64 = got.iter().zip(&t).map(|(a, b)| a * b).sum();
    assert!(dot1.abs() < 1e-8 && dott.abs() < 1e-5);
    assert!(matches!(detrend_linear(&[1.0]), Err(Error::TooShort { .. }) | Err(_)));
}

#[test]
fn tones_through_default_band() {
    let rate = 200.0;
    let spec = BandpassSpec::default();
    let tone = |f: f64| -> Vec<f64> {
        (0..8000)
            .map(|i| (2.0 * std::f64::consts::PI * f * i as f64 / rate).sin())
            .collect()
    };
    let mid = |x: &[f64]| x[1000..7000].to_vec();
    let low = tone(1.0);
    let out = bandpass(&low, rate, &spec).unwrap();
    assert!(20.0 * (rms(&mid(&low)) / rms(&mid(&out))).log10() >= 20.0);
    let pass = tone(12.0);
    let out = bandpass(&pass, rate, &spec).unwrap();
    assert!((20.0 * (rms(&mid(&out)) / rms(&mid(&pass))).log10()).abs() <= 1.0);
    assert!(bandpass(&vec![0.0; 500], rate, &spec).unwrap().iter().all(|v| *v == 0.0));
}

#[test]
fn response_oracle_squared_for_zero_phase() {
    let rate = 200.0;
    let filt = SosFilter::butterworth_bandpass(&BandpassSpec::default(), rate).unwrap();
    let n = 4096;
    let mut imp = vec![0.0; n];
    imp[n / 2] = 1.0;
    let spec = spectrum(&filt.filtfilt(&imp));
    for k in (20..400).step_by(37) {
        let f = k as f64 * rate / n as f64;
        let designed = filt.response(f, rate).norm_sqr();
        assert!((spec[k].sqrt() - designed).abs() < 1e-6, "{f} Hz");
    }
}

#[test]
fn event_window_out_of_band_energy_suppressed() {
    let spec = SynthSpec { snr: 8.0, ..SynthSpec::default() };
    let w = make_event_window(&spec, 20.0, 10.0).unwrap();
    let p = preprocess_window(&w, &BandpassSpec::default()).unwrap();
    assert_eq!(p.samples.iter().fold(0.0f64, |m, v| m.max(v.abs())), 1.0);
    let band_ratio = |x: &[f64]| {
        let s = spectrum(x);
        let df = 200.0 / x.len() as f64;
        let (mut inb, mut outb) = (0.0, 0.0);
        for (k, p) in s.iter().enumerate() {
            let f = k as f64 * df;
            if (5.0..=25.0).contains(&f) {
                inb += p;
            } else if !(3.0..=35.0).contains(&f) {
                outb += p;
            }
        }
        outb / inb
    };
    let before = band_ratio(&demean(&w.samples));
    let after = band_ratio(&p.samples);
    assert!(10.0 * (before / after).log10() >= 20.0, "{before} {after}");
}

#[test]
fn preprocessing_twice_is_nearly_idempotent_in_band() {
    let samples: Vec<f64> = (0..4000)
        .map(|i| (2.0 * std::f64::consts::PI * 12.0 * i as f64 / 200.0).sin())
        .collect();
    let w = quakesift::Window { samples, ..make_event_window(&SynthSpec::default(), 20.0, 9.0).unwrap() };
    let once = preprocess_window(&w, &BandpassSpec::default()).unwrap();
    let twice = preprocess_window(&once, &BandpassSpec::default()).unwrap();
    let diff: Vec<f64> = once.samples.iter().zip(&twice.samples).map(|(a, b)| a - b).collect();
    assert!(rms(&diff) < 0.01 * rms(&once.samples), "{}", rms(&diff) / rms(&once.samples));
}

#[test]
fn second_pass_on_event_window_only_reshapes_band_edges() {
    // broadband event energy near the corners is attenuated again
    let spec = SynthSpec { snr: 6.0, ..SynthSpec::default() };
    let w = make_event_window(&spec, 20.0, 9.0).unwrap();
    let once = preprocess_window(&w, &BandpassSpec::default()).unwrap();
    let twice = preprocess_window(&once, &BandpassSpec::default()).unwrap();
    let (a, b) = (spectrum(&once.samples), spectrum(&twice.samples));
    let scale = a.iter().sum::<f64>() / b.iter().sum::<f64>();
    let df = 200.0 / 4000.0;
    for (k, (x, y)) in a.iter().zip(&b).enumerate() {
        let f = k as f64 * df;
        if (8.0..16.0).contains(&f) && *x > 1e-6 * a.iter().cloned().fold(0.0, f64::max) {
            assert!((y * scale / x - 1.0).abs() < 0.5, "{f} Hz");
        }
    }
}

#[test]
fn zero_window_rejected() {
    let w = make_event_window(&SynthSpec::default(), 20.0, 5.0).unwrap().with_samples(vec![0.0; 4000]);
    assert!(matches!(
        preprocess_window(&w, &BandpassSpec::default()),
        Err(Error::DegenerateWindow)
    ));
    assert!(normalize_unity(&[0.0, 0.0, 0.0]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bandpass_is_linear(sa in 0u64..1000, sb in 0u64..1000, a in -5.0f64..5.0, b in -5.0f64..5.0) {
        let spec = BandpassSpec::default();
        let x = white(sa, 1000);
        let y = white(sb + 5000, 1000);
        let mix: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let fx = bandpass(&x, 200.0, &spec).unwrap();
        let fy = bandpass(&y, 200.0, &spec).unwrap();
        let fm = bandpass(&mix, 200.0, &spec).unwrap();
        let scale = fm.iter().fold(1e-12f64, |m, v| m.max(v.abs()));
        for i in 0..fm.len() {
            prop_assert!((fm[i] - (a * fx[i] + b * fy[i])).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn normalize_unity_peak_is_one(seed in 0u64..1000, c in 1e-6f64..1e6) {
        let x: Vec<f64> = white(seed, 200).iter().map(|v| v * c).collect();
        let y = normalize_unity(&x).unwrap();
        prop_assert_eq!(y.iter().fold(0.0f64, |m, v| m.max(v.abs())), 1.0);
    }

    #[test]
    fn symmetric_pulse_peak_stays_put(center in 300usize..700, width in 0.03f64..0.2) {
        let filt = SosFilter::butterworth_bandpass(&BandpassSpec::default(), 200.0).unwrap();
        let x: Vec<f64> = (0..1000)
            .map(|i| {
                let t = (i as f64 - center as f64) / 200.0;
                (-(t / width).powi(2)).exp() * (2.0 * std::f64::consts::PI * 12.0 * t).cos()
            })
            .collect();
        let y = filt.filtfilt(&x);
        let peak = y.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).unwrap().0;
        prop_assert!((peak as i64 - center as i64).abs() <= 1);
    }
}
