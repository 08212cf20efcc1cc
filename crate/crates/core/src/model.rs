//! Five-parameter logistic regression: four weights and a bias.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::features::FeatureVector;
use crate::matrix::{FeatureMatrix, NormParam};
use crate::trace_io::Label;

pub const N_FEATURES: usize = 4;
pub const MIN_ROWS_PER_CLASS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub stratified: bool,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.7,
            stratified: true,
            seed: 42,
        }
    }
}

/// Row-disjoint train/test partition. Each class (or the whole matrix when
/// not stratified) is shuffled with a seeded stream and its first
/// `round(fraction * n)` rows go to training. Both halves keep input order.
pub fn split(m: &FeatureMatrix, spec: &SplitSpec) -> Result<(FeatureMatrix, FeatureMatrix)> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train_fraction must lie in (0, 1), got {}",
            spec.train_fraction
        )));
    }
    let (events, noise) = m.class_counts();
    for (class, count) in [("event", events), ("noise", noise)] {
        if count < MIN_ROWS_PER_CLASS {
            return Err(Error::ClassTooSmall {
                class,
                count,
                need: MIN_ROWS_PER_CLASS,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let groups: Vec<Vec<usize>> = if spec.stratified {
        [Label::Event, Label::Noise]
            .iter()
            .map(|c| (0..m.n_rows()).filter(|&i| m.labels[i] == *c).collect())
            .collect()
    } else {
        vec![(0..m.n_rows()).collect()]
    };
    let mut train = Vec::new();
    let mut test = Vec::new();
    for mut g in groups {
        g.shuffle(&mut rng);
        let n_train = (spec.train_fraction * g.len() as f64).round() as usize;
        train.extend_from_slice(&g[..n_train]);
        test.extend_from_slice(&g[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((m.subset_rows(&train), m.subset_rows(&test)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub learning_rate: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub l2: f64,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            learning_rate: 0.5,
            max_iters: 5000,
            tol: 1e-8,
            l2: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub final_loss: f64,
    pub iterations: usize,
    pub converged: bool,
    pub grad_inf_norm: f64,
    pub train_accuracy: Option<f64>,
    pub test_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub feature_names: Vec<String>,
    pub weights: [f64; N_FEATURES],
    pub bias: f64,
    pub norm_params: Vec<NormParam>,
    pub trained_at: Option<String>,
    pub hyper: Hyper,
    pub diagnostics: Diagnostics,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Training rows as dense 4-vectors with 0/1 targets.
#[derive(Debug, Clone)]
pub struct Design {
    pub x: Vec<[f64; N_FEATURES]>,
    pub y: Vec<f64>,
}

impl Design {
    pub fn from_matrix(m: &FeatureMatrix) -> Result<Design> {
        if !m.is_normalized() {
            return Err(Error::NotNormalized);
        }
        if m.feature_names.len() != N_FEATURES {
            return Err(Error::InvalidParameter(format!(
                "logistic model needs exactly {N_FEATURES} features, got {}",
                m.feature_names.len()
            )));
        }
        let mut x = Vec::with_capacity(m.n_rows());
        let mut y = Vec::with_capacity(m.n_rows());
        for (row, label) in m.rows.iter().zip(&m.labels) {
            y.push(match label {
                Label::Event => 1.0,
                Label::Noise => 0.0,
                Label::Unlabeled => {
                    return Err(Error::MalformedData("training rows must be labeled".into()))
                }
            });
            x.push([row[0], row[1], row[2], row[3]]);
        }
        Ok(Design { x, y })
    }
}

/// Parameters packed as `[w0, w1, w2, w3, bias]`.
pub type Params = [f64; N_FEATURES + 1];

fn logit(p: &Params, x: &[f64; N_FEATURES]) -> f64 {
    p[0] * x[0] + p[1] * x[1] + p[2] * x[2] + p[3] * x[3] + p[4]
}

/// Mean negative log-likelihood plus `l2 * |w|^2 / 2` (bias unpenalized).
///
/// Per-row terms are reduced with an order-invariant sum, so the value does
/// not depend on row order or on the execution mode.
pub fn loss(d: &Design, p: &Params, l2: f64, mode: ExecMode) -> f64 {
    let mut terms = exec::map_range(mode, d.x.len(), |i| {
        let z = logit(p, &d.x[i]);
        softplus(z) - d.y[i] * z
    });
    let n = d.x.len() as f64;
    let w2: f64 = p[..N_FEATURES].iter().map(|w| w * w).sum();
    exec::order_invariant_sum(&mut terms) / n + 0.5 * l2 * w2
}

pub fn gradient(d: &Design, p: &Params, l2: f64, mode: ExecMode) -> Params {
    let residuals = exec::map_range(mode, d.x.len(), |i| sigmoid(logit(p, &d.x[i])) - d.y[i]);
    let n = d.x.len() as f64;
    let mut g = [0.0; N_FEATURES + 1];
    let mut terms = vec![0.0; d.x.len()];
    for (k, gk) in g.iter_mut().enumerate() {
        for (i, t) in terms.iter_mut().enumerate() {
            *t = if k < N_FEATURES {
                residuals[i] * d.x[i][k]
            } else {
                residuals[i]
            };
        }
        *gk = exec::order_invariant_sum(&mut terms) / n;
        if k < N_FEATURES {
            *gk += l2 * p[k];
        }
    }
    g
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: LogRegModel,
    /// Loss before the first step and after every step.
    pub loss_history: Vec<f64>,
}

/// Full-batch gradient descent from zero.
pub fn train(m: &FeatureMatrix, hyper: &Hyper, mode: ExecMode) -> Result<TrainOutcome> {
    let d = Design::from_matrix(m)?;
    let (events, noise) = m.class_counts();
    if events == 0 {
        return Err(Error::EmptyClass("event"));
    }
    if noise == 0 {
        return Err(Error::EmptyClass("noise"));
    }
    if !(hyper.learning_rate > 0.0) || !(hyper.l2 >= 0.0) || !(hyper.tol >= 0.0) {
        return Err(Error::InvalidParameter(format!("bad hyperparameters {hyper:?}")));
    }

    let mut p: Params = [0.0; N_FEATURES + 1];
    let mut history = vec![loss(&d, &p, hyper.l2, mode)];
    let mut iterations = 0;
    let mut converged = false;
    let mut g_norm = f64::INFINITY;
    while iterations < hyper.max_iters {
        let g = gradient(&d, &p, hyper.l2, mode);
        g_norm = g.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if g_norm < hyper.tol {
            converged = true;
            break;
        }
        for (pk, gk) in p.iter_mut().zip(&g) {
            *pk -= hyper.learning_rate * gk;
        }
        iterations += 1;
        let l = loss(&d, &p, hyper.l2, mode);
        if !l.is_finite() {
            return Err(Error::NonFiniteLoss(iterations));
        }
        history.push(l);
    }
    if !converged {
        log::info!(
            "gradient descent stopped after {iterations} iterations (|grad|inf = {g_norm:.3e})"
        );
    }
    let model = LogRegModel {
        feature_names: m.feature_names.clone(),
        weights: [p[0], p[1], p[2], p[3]],
        bias: p[4],
        norm_params: m.norm_params.clone().unwrap_or_default(),
        trained_at: None,
        hyper: *hyper,
        diagnostics: Diagnostics {
            final_loss: *history.last().unwrap(),
            iterations,
            converged,
            grad_inf_norm: g_norm,
            train_accuracy: None,
            test_accuracy: None,
        },
    };
    Ok(TrainOutcome {
        model,
        loss_history: history,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub true_positive: usize,
    pub false_positive: usize,
    pub true_negative: usize,
    pub false_negative: usize,
}

impl LogRegModel {
    pub fn params(&self) -> Params {
        let w = self.weights;
        [w[0], w[1], w[2], w[3], self.bias]
    }

    pub fn validate(&self) -> Result<()> {
        let names: Vec<&String> = self.norm_params.iter().map(|p| &p.feature).collect();
        if self.feature_names.len() != N_FEATURES
            || names != self.feature_names.iter().collect::<Vec<_>>()
        {
            return Err(Error::MalformedData(
                "model feature names must match its normalization parameters".into(),
            ));
        }
        if self.norm_params.iter().any(|p| !(p.iqr > 0.0)) {
            return Err(Error::MalformedData("model has a non-positive IQR".into()));
        }
        Ok(())
    }

    pub fn logit(&self, x: &[f64; N_FEATURES]) -> f64 {
        logit(&self.params(), x)
    }

    /// Probability of an event for already-normalized inputs.
    pub fn predict_proba(&self, x: &[f64; N_FEATURES]) -> f64 {
        sigmoid(self.logit(x))
    }

    /// Pick the model's features out of a raw vector and normalize them
    /// with the training medians and IQRs.
    pub fn normalize(&self, v: &FeatureVector) -> Result<[f64; N_FEATURES]> {
        if v.unusable {
            return Err(Error::UnusableVector);
        }
        let mut x = [0.0; N_FEATURES];
        for (xi, p) in x.iter_mut().zip(&self.norm_params) {
            let raw = v
                .get_by_name(&p.feature)
                .ok_or_else(|| Error::MissingFeature(p.feature.clone()))?;
            *xi = p.apply(raw);
        }
        Ok(x)
    }

    pub fn probability(&self, v: &FeatureVector) -> Result<f64> {
        Ok(self.predict_proba(&self.normalize(v)?))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<LogRegModel> {
        let m: LogRegModel = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<LogRegModel> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        LogRegModel::from_json(&text)
    }
}

/// Confusion-matrix metrics; a probability equal to `threshold` counts as an event.
pub fn evaluate(model: &LogRegModel, data: &FeatureMatrix, threshold: f64) -> Result<Metrics> {
    if data.n_rows() == 0 {
        return Err(Error::EmptyData);
    }
    let d = Design::from_matrix(data)?;
    let (mut tp, mut fp, mut tn, mut fneg) = (0, 0, 0, 0);
    for (x, y) in d.x.iter().zip(&d.y) {
        let event = model.predict_proba(x) >= threshold;
        match (event, *y == 1.0) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fneg += 1,
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    Ok(Metrics {
        accuracy: ratio(tp + tn, d.x.len()),
        precision: ratio(tp, tp + fp),
        recall: ratio(tp, tp + fneg),
        true_positive: tp,
        false_positive: fp,
        true_negative: tn,
        false_negative: fneg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: Vec<[f64; 4]>, labels: Vec<Label>) -> FeatureMatrix {
        let names: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        let mut m = FeatureMatrix::new(
            names.clone(),
            vec![0.0; rows.len()],
            labels,
            rows.into_iter().map(|r| r.to_vec()).collect(),
        )
        .unwrap();
        m.norm_params = Some(
            names
                .into_iter()
                .map(|feature| NormParam {
                    feature,
                    median: 0.0,
                    iqr: 1.0,
                })
                .collect(),
        );
        m
    }

    fn zero_model() -> LogRegModel {
        LogRegModel {
            feature_names: ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect(),
            weights: [0.0; 4],
            bias: 0.0,
            norm_params: ["a", "b", "c", "d"]
                .iter()
                .map(|s| NormParam {
                    feature: s.to_string(),
                    median: 0.0,
                    iqr: 1.0,
                })
                .collect(),
            trained_at: None,
            hyper: Hyper::default(),
            diagnostics: Diagnostics {
                final_loss: 0.0,
                iterations: 0,
                converged: true,
                grad_inf_norm: 0.0,
                train_accuracy: None,
                test_accuracy: None,
            },
        }
    }

    #[test]
    fn split_counts() {
        let mut labels = vec![Label::Event; 40];
        labels.extend(vec![Label::Noise; 60]);
        let m = matrix((0..100).map(|i| [i as f64; 4]).collect(), labels);
        let spec = SplitSpec::default();
        let (train, test) = split(&m, &spec).unwrap();
        assert_eq!(train.class_counts(), (28, 42));
        assert_eq!(test.class_counts(), (12, 18));
        let (train2, _) = split(&m, &spec).unwrap();
        assert_eq!(train, train2);
        let mut all: Vec<f64> = train.rows.iter().chain(&test.rows).map(|r| r[0]).collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, (0..100).map(|i| i as f64).collect::<Vec<_>>());
    }

    #[test]
    fn split_rejects_small_class() {
        let labels = vec![Label::Event, Label::Event, Label::Noise, Label::Noise];
        let m = matrix(vec![[0.0; 4]; 4], labels);
        assert!(matches!(
            split(&m, &SplitSpec::default()),
            Err(Error::ClassTooSmall { .. })
        ));
    }

    #[test]
    fn zero_model_probabilities() {
        let mut model = zero_model();
        assert_eq!(model.predict_proba(&[3.0, -1.0, 0.2, 9.0]), 0.5);
        model.bias = 10.0;
        let p = model.predict_proba(&[1.0; 4]);
        assert!((p - 0.9999546021312976).abs() < 1e-15);
    }

    #[test]
    fn tie_counts_as_event() {
        let model = zero_model();
        let mut labels = vec![Label::Event; 3];
        labels.extend(vec![Label::Noise; 7]);
        let m = matrix(vec![[0.1; 4]; 10], labels);
        let metrics = evaluate(&model, &m, 0.5).unwrap();
        assert_eq!(metrics.accuracy, 0.3);
        assert_eq!(metrics.true_positive, 3);
        assert_eq!(metrics.false_positive, 7);
    }

    #[test]
    fn separable_training() {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..20 {
            let t = i as f64 * 0.01;
            rows.push([0.8 + t, 0.7, 0.6 - t, 0.9]);
            labels.push(Label::Event);
            rows.push([0.2 - t, 0.3, 0.4 + t, 0.1]);
            labels.push(Label::Noise);
        }
        let m = matrix(rows, labels);
        let hyper = Hyper {
            l2: 1e-4,
            ..Hyper::default()
        };
        let out = train(&m, &hyper, ExecMode::Sequential).unwrap();
        assert_eq!(evaluate(&out.model, &m, 0.5).unwrap().accuracy, 1.0);
        assert!(out.loss_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn nonfinite_loss_reported() {
        let mut labels = vec![Label::Event; 2];
        labels.extend(vec![Label::Noise; 2]);
        let m = matrix(vec![[1e200; 4], [1e200; 4], [-1e200; 4], [-1e200; 4]], labels);
        let hyper = Hyper {
            learning_rate: 1e300,
            ..Hyper::default()
        };
        assert!(matches!(
            train(&m, &hyper, ExecMode::Sequential),
            Err(Error::NonFiniteLoss(_))
        ));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut model = zero_model();
        model.weights = [0.1, -2.5e-7, std::f64::consts::E, 1e300];
        model.bias = -0.3;
        let back = LogRegModel::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(back, model);
    }
}
