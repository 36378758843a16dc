//! Multinomial logistic regression trained full-batch with Adam.

use serde::{Deserialize, Serialize};

use super::adam::AdamState;
use super::matrix::Matrix;
use super::Parameters;
use crate::error::{Result, StcError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    pub lr: f64,
    pub epochs: usize,
    /// L2 penalty on the weights (not the bias).
    pub reg: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            lr: 0.05,
            epochs: 300,
            reg: 1e-3,
        }
    }
}

/// Linear softmax classifier over standardised features.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier {
    feature_mean: Vec<f64>,
    feature_scale: Vec<f64>,
    weights: Matrix,
    bias: Vec<f64>,
}

impl Parameters for LinearClassifier {
    fn named_tensors(&self) -> Vec<(String, &[f64])> {
        vec![
            ("weight".to_string(), self.weights.data()),
            ("bias".to_string(), self.bias.as_slice()),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![self.weights.data_mut(), self.bias.as_mut_slice()]
    }
}

impl LinearClassifier {
    pub fn n_features(&self) -> usize {
        self.weights.rows()
    }

    pub fn n_classes(&self) -> usize {
        self.weights.cols()
    }

    fn standardize(&self, features: &Matrix) -> Result<Matrix> {
        if features.cols() != self.n_features() {
            return Err(StcError::Shape(format!(
                "classifier expects {} features, got {}",
                self.n_features(),
                features.cols()
            )));
        }
        let mut x = features.clone();
        for r in 0..x.rows() {
            for ((v, m), s) in x.row_mut(r).iter_mut().zip(&self.feature_mean).zip(&self.feature_scale) {
                *v = (*v - m) / s;
            }
        }
        Ok(x)
    }

    fn logits_of(&self, x: &Matrix) -> Result<Matrix> {
        let mut logits = x.matmul(&self.weights)?;
        for r in 0..logits.rows() {
            for (v, b) in logits.row_mut(r).iter_mut().zip(&self.bias) {
                *v += b;
            }
        }
        Ok(logits)
    }

    pub fn decision_function(&self, features: &Matrix) -> Result<Matrix> {
        self.logits_of(&self.standardize(features)?)
    }

    pub fn predict(&self, features: &Matrix) -> Result<Vec<usize>> {
        let logits = self.decision_function(features)?;
        Ok((0..logits.rows()).map(|r| argmax(logits.row(r))).collect())
    }

    /// Top-1 fraction correct.
    pub fn accuracy(&self, features: &Matrix, labels: &[usize]) -> Result<f64> {
        if labels.len() != features.rows() {
            return Err(StcError::Shape("label count differs from feature rows".into()));
        }
        let pred = self.predict(features)?;
        let hits = pred.iter().zip(labels).filter(|(p, l)| p == l).count();
        Ok(hits as f64 / labels.len() as f64)
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Row-wise softmax in place.
pub(crate) fn softmax_rows(m: &mut Matrix) {
    for r in 0..m.rows() {
        let row = m.row_mut(r);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
}

/// Per-feature mean and population std; constant features get scale 1.
pub(crate) fn feature_moments(features: &Matrix) -> (Vec<f64>, Vec<f64>) {
    let n = features.rows() as f64;
    let mean: Vec<f64> = features.column_sums().iter().map(|s| s / n).collect();
    let mut var = vec![0.0; features.cols()];
    for r in 0..features.rows() {
        for ((v, x), m) in var.iter_mut().zip(features.row(r)).zip(&mean) {
            *v += (x - m) * (x - m);
        }
    }
    let scale = var
        .iter()
        .map(|v| {
            let s = (v / n).sqrt();
            if s > 1e-12 {
                s
            } else {
                1.0
            }
        })
        .collect();
    (mean, scale)
}

/// Fits softmax regression on `features` (rows = samples) and `labels` in `[0, C)`,
/// with `C = max(label) + 1`.
pub fn train_logistic(features: &Matrix, labels: &[usize], cfg: &LogisticConfig) -> Result<LinearClassifier> {
    if labels.len() != features.rows() {
        return Err(StcError::Shape(format!(
            "{} labels for {} feature rows",
            labels.len(),
            features.rows()
        )));
    }
    if !features.is_finite() {
        return Err(StcError::NonFinite("logistic regression features".into()));
    }
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let distinct = {
        let mut seen = vec![false; n_classes];
        labels.iter().for_each(|&l| seen[l] = true);
        seen.iter().filter(|&&s| s).count()
    };
    if distinct < 2 {
        return Err(StcError::InvalidArgument(
            "logistic regression needs at least two distinct classes".into(),
        ));
    }

    let (feature_mean, feature_scale) = feature_moments(features);
    let mut clf = LinearClassifier {
        feature_mean,
        feature_scale,
        weights: Matrix::zeros(features.cols(), n_classes),
        bias: vec![0.0; n_classes],
    };
    let x = clf.standardize(features)?;
    let n = x.rows() as f64;
    let mut adam = AdamState::new(&clf, cfg.lr);
    for _ in 0..cfg.epochs {
        let mut delta = clf.logits_of(&x)?;
        softmax_rows(&mut delta);
        for (r, &l) in labels.iter().enumerate() {
            let row = delta.row_mut(r);
            row[l] -= 1.0;
            row.iter_mut().for_each(|v| *v /= n);
        }
        let mut gw = x.matmul_tn(&delta)?;
        for (g, w) in gw.data_mut().iter_mut().zip(clf.weights.data()) {
            *g += cfg.reg * w;
        }
        let grads = LinearClassifier {
            feature_mean: Vec::new(),
            feature_scale: Vec::new(),
            weights: gw,
            bias: delta.column_sums(),
        };
        adam.update(&mut clf, &grads)?;
    }
    Ok(clf)
}
