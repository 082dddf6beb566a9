use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Matrix;
use crate::error::{Error, Result};

/// Training knobs for the logistic-regression baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub seed: u64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig { epochs: 300, learning_rate: 0.5, l2: 1e-4, seed: 42 }
    }
}

/// Logistic regression with training-set standardization baked in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    weights: Vec<f64>,
    bias: f64,
    means: Vec<f64>,
    stds: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable log(1 + exp(z)).
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Standardizes a matrix column-wise with the given means and divisors.
fn standardize(x: &Matrix, means: &[f64], stds: &[f64]) -> Matrix {
    let mut out = x.clone();
    for r in 0..x.n_rows() {
        for c in 0..x.n_cols() {
            out.set(r, c, (x.get(r, c) - means[c]) / stds[c]);
        }
    }
    out
}

/// Mean L2-regularized log-loss and its gradient with respect to weights
/// and bias, on already-standardized data. Public so tests can check the
/// gradient against finite differences.
pub fn loss_and_gradient(
    x: &Matrix,
    y: &[u8],
    weights: &[f64],
    bias: f64,
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let n = x.n_rows();
    let d = x.n_cols();
    let mut loss = 0.0;
    let mut grad_w = vec![0.0; d];
    let mut grad_b = 0.0;
    for (r, &label) in y.iter().enumerate().take(n) {
        let row = x.row(r);
        let z: f64 = bias + row.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>();
        let target = label as f64;
        loss += softplus(z) - target * z;
        let residual = sigmoid(z) - target;
        for (g, v) in grad_w.iter_mut().zip(row) {
            *g += residual * v;
        }
        grad_b += residual;
    }
    let n = n as f64;
    loss /= n;
    grad_b /= n;
    for (g, w) in grad_w.iter_mut().zip(weights) {
        *g = *g / n + l2 * w;
    }
    loss += 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>();
    (loss, grad_w, grad_b)
}

/// Fits the baseline by full-batch gradient descent. Features are
/// standardized by training mean and standard deviation; zero-variance
/// columns get divisor 1 so they contribute a constant zero.
pub fn train_logistic(x: &Matrix, y: &[u8], cfg: &LogisticConfig) -> Result<LinearModel> {
    if x.n_rows() != y.len() {
        return Err(Error::Usage(format!(
            "{} rows vs {} labels",
            x.n_rows(),
            y.len()
        )));
    }
    if x.n_rows() < 2 {
        return Err(Error::Training("training needs at least 2 samples".to_string()));
    }
    if !x.all_finite() {
        return Err(Error::Training(
            "training data contains missing or non-finite values; run preprocessing first"
                .to_string(),
        ));
    }
    let pos = y.iter().filter(|&&l| l == 1).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::Training("training data contains a single class".to_string()));
    }
    if !(cfg.learning_rate > 0.0 && cfg.learning_rate.is_finite()) {
        return Err(Error::Config(format!(
            "learning_rate must be positive and finite, got {}",
            cfg.learning_rate
        )));
    }
    if cfg.l2 < 0.0 || !cfg.l2.is_finite() {
        return Err(Error::Config(format!("l2 must be non-negative, got {}", cfg.l2)));
    }

    let n = x.n_rows();
    let d = x.n_cols();
    let mut means = vec![0.0; d];
    let mut stds = vec![0.0; d];
    for c in 0..d {
        let mean = x.column(c).sum::<f64>() / n as f64;
        let var = x.column(c).map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        means[c] = mean;
        stds[c] = if var > 0.0 { var.sqrt() } else { 1.0 };
    }
    let xs = standardize(x, &means, &stds);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut weights: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.01..0.01)).collect();
    let mut bias = 0.0;
    for _ in 0..cfg.epochs {
        let (loss, grad_w, grad_b) = loss_and_gradient(&xs, y, &weights, bias, cfg.l2);
        if !loss.is_finite() {
            return Err(Error::Divergence(
                "log-loss became non-finite; lower the learning rate".to_string(),
            ));
        }
        for (w, g) in weights.iter_mut().zip(&grad_w) {
            *w -= cfg.learning_rate * g;
        }
        bias -= cfg.learning_rate * grad_b;
    }
    let (final_loss, _, _) = loss_and_gradient(&xs, y, &weights, bias, cfg.l2);
    if !final_loss.is_finite() {
        return Err(Error::Divergence(
            "log-loss became non-finite; lower the learning rate".to_string(),
        ));
    }

    Ok(LinearModel { weights, bias, means, stds })
}

impl LinearModel {
    pub fn n_features(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Positive-class probabilities for each input row.
    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.n_cols() != self.weights.len() {
            return Err(Error::Usage(format!(
                "model trained on {} features, input has {}",
                self.weights.len(),
                x.n_cols()
            )));
        }
        if !x.all_finite() {
            return Err(Error::Usage(
                "prediction input contains missing or non-finite values".to_string(),
            ));
        }
        let xs = standardize(x, &self.means, &self.stds);
        Ok((0..xs.n_rows())
            .map(|r| {
                let z: f64 = self.bias
                    + xs.row(r).iter().zip(&self.weights).map(|(v, w)| v * w).sum::<f64>();
                sigmoid(z)
            })
            .collect())
    }
}
