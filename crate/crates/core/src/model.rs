//! Linear softmax classifier `p(y = i | x) ∝ exp(γ w_i·x)`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::synthdata::SequenceDataset;

/// Default inverse temperature.
pub const DEFAULT_GAMMA: f64 = 10.0;

/// Floor applied to probabilities before any logarithm.
pub const PROB_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier {
    classes: usize,
    dim: usize,
    gamma: f64,
    /// Row-major `classes x dim`.
    weights: Vec<f64>,
}

impl LinearClassifier {
    /// Every weight set to `value`; any constant gives the uniform posterior.
    pub fn constant(classes: usize, dim: usize, gamma: f64, value: f64) -> Self {
        Self { classes, dim, gamma, weights: vec![value; classes * dim] }
    }

    pub fn from_weights(classes: usize, dim: usize, gamma: f64, weights: Vec<f64>) -> Result<Self> {
        if classes == 0 || dim == 0 {
            return Err(Error::InvalidArgument("classifier needs classes >= 1 and dim >= 1".into()));
        }
        if weights.len() != classes * dim {
            return Err(Error::DimensionMismatch { expected: classes * dim, found: weights.len() });
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidArgument(format!("gamma must be positive, got {gamma}")));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { classes, dim, gamma, weights })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn row(&self, class: usize) -> &[f64] {
        &self.weights[class * self.dim..(class + 1) * self.dim]
    }

    /// Copy with weights replaced; shape and γ are kept.
    pub fn with_weights(&self, weights: Vec<f64>) -> Self {
        assert_eq!(weights.len(), self.weights.len());
        Self { weights, ..self.clone() }
    }

    /// Softmax posterior without input validation. `out.len()` must be `classes`.
    pub fn posterior_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        let mut max = f64::NEG_INFINITY;
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.weights[i * self.dim..(i + 1) * self.dim];
            let z = self.gamma * row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            *o = z;
            max = max.max(z);
        }
        let mut total = 0.0;
        for o in out.iter_mut() {
            *o = (*o - max).exp();
            total += *o;
        }
        for o in out.iter_mut() {
            *o /= total;
        }
    }

    pub fn posterior(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut out = vec![0.0; self.classes];
        self.posterior_into(x, &mut out);
        Ok(out)
    }

    /// Posteriors of every position of a flattened `T x dim` sequence, as `T x classes`.
    pub fn sequence_posteriors(&self, features: &[f64]) -> Vec<f64> {
        let t = features.len() / self.dim;
        let mut out = vec![0.0; t * self.classes];
        for (x, p) in features.chunks_exact(self.dim).zip(out.chunks_exact_mut(self.classes)) {
            self.posterior_into(x, p);
        }
        out
    }

    /// Jacobian `∂p_i/∂w_j = γ p_i (δ_ij - p_j) x`, laid out `[i][j][dim]`.
    pub fn posterior_jacobian(&self, x: &[f64]) -> Result<Vec<f64>> {
        let p = self.posterior(x)?;
        let (c, d) = (self.classes, self.dim);
        let mut jac = vec![0.0; c * c * d];
        for i in 0..c {
            for j in 0..c {
                let delta = if i == j { 1.0 } else { 0.0 };
                let scale = self.gamma * p[i] * (delta - p[j]);
                let block = &mut jac[(i * c + j) * d..(i * c + j + 1) * d];
                for (b, v) in block.iter_mut().zip(x) {
                    *b = scale * v;
                }
            }
        }
        Ok(jac)
    }

    /// Adds `scale * ∂f/∂W` to `grad`, where `upstream[i] = ∂f/∂p_i` at input `x`
    /// with posterior `p`.
    pub(crate) fn backprop_posterior(
        &self,
        x: &[f64],
        p: &[f64],
        upstream: &[f64],
        scale: f64,
        grad: &mut [f64],
    ) {
        let mean: f64 = p.iter().zip(upstream).map(|(a, b)| a * b).sum();
        for j in 0..self.classes {
            let coeff = scale * self.gamma * p[j] * (upstream[j] - mean);
            if coeff == 0.0 {
                continue;
            }
            let row = &mut grad[j * self.dim..(j + 1) * self.dim];
            for (g, v) in row.iter_mut().zip(x) {
                *g += coeff * v;
            }
        }
    }

    /// Argmax of the logits; ties go to the smallest id.
    pub fn predict(&self, x: &[f64]) -> usize {
        let mut best = 0;
        let mut best_z = f64::NEG_INFINITY;
        for i in 0..self.classes {
            let z: f64 = self.row(i).iter().zip(x).map(|(w, v)| w * v).sum();
            if z > best_z {
                best = i;
                best_z = z;
            }
        }
        best
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(())
    }
}

/// Fraction of labeled positions where the prediction differs from the label.
pub fn eval_error(model: &LinearClassifier, dataset: &SequenceDataset) -> Result<f64> {
    let labels = dataset.labels().ok_or(Error::MissingLabels)?;
    if dataset.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), found: dataset.dim() });
    }
    let mut wrong = 0usize;
    let mut total = 0usize;
    for (n, seq_labels) in labels.iter().enumerate() {
        for (x, &y) in dataset.sequence(n).chunks_exact(dataset.dim()).zip(seq_labels) {
            wrong += usize::from(model.predict(x) != y);
            total += 1;
        }
    }
    if total == 0 {
        return Err(Error::InvalidArgument("dataset has no positions".into()));
    }
    Ok(wrong as f64 / total as f64)
}

pub fn format_model(model: &LinearClassifier) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "linmodel {} {} {:.16e}", model.classes, model.dim, model.gamma);
    for i in 0..model.classes {
        let row: Vec<String> = model.row(i).iter().map(|w| format!("{w:.16e}")).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

pub fn parse_model(text: &str) -> Result<LinearClassifier> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "missing header"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (classes, dim, gamma) = match fields.as_slice() {
        ["linmodel", c, d, g] => (
            c.parse::<usize>().map_err(|_| Error::parse(1, "bad class count"))?,
            d.parse::<usize>().map_err(|_| Error::parse(1, "bad dimension"))?,
            g.parse::<f64>().map_err(|_| Error::parse(1, "bad gamma"))?,
        ),
        _ => return Err(Error::parse(1, "expected `linmodel <C> <d> <gamma>`")),
    };
    let mut weights = Vec::with_capacity(classes * dim);
    for _ in 0..classes {
        let (line_no, line) = lines
            .next()
            .ok_or_else(|| Error::parse(weights.len() / dim.max(1) + 2, "missing weight row"))?;
        let before = weights.len();
        for tok in line.split(',') {
            weights.push(
                tok.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::parse(line_no, format!("bad weight {tok:?}")))?,
            );
        }
        if weights.len() - before != dim {
            return Err(Error::parse(line_no, format!("expected {dim} weights")));
        }
    }
    LinearClassifier::from_weights(classes, dim, gamma, weights)
}

pub fn save_model(model: &LinearClassifier, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_model(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<LinearClassifier> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model(&text)
}
