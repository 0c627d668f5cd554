//! Shared fixtures for unit tests.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::corpus::{NGramModel, Vocabulary};
use crate::model::LinearClassifier;
use crate::rng::{stream, Stream};
use crate::synthdata::SequenceDataset;

pub struct Instance {
    pub model: LinearClassifier,
    pub data: SequenceDataset,
    pub lm: NGramModel,
}

/// Gaussian weights and inputs with a full-support random prior.
pub fn random_instance(classes: usize, dim: usize, order: usize, lengths: &[usize], seed: u64) -> Instance {
    let mut rng = stream(seed, Stream::Scratch);
    let weights = (0..classes * dim).map(|_| 0.6 * rng.sample::<f64, _>(StandardNormal)).collect();
    let model = LinearClassifier::from_weights(classes, dim, 1.5, weights).unwrap();
    let features = lengths
        .iter()
        .map(|&t| (0..t * dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    let data = SequenceDataset::new(dim, classes, features, None).unwrap();
    let size = classes.pow(order as u32);
    let raw: Vec<f64> = (0..size).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let lm = NGramModel::from_entries(
        Vocabulary::numbered(classes).unwrap(),
        order,
        raw.iter().enumerate().map(|(i, v)| (i, v / total)).collect(),
        1e-12,
    )
    .unwrap();
    Instance { model, data, lm }
}

pub fn central_difference(model: &LinearClassifier, f: impl Fn(&LinearClassifier) -> f64) -> Vec<f64> {
    let h = 1e-5;
    (0..model.weights().len())
        .map(|k| {
            let mut plus = model.weights().to_vec();
            let mut minus = model.weights().to_vec();
            plus[k] += h;
            minus[k] -= h;
            (f(&model.with_weights(plus)) - f(&model.with_weights(minus))) / (2.0 * h)
        })
        .collect()
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let norm: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / norm.max(1e-300)
}
