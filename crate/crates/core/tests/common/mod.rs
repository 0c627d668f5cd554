#![allow(dead_code)]

use odm_core::corpus::{NGramModel, Vocabulary};
use odm_core::rng::{stream, Stream};
use odm_core::{LinearClassifier, SequenceDataset};
use rand::Rng;
use rand_distr::StandardNormal;

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
    Instance { model, data, lm: random_lm(classes, order, &mut rng) }
}

pub fn random_lm(classes: usize, order: usize, rng: &mut impl Rng) -> NGramModel {
    let size = classes.pow(order as u32);
    let raw: Vec<f64> = (0..size).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    NGramModel::from_entries(
        Vocabulary::numbered(classes).unwrap(),
        order,
        raw.into_iter().enumerate().map(|(i, v)| (i, v / total)).collect(),
        1e-12,
    )
    .unwrap()
}

/// Random model sharing the instance's shape.
pub fn random_model(like: &LinearClassifier, scale: f64, rng: &mut impl Rng) -> LinearClassifier {
    let weights = (0..like.weights().len()).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
    like.with_weights(weights)
}

/// Central differences of `f` with respect to every weight.
pub fn central_difference(model: &LinearClassifier, h: f64, f: impl Fn(&LinearClassifier) -> f64) -> Vec<f64> {
    let mut w = model.weights().to_vec();
    (0..w.len())
        .map(|k| {
            let orig = w[k];
            w[k] = orig + h;
            let plus = f(&model.with_weights(w.clone()));
            w[k] = orig - h;
            let minus = f(&model.with_weights(w.clone()));
            w[k] = orig;
            (plus - minus) / (2.0 * h)
        })
        .collect()
}

/// `‖a - b‖ / max(‖a‖, ‖b‖)`, zero when both vanish.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}
