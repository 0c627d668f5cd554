//! Synthetic labeled sequence data whose hidden labels follow a known
//! sequential prior.

mod dataset;
pub mod text;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

pub use dataset::{
    format_dataset, load_dataset, parse_dataset, save_dataset, SequenceDataset, Window,
};

use crate::error::{Error, Result};
use crate::rng::{stream, Stream};

const STOCHASTIC_TOLERANCE: f64 = 1e-12;

fn sample_categorical<R: Rng>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding left `acc` slightly below 1; take the last class with mass.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

fn check_distribution(probs: &[f64], row: usize) -> Result<()> {
    let sum: f64 = probs.iter().sum();
    if probs.iter().any(|&p| !(p >= 0.0)) || (sum - 1.0).abs() > STOCHASTIC_TOLERANCE {
        return Err(Error::NonStochastic { row, sum });
    }
    Ok(())
}

/// Label sequences from a first-order Markov chain.
pub fn gen_markov_labels(
    transition: &[Vec<f64>],
    initial: &[f64],
    lengths: &[usize],
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    let c = transition.len();
    if c == 0 || initial.len() != c {
        return Err(Error::DimensionMismatch { expected: c, found: initial.len() });
    }
    for (i, row) in transition.iter().enumerate() {
        if row.len() != c {
            return Err(Error::DimensionMismatch { expected: c, found: row.len() });
        }
        check_distribution(row, i)?;
    }
    check_distribution(initial, c)?;
    let mut rng = stream(seed, Stream::MarkovLabels);
    Ok(lengths
        .iter()
        .map(|&len| {
            let mut seq = Vec::with_capacity(len);
            if len > 0 {
                seq.push(sample_categorical(&mut rng, initial));
            }
            while seq.len() < len {
                let prev = *seq.last().unwrap();
                seq.push(sample_categorical(&mut rng, &transition[prev]));
            }
            seq
        })
        .collect())
}

/// Feature at each position: the label's mean plus isotropic Gaussian noise.
pub fn gen_gaussian_features(
    labels: &[Vec<usize>],
    means: &[Vec<f64>],
    noise_sigma: f64,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if !(noise_sigma >= 0.0) {
        return Err(Error::InvalidArgument(format!("noise_sigma must be >= 0, got {noise_sigma}")));
    }
    let dim = means.first().map(Vec::len).ok_or(Error::DimensionMismatch { expected: 1, found: 0 })?;
    if let Some(bad) = means.iter().find(|m| m.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, found: bad.len() });
    }
    let mut rng = stream(seed, Stream::GaussianNoise);
    labels
        .iter()
        .map(|seq| {
            let mut out = Vec::with_capacity(seq.len() * dim);
            for &y in seq {
                let mean = means.get(y).ok_or(Error::IdOutOfRange { id: y, classes: means.len() })?;
                for &m in mean {
                    let z: f64 = rng.sample(StandardNormal);
                    out.push(m + noise_sigma * z);
                }
            }
            Ok(out)
        })
        .collect()
}

/// A substitution-cipher dataset and its key.
#[derive(Debug, Clone)]
pub struct CipherData {
    pub dataset: SequenceDataset,
    /// `key[class]` is the coordinate of that class's one-hot prototype.
    pub key: Vec<usize>,
}

/// Encrypts label sequences as noisy one-hot prototypes.
///
/// Class `c` is drawn as `e_{key[c]} + noise_sigma · z` in `dim` dimensions,
/// where `key` is a seeded random permutation. Requires `dim >= classes`.
pub fn gen_cipher_dataset(
    text_ids: &[Vec<usize>],
    classes: usize,
    dim: usize,
    noise_sigma: f64,
    order: usize,
    seed: u64,
) -> Result<CipherData> {
    if dim < classes {
        return Err(Error::InvalidArgument(format!(
            "cipher prototypes need dim >= classes ({dim} < {classes})"
        )));
    }
    let total: usize = text_ids.iter().map(Vec::len).sum();
    if text_ids.iter().all(|s| s.len() < order) {
        return Err(Error::InvalidArgument(format!(
            "text of {total} symbols has no window of length {order}"
        )));
    }
    let mut key: Vec<usize> = (0..classes).collect();
    key.shuffle(&mut stream(seed, Stream::CipherKey));
    let means: Vec<Vec<f64>> = key
        .iter()
        .map(|&k| {
            let mut m = vec![0.0; dim];
            m[k] = 1.0;
            m
        })
        .collect();
    let features = gen_gaussian_features(text_ids, &means, noise_sigma, seed)?;
    let dataset = SequenceDataset::new(dim, classes, features, Some(text_ids.to_vec()))?;
    Ok(CipherData { dataset, key })
}

/// Sequence indices of a train/test split: `(train, test)`, each sorted.
/// The test part receives `round(m · test_fraction)` indices, clamped to
/// `1..=m-1`.
pub fn split_indices(m: usize, test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test_fraction must be in (0,1), got {test_fraction}"
        )));
    }
    if m < 2 {
        return Err(Error::TooFewSequences(m));
    }
    let n_test = ((m as f64 * test_fraction).round() as usize).clamp(1, m - 1);
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut stream(seed, Stream::Split));
    let (test_idx, train_idx) = order.split_at(n_test);
    let mut train_idx = train_idx.to_vec();
    let mut test_idx = test_idx.to_vec();
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok((train_idx, test_idx))
}

/// Splits at sequence granularity into an unlabeled train part and a labeled
/// test part, following [`split_indices`].
pub fn split(
    dataset: &SequenceDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(SequenceDataset, SequenceDataset)> {
    let (train_idx, test_idx) = split_indices(dataset.len(), test_fraction, seed)?;
    Ok((dataset.select(&train_idx).without_labels(), dataset.select(&test_idx)))
}
