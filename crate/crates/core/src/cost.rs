//! Primal objectives built on the expected N-gram frequency of the
//! classifier's outputs.
//!
//! The main one is the coverage-seeking cross entropy against a prior model,
//! with its full-batch gradient. The swapped (mode-seeking) cross entropy and
//! the exact enumeration oracles exist for comparison and testing.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::corpus::NGramModel;
use crate::error::{Error, Result};
use crate::kernel::{average_over_windows, PosteriorCache, TupleWeights};
use crate::model::{LinearClassifier, PROB_FLOOR};
use crate::synthdata::{SequenceDataset, Window};
use crate::tuple::TupleIndexer;

/// Dense table of the expected N-gram frequency `p̄_θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct NGramFrequency {
    indexer: TupleIndexer,
    table: Vec<f64>,
    windows: usize,
}

impl NGramFrequency {
    pub fn order(&self) -> usize {
        self.indexer.order()
    }

    pub fn classes(&self) -> usize {
        self.indexer.classes()
    }

    /// Number of windows `T` averaged over.
    pub fn windows(&self) -> usize {
        self.windows
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn indexer(&self) -> &TupleIndexer {
        &self.indexer
    }

    pub fn get(&self, ids: &[usize]) -> f64 {
        self.table[self.indexer.index(ids)]
    }

    pub fn to_csv(&self) -> String {
        let n = self.order();
        let mut out = String::new();
        let header: Vec<String> = (1..=n).map(|k| format!("i_{k}")).collect();
        let _ = writeln!(out, "{},value", header.join(","));
        let mut ids = vec![0; n];
        for (i, v) in self.table.iter().enumerate() {
            self.indexer.decode_into(i, &mut ids);
            let cols: Vec<String> = ids.iter().map(ToString::to_string).collect();
            let _ = writeln!(out, "{},{v:e}", cols.join(","));
        }
        out
    }
}

fn check_shapes(model: &LinearClassifier, dataset: &SequenceDataset, lm: Option<&NGramModel>) -> Result<()> {
    if dataset.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), found: dataset.dim() });
    }
    if let Some(lm) = lm {
        if lm.classes() != model.classes() {
            return Err(Error::DimensionMismatch { expected: model.classes(), found: lm.classes() });
        }
    }
    Ok(())
}

/// `p̄_θ(i_1..i_N) = (1/T) Σ_windows Π_k p(x_{t-k})[i_{N-k}]` over all `C^N` tuples.
pub fn expected_ngram_freq(
    model: &LinearClassifier,
    dataset: &SequenceDataset,
    order: usize,
) -> Result<NGramFrequency> {
    check_shapes(model, dataset, None)?;
    let indexer = TupleIndexer::new(model.classes(), order)?;
    if !indexer.is_dense() {
        return Err(Error::TableTooLarge { size: indexer.size() as f64 });
    }
    let windows = dataset.windows(order);
    if windows.is_empty() {
        return Err(Error::NoWindows { order });
    }
    let cache = PosteriorCache::new(model, dataset);
    let c = model.classes();
    let mut table = vec![0.0; indexer.size()];
    let mut outer = vec![0.0; indexer.size()];
    let mut next = vec![0.0; indexer.size()];
    let mut ps = Vec::with_capacity(order);
    for &w in &windows {
        cache.window(w, order, &mut ps);
        // Kronecker product of the window's posteriors, oldest position most significant.
        outer[..c].copy_from_slice(ps[0]);
        let mut len = c;
        for p in &ps[1..] {
            for (a, &pa) in outer[..len].iter().enumerate() {
                for (b, &pb) in p.iter().enumerate() {
                    next[a * c + b] = pa * pb;
                }
            }
            len *= c;
            outer[..len].copy_from_slice(&next[..len]);
        }
        for (t, o) in table.iter_mut().zip(&outer) {
            *t += o;
        }
    }
    let inv = 1.0 / windows.len() as f64;
    table.iter_mut().for_each(|v| *v *= inv);
    Ok(NGramFrequency { indexer, table, windows: windows.len() })
}

/// `p̄_θ` restricted to the prior's support, aligned with `lm.support()`.
pub fn support_frequency(
    model: &LinearClassifier,
    dataset: &SequenceDataset,
    lm: &NGramModel,
) -> Result<Vec<f64>> {
    check_shapes(model, dataset, Some(lm))?;
    let order = lm.order();
    let windows = dataset.windows(order);
    if windows.is_empty() {
        return Err(Error::NoWindows { order });
    }
    let cache = PosteriorCache::new(model, dataset);
    let ones = vec![0.0; lm.support_len()];
    let tuples = TupleWeights { order, ids: lm.support_ids(), weights: &ones };
    let mut freq = vec![0.0; lm.support_len()];
    average_over_windows(model, dataset, &cache, &windows, tuples, None, Some(&mut freq));
    Ok(freq)
}

/// Cross entropy of the prior against `p̄_θ`:
/// `J(θ) = -Σ p_LM(s) ln p̄_θ(s)`, zero-prior tuples contributing nothing.
pub fn empirical_odm_cost(
    model: &LinearClassifier,
    dataset: &SequenceDataset,
    lm: &NGramModel,
) -> Result<f64> {
    let freq = support_frequency(model, dataset, lm)?;
    Ok(cross_entropy(lm.support_probs(), &freq))
}

pub(crate) fn cross_entropy(prior: &[f64], freq: &[f64]) -> f64 {
    -prior
        .iter()
        .zip(freq)
        .map(|(&p, &q)| p * q.max(PROB_FLOOR).ln())
        .sum::<f64>()
}

/// Full-batch `∇_W J`: for each supported tuple, the window-average of the
/// product gradient divided by the window-average of the product, weighted by
/// `-p_LM`. Returned row-major `C x d`.
pub fn odm_full_gradient(
    model: &LinearClassifier,
    dataset: &SequenceDataset,
    lm: &NGramModel,
) -> Result<Vec<f64>> {
    let freq = support_frequency(model, dataset, lm)?;
    let ratios: Vec<f64> = lm
        .support_probs()
        .iter()
        .zip(&freq)
        .map(|(&p, &q)| -p / q.max(PROB_FLOOR))
        .collect();
    let order = lm.order();
    let windows = dataset.windows(order);
    let cache = PosteriorCache::new(model, dataset);
    let tuples = TupleWeights { order, ids: lm.support_ids(), weights: &ratios };
    let mut grad = vec![0.0; model.weights().len()];
    average_over_windows(model, dataset, &cache, &windows, tuples, Some(&mut grad), None);
    Ok(grad)
}

fn check_batch(dataset: &SequenceDataset, batch: &[Window], order: usize) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("minibatch must hold at least one window".into()));
    }
    for w in batch {
        let n = w.seq as usize;
        if n >= dataset.len() || w.start as usize + order > dataset.seq_len(n) {
            return Err(Error::InvalidArgument(format!("window {w:?} is outside the dataset")));
        }
    }
    Ok(())
}

/// Minibatch gradient estimate of `J` that samples both the numerator and
/// the denominator: `-Σ p_LM ∇p̄_B / p̄_B` with `p̄_B` averaged over `batch`.
/// Its expectation differs from `∇J` unless the batch is the full data.
pub fn biased_minibatch_gradient(
    model: &LinearClassifier,
    dataset: &SequenceDataset,
    lm: &NGramModel,
    batch: &[Window],
) -> Result<Vec<f64>> {
    check_shapes(model, dataset, Some(lm))?;
    check_batch(dataset, batch, lm.order())?;
    let freq = frequency_over(model, dataset, lm, batch);
    sampled_numerator_gradient(model, dataset, lm, batch, &freq)
}

/// Minibatch gradient estimate with the numerator averaged over `batch` and
/// the denominator fixed to the full-data `p̄_θ` (aligned with the support).
/// Over uniformly drawn windows its expectation is exactly `∇J`.
pub fn half_sampled_gradient(
    model: &LinearClassifier,
    dataset: &SequenceDataset,
    lm: &NGramModel,
    batch: &[Window],
    full_freq: &[f64],
) -> Result<Vec<f64>> {
    check_shapes(model, dataset, Some(lm))?;
    check_batch(dataset, batch, lm.order())?;
    if full_freq.len() != lm.support_len() {
        return Err(Error::DimensionMismatch { expected: lm.support_len(), found: full_freq.len() });
    }
    sampled_numerator_gradient(model, dataset, lm, batch, full_freq)
}

fn frequency_over(model: &LinearClassifier, dataset: &SequenceDataset, lm: &NGramModel, windows: &[Window]) -> Vec<f64> {
    let cache = PosteriorCache::new(model, dataset);
    let zeros = vec![0.0; lm.support_len()];
    let tuples = TupleWeights { order: lm.order(), ids: lm.support_ids(), weights: &zeros };
    let mut freq = vec![0.0; lm.support_len()];
    average_over_windows(model, dataset, &cache, windows, tuples, None, Some(&mut freq));
    freq
}

fn sampled_numerator_gradient(
    model: &LinearClassifier,
    dataset: &SequenceDataset,
    lm: &NGramModel,
    windows: &[Window],
    denominator: &[f64],
) -> Result<Vec<f64>> {
    let ratios: Vec<f64> = lm
        .support_probs()
        .iter()
        .zip(denominator)
        .map(|(&p, &q)| -p / q.max(PROB_FLOOR))
        .collect();
    let cache = PosteriorCache::new(model, dataset);
    let tuples = TupleWeights { order: lm.order(), ids: lm.support_ids(), weights: &ratios };
    let mut grad = vec![0.0; model.weights().len()];
    average_over_windows(model, dataset, &cache, windows, tuples, Some(&mut grad), None);
    Ok(grad)
}

/// Result of [`mode_seeking_cost`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSeeking {
    pub cost: f64,
    /// `p̄_θ` mass on tuples whose context has zero prior mass; those terms
    /// have no defined conditional and are left out of `cost`.
    pub skipped_mass: f64,
}

/// Per-tuple weights `-ln p_LM(i_N | i_1..i_{N-1})` over every tuple whose
/// context has positive prior mass, ids flattened.
pub(crate) fn conditional_log_weights(lm: &NGramModel) -> (Vec<usize>, Vec<f64>) {
    let c = lm.classes();
    let n = lm.order();
    let contexts = lm.indexer().size() / c;
    let mut ids = Vec::new();
    let mut weights = Vec::new();
    let mut tuple = vec![0; n];
    for ctx in 0..contexts {
        let base = ctx * c;
        let marginal: f64 = (0..c).map(|j| lm.prob_index(base + j)).sum();
        if marginal <= 0.0 {
            continue;
        }
        for j in 0..c {
            lm.indexer().decode_into(base + j, &mut tuple);
            ids.extend_from_slice(&tuple);
            weights.push(-(lm.prob_index(base + j) / marginal).max(PROB_FLOOR).ln());
        }
    }
    (ids, weights)
}

/// `-Σ p̄_θ(s) ln p_LM(i_N | i_1..i_{N-1})`, the expected per-window negative
/// log-likelihood of sampled outputs under the prior.
pub fn mode_seeking_cost(
    model: &LinearClassifier,
    dataset: &SequenceDataset,
    lm: &NGramModel,
) -> Result<ModeSeeking> {
    check_shapes(model, dataset, Some(lm))?;
    let freq = expected_ngram_freq(model, dataset, lm.order())?;
    let c = lm.classes();
    let mut cost = 0.0;
    let mut skipped = 0.0;
    for (ctx, block) in freq.table.chunks_exact(c).enumerate() {
        let base = ctx * c;
        let marginal: f64 = (0..c).map(|j| lm.prob_index(base + j)).sum();
        if marginal <= 0.0 {
            skipped += block.iter().sum::<f64>();
            continue;
        }
        for (j, &q) in block.iter().enumerate() {
            let cond = lm.prob_index(base + j) / marginal;
            cost -= q * cond.max(PROB_FLOOR).ln();
        }
    }
    Ok(ModeSeeking { cost, skipped_mass: skipped })
}

/// Largest number of output sequences [`nll_bruteforce_oracle`] will enumerate.
pub const ENUMERATION_BOUND: f64 = 1e6;

/// Exact `E[-Σ_n Σ_{t ≥ N} ln p_LM(y_t | y_{t-N+1..t-1})]` with outputs drawn
/// from the classifier's per-position posteriors, by enumerating every
/// output sequence. Positions with an unseen context are skipped, as in
/// [`mode_seeking_cost`].
pub fn nll_bruteforce_oracle(
    model: &LinearClassifier,
    dataset: &SequenceDataset,
    lm: &NGramModel,
) -> Result<f64> {
    check_shapes(model, dataset, Some(lm))?;
    let c = model.classes();
    let size: f64 = (0..dataset.len())
        .map(|n| (c as f64).powi(dataset.seq_len(n) as i32))
        .sum();
    if size > ENUMERATION_BOUND {
        return Err(Error::EnumerationBound { size });
    }
    let n_ord = lm.order();
    let mut total = 0.0;
    for n in 0..dataset.len() {
        let t_len = dataset.seq_len(n);
        let post = model.sequence_posteriors(dataset.sequence(n));
        let mut ys = vec![0usize; t_len];
        let count = c.pow(t_len as u32);
        for code in 0..count {
            let mut rem = code;
            for y in ys.iter_mut().rev() {
                *y = rem % c;
                rem /= c;
            }
            let prob: f64 = ys.iter().enumerate().map(|(t, &y)| post[t * c + y]).product();
            if prob == 0.0 {
                continue;
            }
            let mut nll = 0.0;
            for t in (n_ord - 1)..t_len {
                let window = &ys[t + 1 - n_ord..=t];
                let marginal = lm.context_marginal(&window[..n_ord - 1]);
                if marginal <= 0.0 {
                    continue;
                }
                let cond = lm.prob(window) / marginal;
                nll -= cond.max(PROB_FLOOR).ln();
            }
            total += prob * nll;
        }
    }
    Ok(total)
}

/// Outcome of [`empirical_marginal_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginalReport {
    pub distinct_input_tuples: usize,
    pub max_abs_diff: f64,
    pub holds: bool,
}

pub const MARGINAL_TOLERANCE: f64 = 1e-10;

/// Checks that `p̄_θ` equals the marginal output N-gram probability under the
/// empirical distribution of input N-tuples, for inputs from a finite set.
pub fn empirical_marginal_check(
    model: &LinearClassifier,
    dataset: &SequenceDataset,
    order: usize,
) -> Result<MarginalReport> {
    let direct = expected_ngram_freq(model, dataset, order)?;
    let windows = dataset.windows(order);
    // Group windows by the exact bit pattern of their inputs.
    let mut counts: HashMap<Vec<u64>, (usize, Window)> = HashMap::new();
    for &w in &windows {
        let key: Vec<u64> = (0..order)
            .flat_map(|k| dataset.x(w.seq as usize, w.start as usize + k).iter().map(|v| v.to_bits()))
            .collect();
        counts.entry(key).or_insert((0, w)).0 += 1;
    }
    let mut groups: Vec<(usize, Window)> = counts.into_values().collect();
    groups.sort_by_key(|&(_, w)| (w.seq, w.start));
    let total = windows.len() as f64;
    let c = model.classes();
    let indexer = direct.indexer;
    let mut marginal = vec![0.0; indexer.size()];
    let mut ids = vec![0; order];
    let mut posts = vec![vec![0.0; c]; order];
    for &(count, w) in &groups {
        for (k, p) in posts.iter_mut().enumerate() {
            model.posterior_into(dataset.x(w.seq as usize, w.start as usize + k), p);
        }
        let weight = count as f64 / total;
        for (i, m) in marginal.iter_mut().enumerate() {
            indexer.decode_into(i, &mut ids);
            let prod: f64 = ids.iter().zip(&posts).map(|(&id, p)| p[id]).product();
            *m += prod * weight;
        }
    }
    let max_abs_diff = marginal
        .iter()
        .zip(&direct.table)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(MarginalReport {
        distinct_input_tuples: groups.len(),
        max_abs_diff,
        holds: max_abs_diff <= MARGINAL_TOLERANCE,
    })
}

/// `KL(p_LM ‖ p̄_θ)` over the prior's support.
pub fn kl_to_prior(model: &LinearClassifier, dataset: &SequenceDataset, lm: &NGramModel) -> Result<f64> {
    Ok(empirical_odm_cost(model, dataset, lm)? - lm.entropy())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{estimate_ngram, Vocabulary};
    use crate::rng::{stream, Stream};
    use crate::testutil::{random_instance, Instance};
    use rand::Rng;

    #[test]
    fn estimator_expectations_over_all_single_window_batches() {
        let Instance { model, data, lm } = random_instance(3, 4, 2, &[5, 4], 11);
        let windows = data.windows(2);
        let full = odm_full_gradient(&model, &data, &lm).unwrap();
        let freq = support_frequency(&model, &data, &lm).unwrap();
        let mut half = vec![0.0; full.len()];
        let mut biased = vec![0.0; full.len()];
        for &w in &windows {
            let h = half_sampled_gradient(&model, &data, &lm, &[w], &freq).unwrap();
            let b = biased_minibatch_gradient(&model, &data, &lm, &[w]).unwrap();
            for k in 0..full.len() {
                half[k] += h[k] / windows.len() as f64;
                biased[k] += b[k] / windows.len() as f64;
            }
        }
        let dist = |a: &[f64]| a.iter().zip(&full).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        assert!(dist(&half) < 1e-12);
        assert!(dist(&biased) > 1e-3);
        let whole = biased_minibatch_gradient(&model, &data, &lm, &windows).unwrap();
        assert!(dist(&whole) < 1e-12);
        assert!(biased_minibatch_gradient(&model, &data, &lm, &[]).is_err());
    }

    #[test]
    fn uniform_classifier_frequency_is_flat() {
        let Instance { data, .. } = random_instance(3, 4, 2, &[5, 7], 1);
        let m = LinearClassifier::constant(3, 4, 10.0, 0.25);
        let f = expected_ngram_freq(&m, &data, 2).unwrap();
        assert_eq!(f.windows(), 10);
        for &v in f.table() {
            assert!((v - 1.0 / 9.0).abs() < 1e-15);
        }
        let f3 = expected_ngram_freq(&m, &data, 3).unwrap();
        assert!((f3.table().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn no_windows_is_an_error() {
        let Instance { data, .. } = random_instance(3, 4, 2, &[2, 1], 1);
        let m = LinearClassifier::constant(3, 4, 10.0, 0.0);
        assert!(matches!(expected_ngram_freq(&m, &data, 3), Err(Error::NoWindows { order: 3 })));
    }

    #[test]
    fn support_frequency_matches_dense_table() {
        let Instance { model, data, lm } = random_instance(4, 3, 2, &[9, 6, 11], 2);
        let dense = expected_ngram_freq(&model, &data, 2).unwrap();
        let sparse = support_frequency(&model, &data, &lm).unwrap();
        for (s, &v) in sparse.iter().enumerate() {
            assert!((v - dense.get(lm.support_tuple(s))).abs() < 1e-15);
        }
    }

    #[test]
    fn uniform_classifier_cost_is_n_ln_c() {
        for order in 1..=3 {
            let Instance { data, lm, .. } = random_instance(3, 2, order, &[12, 9], 3);
            let m = LinearClassifier::constant(3, 2, 10.0, 0.5);
            let j = empirical_odm_cost(&m, &data, &lm).unwrap();
            assert!((j - order as f64 * 3f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn cost_two_ways_and_gibbs() {
        for seed in 0..10 {
            let Instance { model, data, lm } = random_instance(3, 4, 2, &[8, 10], 10 + seed);
            let j = empirical_odm_cost(&model, &data, &lm).unwrap();
            let freq = expected_ngram_freq(&model, &data, 2).unwrap();
            let mut kl = 0.0;
            for (s, &p) in lm.support_probs().iter().enumerate() {
                kl += p * (p / freq.get(lm.support_tuple(s))).ln();
            }
            assert!((j - (kl + lm.entropy())).abs() < 1e-10);
            assert!(kl >= 0.0);
            assert!(j >= lm.entropy());
        }
    }

    #[test]
    fn cost_equals_entropy_when_frequency_matches_prior() {
        // A deterministic classifier on one-hot inputs reproduces the label
        // window frequencies exactly; use the labels' own LM as prior.
        let c = 3;
        let labels = vec![vec![0, 1, 2, 2, 1, 0, 0, 1], vec![2, 0, 1, 1]];
        let feats: Vec<Vec<f64>> = labels
            .iter()
            .map(|s| s.iter().flat_map(|&y| (0..c).map(move |k| f64::from(u8::from(k == y)))).collect())
            .collect();
        let data = SequenceDataset::new(c, c, feats, None).unwrap();
        let lm = estimate_ngram(&labels, &Vocabulary::numbered(c).unwrap(), 2, 0.0).unwrap();
        let mut w = vec![0.0; c * c];
        for i in 0..c {
            w[i * c + i] = 1.0;
        }
        let m = LinearClassifier::from_weights(c, c, 60.0, w).unwrap();
        let j = empirical_odm_cost(&m, &data, &lm).unwrap();
        assert!((j - lm.entropy()).abs() < 1e-8, "{j} vs {}", lm.entropy());
    }

    #[test]
    fn full_gradient_vanishes_at_uniform_balanced_match() {
        let c = 3;
        // Inputs cycle through every class pair equally often.
        let labels: Vec<usize> = (0..=c * c).map(|t| (t + t / c) % c).collect();
        let feats: Vec<f64> = labels.iter().flat_map(|&y| (0..c).map(move |k| f64::from(u8::from(k == y)))).collect();
        let data = SequenceDataset::new(c, c, vec![feats], None).unwrap();
        let vocab = Vocabulary::numbered(c).unwrap();
        let lm = crate::corpus::NGramModel::from_entries(vocab, 2, (0..9).map(|i| (i, 1.0 / 9.0)).collect(), 1e-12).unwrap();
        let m = LinearClassifier::constant(c, c, 10.0, 1.0 / c as f64);
        let g = odm_full_gradient(&m, &data, &lm).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-12), "{g:?}");
    }

    #[test]
    fn full_gradient_matches_central_differences() {
        for seed in 0..5 {
            let Instance { model, data, lm } = random_instance(3, 4, 2, &[7, 9, 5], 40 + seed);
            let g = odm_full_gradient(&model, &data, &lm).unwrap();
            let num = crate::testutil::central_difference(&model, |m| empirical_odm_cost(m, &data, &lm).unwrap());
            assert!(crate::testutil::rel_err(&g, &num) < 1e-4);
        }
    }

    #[test]
    fn gradient_ignores_sequence_order() {
        let Instance { model, data, lm } = random_instance(3, 4, 2, &[7, 9, 5], 50);
        let g = odm_full_gradient(&model, &data, &lm).unwrap();
        let shuffled = data.select(&[2, 0, 1]);
        let h = odm_full_gradient(&model, &shuffled, &lm).unwrap();
        for (a, b) in g.iter().zip(&h) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn mode_seeking_with_uniform_conditionals_is_ln_c() {
        let Instance { model, data, .. } = random_instance(3, 2, 2, &[6, 6], 5);
        let vocab = Vocabulary::numbered(3).unwrap();
        let lm = crate::corpus::NGramModel::from_entries(vocab, 2, (0..9).map(|i| (i, 1.0 / 9.0)).collect(), 1e-12).unwrap();
        let ms = mode_seeking_cost(&model, &data, &lm).unwrap();
        assert!((ms.cost - 3f64.ln()).abs() < 1e-12);
        assert_eq!(ms.skipped_mass, 0.0);
    }

    #[test]
    fn mode_seeking_uniform_classifier_two_symbol_lm() {
        // p(a,a)=0.1 p(a,b)=0.3 p(b,a)=0.4 p(b,b)=0.2
        let vocab = Vocabulary::numbered(2).unwrap();
        let lm = crate::corpus::NGramModel::from_entries(
            vocab,
            2,
            vec![(0, 0.1), (1, 0.3), (2, 0.4), (3, 0.2)],
            1e-12,
        )
        .unwrap();
        let Instance { data, .. } = random_instance(2, 3, 2, &[5], 6);
        let m = LinearClassifier::constant(2, 3, 10.0, 0.0);
        let expect = 0.25 * -((0.25f64).ln() + 0.75f64.ln() + (4.0f64 / 6.0).ln() + (2.0f64 / 6.0).ln());
        let ms = mode_seeking_cost(&m, &data, &lm).unwrap();
        assert!((ms.cost - expect).abs() < 1e-14);
    }

    #[test]
    fn mode_seeking_reports_unseen_context_mass() {
        let vocab = Vocabulary::numbered(3).unwrap();
        let lm = estimate_ngram(&[vec![0, 1, 0, 1]], &vocab, 2, 0.0).unwrap();
        let m = LinearClassifier::constant(3, 2, 10.0, 0.0);
        let Instance { data, .. } = random_instance(3, 2, 2, &[4], 7);
        let ms = mode_seeking_cost(&m, &data, &lm).unwrap();
        // Context 2 is unseen: 3 of the 9 uniform tuples.
        assert!((ms.skipped_mass - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn oracle_with_one_hot_posteriors() {
        let c = 2;
        let labels = [0usize, 1, 1, 0];
        let feats: Vec<f64> = labels.iter().flat_map(|&y| (0..c).map(move |k| f64::from(u8::from(k == y)))).collect();
        let data = SequenceDataset::new(c, c, vec![feats], None).unwrap();
        let mut w = vec![0.0; 4];
        w[0] = 1.0;
        w[3] = 1.0;
        let m = LinearClassifier::from_weights(2, 2, 800.0, w).unwrap();
        let vocab = Vocabulary::numbered(2).unwrap();
        let lm = crate::corpus::NGramModel::from_entries(vocab, 2, vec![(0, 0.1), (1, 0.3), (2, 0.4), (3, 0.2)], 1e-12).unwrap();
        let got = nll_bruteforce_oracle(&m, &data, &lm).unwrap();
        let expect = -(0.75f64.ln() + (2.0f64 / 6.0).ln() + (4.0f64 / 6.0).ln());
        assert!((got - expect).abs() < 1e-12);
    }

    #[test]
    fn oracle_with_uniform_lm_counts_windows() {
        let Instance { model, data, .. } = random_instance(2, 3, 2, &[4, 5], 8);
        let vocab = Vocabulary::numbered(2).unwrap();
        let lm = crate::corpus::NGramModel::from_entries(vocab, 2, (0..4).map(|i| (i, 0.25)).collect(), 1e-12).unwrap();
        let got = nll_bruteforce_oracle(&model, &data, &lm).unwrap();
        assert!((got - 7.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn oracle_matches_mode_seeking_on_tiny_instances() {
        for seed in 0..10 {
            let Instance { model, data, lm } = random_instance(2, 3, 2, &[4], 60 + seed);
            let t = data.window_count(2) as f64;
            let oracle = nll_bruteforce_oracle(&model, &data, &lm).unwrap();
            let ms = mode_seeking_cost(&model, &data, &lm).unwrap();
            assert_eq!(ms.skipped_mass, 0.0);
            assert!((oracle - t * ms.cost).abs() < 1e-9);
        }
    }

    #[test]
    fn oracle_enforces_bound() {
        let Instance { model, data, lm } = random_instance(3, 2, 2, &[14], 9);
        assert!(matches!(nll_bruteforce_oracle(&model, &data, &lm), Err(Error::EnumerationBound { .. })));
    }

    #[test]
    fn discrete_inputs_marginal_identity() {
        let mut rng = stream(12, Stream::Scratch);
        let values = [vec![0.3, -1.2, 0.8], vec![-0.5, 0.4, 1.1]];
        let seq: Vec<f64> = (0..11).flat_map(|_| values[rng.random_range(0..2)].clone()).collect();
        let data = SequenceDataset::new(3, 3, vec![seq], None).unwrap();
        let Instance { model, .. } = random_instance(3, 3, 2, &[2], 13);
        let rep = empirical_marginal_check(&model, &data, 2).unwrap();
        assert!(rep.holds, "{rep:?}");
        assert!(rep.distinct_input_tuples <= 4);

        let reversed = SequenceDataset::new(3, 3, vec![data.sequence(0).chunks(3).rev().flatten().copied().collect()], None).unwrap();
        assert!(empirical_marginal_check(&model, &reversed, 2).unwrap().holds);
    }

    #[test]
    fn single_repeated_input() {
        let x = [0.2, 0.9];
        let data = SequenceDataset::new(2, 3, vec![x.repeat(6)], None).unwrap();
        let Instance { model, .. } = random_instance(3, 2, 2, &[2], 14);
        let p = model.posterior(&x).unwrap();
        let f = expected_ngram_freq(&model, &data, 2).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((f.get(&[i, j]) - p[i] * p[j]).abs() < 1e-15);
            }
        }
        let rep = empirical_marginal_check(&model, &data, 2).unwrap();
        assert_eq!(rep.distinct_input_tuples, 1);
        assert!(rep.holds);
    }

    #[test]
    fn csv_export() {
        let Instance { model, data, .. } = random_instance(2, 2, 2, &[3], 15);
        let csv = expected_ngram_freq(&model, &data, 2).unwrap().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "i_1,i_2,value");
        assert_eq!(lines.len(), 5);
        assert!(lines[2].starts_with("0,1,"));
    }
}
