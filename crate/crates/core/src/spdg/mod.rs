//! Saddle-point reformulation of the output-matching cost and the trainers
//! that optimize it.
//!
//! Each `-ln u` term of the cost is replaced by its conjugate form
//! `max_{ν<0} (uν + 1 + ln(-ν))`. With one dual ν per supported prior tuple
//! the objective becomes
//!
//! ```text
//! L(θ, V) = (1/T) Σ_windows L_t(θ, V) + Σ_s p_LM(s) (1 + ln(-ν_s))
//! L_t(θ, V) = Σ_s p_LM(s) ν_s Π_k p_θ(y_{t-k} = i_{N-k} | x_{t-k})
//! ```
//!
//! which is linear in the window average, so minibatch gradients are
//! unbiased. `L` is concave in `V`. The conjugate's additive constant is
//! kept in the barrier term, so `max_V L(θ, V) = J(θ)`
//! exactly rather than `J(θ) - 1`.

mod adam;
mod train;

use rand::Rng;

pub use adam::{Adam, AdamConfig};
pub use train::{
    majority_baseline, mode_seeking_train, sgd_biased_train, spdg_train, supervised_train, DualInit, HookMetrics, PrimalOptimizer,
    Majority, MetricLog, MetricRow, Sampling, SpdgTrainer, SupervisedConfig, SupervisedOutcome,
    TrainConfig, TrainOutcome,
};

use crate::corpus::NGramModel;
use crate::error::{Error, Result};
use crate::kernel::{average_over_windows, window_inputs, PosteriorCache, TupleWeights, WindowKernel};
use crate::model::LinearClassifier;
use crate::rng::{stream, Stream};
use crate::synthdata::{SequenceDataset, Window};

/// `max_{ν<0} (uν + 1 + ln(-ν))` and its maximizer: `(-ln u, -1/u)`.
pub fn conjugate_neg_log(u: f64) -> Result<(f64, f64)> {
    if !(u > 0.0) || !u.is_finite() {
        return Err(Error::InvalidArgument(format!("conjugate needs u > 0, got {u}")));
    }
    let nu = -1.0 / u;
    // u·ν = -1 exactly in real arithmetic; use it directly.
    Ok((-1.0 + 1.0 + (-nu).ln(), nu))
}

/// One strictly negative dual per supported prior tuple, aligned with
/// `lm.support()`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualVariables {
    order: usize,
    values: Vec<f64>,
}

impl DualVariables {
    pub fn new(lm: &NGramModel, values: Vec<f64>) -> Result<Self> {
        if values.len() != lm.support_len() {
            return Err(Error::DimensionMismatch { expected: lm.support_len(), found: values.len() });
        }
        let duals = Self { order: lm.order(), values };
        duals.check_negative()?;
        Ok(duals)
    }

    pub fn constant(lm: &NGramModel, value: f64) -> Result<Self> {
        Self::new(lm, vec![value; lm.support_len()])
    }

    /// Independent draws, uniform on `(lo, hi)`, `hi <= 0`.
    pub fn uniform(lm: &NGramModel, lo: f64, hi: f64, seed: u64) -> Result<Self> {
        if !(lo < hi && hi <= 0.0) {
            return Err(Error::InvalidArgument(format!("dual init range ({lo}, {hi}) must be negative")));
        }
        let mut rng = stream(seed, Stream::DualInit);
        let values = (0..lm.support_len())
            .map(|_| {
                // Open interval: resample the measure-zero endpoint.
                loop {
                    let v = rng.random_range(lo..hi);
                    if v < 0.0 && v > lo {
                        return v;
                    }
                }
            })
            .collect();
        Self::new(lm, values)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn check_negative(&self) -> Result<()> {
        match self.values.iter().position(|&v| !(v < 0.0)) {
            Some(index) => Err(Error::NonNegativeDual { index, value: self.values[index] }),
            None => Ok(()),
        }
    }

    /// Projects every entry to at most `ceiling`.
    pub fn clamp(&mut self, ceiling: f64) {
        for v in &mut self.values {
            *v = v.min(ceiling);
        }
    }
}

fn check(model: &LinearClassifier, duals: &DualVariables, dataset: &SequenceDataset, lm: &NGramModel) -> Result<()> {
    if duals.order != lm.order() {
        return Err(Error::OrderMismatch { expected: lm.order(), found: duals.order });
    }
    if duals.values.len() != lm.support_len() {
        return Err(Error::DimensionMismatch { expected: lm.support_len(), found: duals.values.len() });
    }
    duals.check_negative()?;
    if model.classes() != lm.classes() {
        return Err(Error::DimensionMismatch { expected: lm.classes(), found: model.classes() });
    }
    if model.dim() != dataset.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), found: dataset.dim() });
    }
    Ok(())
}

fn scaled_duals(duals: &DualVariables, lm: &NGramModel) -> Vec<f64> {
    lm.support_probs().iter().zip(&duals.values).map(|(p, v)| p * v).collect()
}

/// `Σ_s p_LM(s) ln(-ν_s)`, plus the conjugate's constant `Σ_s p_LM(s)`.
fn barrier(duals: &DualVariables, lm: &NGramModel) -> f64 {
    lm.support_probs()
        .iter()
        .zip(&duals.values)
        .map(|(p, v)| p * (1.0 + (-v).ln()))
        .sum()
}

/// The saddle objective `L(θ, V)`.
pub fn lagrangian(
    model: &LinearClassifier,
    duals: &DualVariables,
    dataset: &SequenceDataset,
    lm: &NGramModel,
) -> Result<f64> {
    check(model, duals, dataset, lm)?;
    let windows = dataset.windows(lm.order());
    if windows.is_empty() {
        return Err(Error::NoWindows { order: lm.order() });
    }
    let cache = PosteriorCache::new(model, dataset);
    let weights = scaled_duals(duals, lm);
    let tuples = TupleWeights { order: lm.order(), ids: lm.support_ids(), weights: &weights };
    let avg = average_over_windows(model, dataset, &cache, &windows, tuples, None, None);
    Ok(avg + barrier(duals, lm))
}

/// `L_t(θ, V)` for one window of `N` inputs, oldest first.
pub fn component_fn(
    model: &LinearClassifier,
    duals: &DualVariables,
    window: &[&[f64]],
    lm: &NGramModel,
) -> Result<f64> {
    if window.len() != lm.order() {
        return Err(Error::DimensionMismatch { expected: lm.order(), found: window.len() });
    }
    if duals.order != lm.order() {
        return Err(Error::OrderMismatch { expected: lm.order(), found: duals.order });
    }
    let posts = window.iter().map(|x| model.posterior(x)).collect::<Result<Vec<_>>>()?;
    let ps: Vec<&[f64]> = posts.iter().map(Vec::as_slice).collect();
    let weights = scaled_duals(duals, lm);
    let tuples = TupleWeights { order: lm.order(), ids: lm.support_ids(), weights: &weights };
    let mut kernel = WindowKernel::new(lm.order(), model.classes());
    Ok(kernel.eval(model, &[], &ps, tuples, 1.0, None, None))
}

/// Minibatch gradients of the saddle objective.
#[derive(Debug, Clone, PartialEq)]
pub struct SaddleGrads {
    /// `(1/B) Σ ∂L_t/∂θ`, row-major `C x d`.
    pub theta: Vec<f64>,
    /// `(1/B) Σ ∂L_t/∂V + ∂(barrier)/∂V`, aligned with the support.
    pub duals: Vec<f64>,
    /// `(1/B) Σ L_t + barrier`, the minibatch estimate of `L`.
    pub value: f64,
}

/// Reusable buffers for [`stochastic_grads`] inside a training loop.
pub(crate) struct SaddleWorkspace {
    kernel: WindowKernel,
    posts: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl SaddleWorkspace {
    pub fn new(order: usize, classes: usize) -> Self {
        Self {
            kernel: WindowKernel::new(order, classes),
            posts: vec![vec![0.0; classes]; order],
            weights: Vec::new(),
        }
    }

    pub fn grads_into(
        &mut self,
        model: &LinearClassifier,
        duals: &DualVariables,
        dataset: &SequenceDataset,
        batch: &[Window],
        lm: &NGramModel,
        out: &mut SaddleGrads,
    ) {
        let order = lm.order();
        out.theta.iter_mut().for_each(|v| *v = 0.0);
        out.duals.clear();
        out.duals.resize(lm.support_len(), 0.0);
        self.weights.clear();
        self.weights.extend(lm.support_probs().iter().zip(&duals.values).map(|(p, v)| p * v));
        let tuples = TupleWeights { order, ids: lm.support_ids(), weights: &self.weights };
        let scale = 1.0 / batch.len() as f64;
        let mut xs = Vec::with_capacity(order);
        let mut value = 0.0;
        for &w in batch {
            window_inputs(dataset, w, order, &mut xs);
            for (x, p) in xs.iter().zip(self.posts.iter_mut()) {
                model.posterior_into(x, p);
            }
            let ps: Vec<&[f64]> = self.posts.iter().map(Vec::as_slice).collect();
            value += self.kernel.eval(model, &xs, &ps, tuples, scale, Some(&mut out.theta), Some(&mut out.duals));
        }
        // out.duals now holds the batch-averaged products; scale by p_LM and add the barrier.
        for ((g, &p), &v) in out.duals.iter_mut().zip(lm.support_probs()).zip(&duals.values) {
            *g = p * *g + p / v;
        }
        out.value = value * scale + barrier(duals, lm);
    }
}

/// Gradients of the saddle objective averaged over `batch`. Over uniformly
/// drawn windows their expectation is the full gradient of `L`.
pub fn stochastic_grads(
    model: &LinearClassifier,
    duals: &DualVariables,
    dataset: &SequenceDataset,
    batch: &[Window],
    lm: &NGramModel,
) -> Result<SaddleGrads> {
    check(model, duals, dataset, lm)?;
    if batch.is_empty() {
        return Err(Error::InvalidArgument("minibatch must hold at least one window".into()));
    }
    let order = lm.order();
    for w in batch {
        let n = w.seq as usize;
        if n >= dataset.len() || w.start as usize + order > dataset.seq_len(n) {
            return Err(Error::InvalidArgument(format!("window {w:?} is outside the dataset")));
        }
    }
    let mut out = SaddleGrads { theta: vec![0.0; model.weights().len()], duals: Vec::new(), value: 0.0 };
    SaddleWorkspace::new(order, model.classes()).grads_into(model, duals, dataset, batch, lm, &mut out);
    Ok(out)
}

/// Duals maximizing `L(θ, ·)`: `ν_s = -1 / p̄_θ(s)`.
pub fn dual_closed_form(
    model: &LinearClassifier,
    dataset: &SequenceDataset,
    lm: &NGramModel,
) -> Result<DualVariables> {
    let freq = crate::cost::support_frequency(model, dataset, lm)?;
    let values = freq
        .iter()
        .map(|&q| -1.0 / q.max(crate::model::PROB_FLOOR))
        .collect();
    DualVariables::new(lm, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::empirical_odm_cost;
    use crate::testutil::{central_difference, random_instance, rel_err, Instance};

    #[test]
    fn conjugate_values() {
        assert_eq!(conjugate_neg_log(1.0).unwrap(), (0.0, -1.0));
        let (v, nu) = conjugate_neg_log(std::f64::consts::E).unwrap();
        assert!((v + 1.0).abs() < 1e-15);
        assert!((nu + 1.0 / std::f64::consts::E).abs() < 1e-15);
        assert!(conjugate_neg_log(0.0).is_err());
        assert!(conjugate_neg_log(-2.0).is_err());
    }

    #[test]
    fn conjugate_is_a_maximum() {
        for u in [1e-3, 0.4, 2.0, 55.0] {
            let (v, nu) = conjugate_neg_log(u).unwrap();
            for f in [0.5, 0.9, 1.1, 2.0] {
                let other = f * nu;
                assert!(u * other + 1.0 + (-other).ln() <= v + 1e-15);
            }
        }
    }

    #[test]
    fn uniform_closed_form_hand_value() {
        let Instance { data, lm, .. } = random_instance(3, 2, 2, &[6, 5], 1);
        let m = LinearClassifier::constant(3, 2, 10.0, 0.5);
        let duals = DualVariables::constant(&lm, -9.0).unwrap();
        // Window term -9 · 9 · (1/9) · (1/9) summed over 9 tuples = -1; barrier
        // Σ p (1 + ln 9) = 1 + 2 ln 3.
        let l = lagrangian(&m, &duals, &data, &lm).unwrap();
        assert!((l - 2.0 * 3f64.ln()).abs() < 1e-12);
        let closed = dual_closed_form(&m, &data, &lm).unwrap();
        assert!(closed.values().iter().all(|&v| (v + 9.0).abs() < 1e-12));
    }

    #[test]
    fn closed_form_duals_recover_cost_and_bound_it() {
        for seed in 0..5 {
            let Instance { model, data, lm } = random_instance(3, 3, 2, &[10, 8], 10 + seed);
            let j = empirical_odm_cost(&model, &data, &lm).unwrap();
            let star = dual_closed_form(&model, &data, &lm).unwrap();
            assert!((lagrangian(&model, &star, &data, &lm).unwrap() - j).abs() < 1e-9);
            for k in 0..20 {
                let d = DualVariables::uniform(&lm, -30.0, 0.0, seed * 100 + k).unwrap();
                assert!(lagrangian(&model, &d, &data, &lm).unwrap() <= j + 1e-12);
            }
        }
    }

    #[test]
    fn component_values() {
        let Instance { data, lm, .. } = random_instance(3, 2, 2, &[4], 2);
        let m = LinearClassifier::constant(3, 2, 10.0, 0.0);
        let duals = DualVariables::constant(&lm, -1.0).unwrap();
        let w = [data.x(0, 0), data.x(0, 1)];
        let l = component_fn(&m, &duals, &w, &lm).unwrap();
        assert!((l + 1.0 / 9.0).abs() < 1e-15);

        let Instance { model, data, lm } = random_instance(3, 2, 2, &[5, 4], 3);
        let duals = DualVariables::uniform(&lm, -4.0, 0.0, 3).unwrap();
        let windows = data.windows(2);
        let mut sum = 0.0;
        for w in &windows {
            let xs = [data.x(w.seq as usize, w.start as usize), data.x(w.seq as usize, w.start as usize + 1)];
            let v = component_fn(&model, &duals, &xs, &lm).unwrap();
            assert!(v < 0.0);
            sum += v;
        }
        let full = lagrangian(&model, &duals, &data, &lm).unwrap();
        assert!((sum / windows.len() as f64 + barrier(&duals, &lm) - full).abs() < 1e-12);
    }

    #[test]
    fn full_batch_grads_match_finite_differences() {
        for seed in 0..4 {
            let Instance { model, data, lm } = random_instance(3, 3, 2, &[6, 7], 20 + seed);
            let duals = DualVariables::uniform(&lm, -5.0, -0.5, seed).unwrap();
            let g = stochastic_grads(&model, &duals, &data, &data.windows(2), &lm).unwrap();
            let num_theta = central_difference(&model, |m| lagrangian(m, &duals, &data, &lm).unwrap());
            assert!(rel_err(&g.theta, &num_theta) < 1e-4);
            let h = 1e-5;
            let num_v: Vec<f64> = (0..duals.values().len())
                .map(|k| {
                    let mut plus = duals.clone();
                    let mut minus = duals.clone();
                    plus.values_mut()[k] += h;
                    minus.values_mut()[k] -= h;
                    (lagrangian(&model, &plus, &data, &lm).unwrap() - lagrangian(&model, &minus, &data, &lm).unwrap())
                        / (2.0 * h)
                })
                .collect();
            assert!(rel_err(&g.duals, &num_v) < 1e-4);
        }
    }

    #[test]
    fn singleton_average_equals_full_batch() {
        let Instance { model, data, lm } = random_instance(3, 3, 2, &[6, 7], 30);
        let duals = DualVariables::uniform(&lm, -5.0, -0.5, 1).unwrap();
        let windows = data.windows(2);
        let full = stochastic_grads(&model, &duals, &data, &windows, &lm).unwrap();
        let mut theta = vec![0.0; full.theta.len()];
        let mut dv = vec![0.0; full.duals.len()];
        for w in &windows {
            let g = stochastic_grads(&model, &duals, &data, &[*w], &lm).unwrap();
            theta.iter_mut().zip(&g.theta).for_each(|(a, b)| *a += b / windows.len() as f64);
            dv.iter_mut().zip(&g.duals).for_each(|(a, b)| *a += b / windows.len() as f64);
        }
        assert!(rel_err(&theta, &full.theta) < 1e-12);
        assert!(rel_err(&dv, &full.duals) < 1e-12);
    }

    #[test]
    fn barely_active_tuple_is_barrier_dominated() {
        // Saturated posteriors put almost no mass on tuple (1,1).
        let c = 2;
        let feats: Vec<f64> = vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0];
        let data = SequenceDataset::new(2, c, vec![feats], None).unwrap();
        let m = LinearClassifier::from_weights(2, 2, 10.0, vec![3.0, 0.0, 0.0, 0.0]).unwrap();
        let Instance { lm, .. } = random_instance(2, 2, 2, &[2], 4);
        let duals = DualVariables::uniform(&lm, -3.0, -0.5, 4).unwrap();
        let g = stochastic_grads(&m, &duals, &data, &data.windows(2), &lm).unwrap();
        let s = lm.support().iter().position(|&i| i == 3).unwrap();
        let barrier_only = lm.support_probs()[s] / duals.values()[s];
        assert!((g.duals[s] - barrier_only).abs() < 1e-20 + 1e-12 * barrier_only.abs());
    }

    #[test]
    fn lagrangian_rejects_nonnegative_duals() {
        let Instance { model, data, lm } = random_instance(2, 2, 2, &[3], 5);
        assert!(DualVariables::constant(&lm, 0.0).is_err());
        let mut d = DualVariables::constant(&lm, -1.0).unwrap();
        d.values_mut()[0] = 0.5;
        assert!(matches!(lagrangian(&model, &d, &data, &lm), Err(Error::NonNegativeDual { index: 0, .. })));
    }
}
