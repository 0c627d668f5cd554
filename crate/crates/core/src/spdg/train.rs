use std::fmt::Write as _;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::adam::{Adam, AdamConfig};
use super::{dual_closed_form, lagrangian, DualVariables, SaddleGrads, SaddleWorkspace};
use crate::corpus::NGramModel;
use crate::cost::{conditional_log_weights, empirical_odm_cost, mode_seeking_cost};
use crate::error::{Error, Result};
use crate::kernel::{window_inputs, TupleWeights, WindowKernel};
use crate::model::{LinearClassifier, DEFAULT_GAMMA, PROB_FLOOR};
use crate::rng::{stream, Stream};
use crate::synthdata::{SequenceDataset, Window};

/// How minibatches are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    /// `batch` windows drawn uniformly with replacement from all windows.
    WithReplacement,
    /// Every window, every step.
    FullBatch,
}

/// Update rule for the classifier weights. The duals always use Adam.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrimalOptimizer {
    Adam,
    /// Plain gradient steps `θ -= lr · g`.
    Sgd,
}

/// Applies [`PrimalOptimizer`] steps to one parameter block.
#[derive(Debug, Clone)]
struct PrimalUpdate {
    kind: PrimalOptimizer,
    adam: Adam,
}

impl PrimalUpdate {
    fn new(kind: PrimalOptimizer, len: usize, config: AdamConfig) -> Self {
        Self { kind, adam: Adam::new(len, config) }
    }

    fn descend(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        match self.kind {
            PrimalOptimizer::Adam => self.adam.descend(params, grad, lr),
            PrimalOptimizer::Sgd => params.iter_mut().zip(grad).for_each(|(p, g)| *p -= lr * g),
        }
    }
}

/// Starting point of the duals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DualInit {
    /// Independent draws, uniform on `(lo, hi)`.
    Uniform { lo: f64, hi: f64 },
    /// The maximizer `-1/p̄` of the saddle objective at the initial model.
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub primal_lr: f64,
    pub dual_lr: f64,
    pub batch: usize,
    pub steps: usize,
    pub seed: u64,
    pub adam: AdamConfig,
    pub primal_optimizer: PrimalOptimizer,
    /// Initial value of every weight; `None` means `1/d`.
    pub w_init: Option<f64>,
    /// Explicit starting point. Overrides `w_init` and `gamma`.
    pub init_model: Option<LinearClassifier>,
    pub gamma: f64,
    pub dual_init: DualInit,
    /// Duals are projected to at most this value after each update.
    pub nu_ceiling: f64,
    pub sampling: Sampling,
    /// Evaluate and log every this many steps; 0 logs only the final step.
    pub log_every: usize,
    /// Stop when the moving average of the hook's held-out cost has not
    /// improved for this many evaluations.
    pub early_stop_patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            primal_lr: 1e-6,
            dual_lr: 1e-4,
            batch: 64,
            steps: 50_000,
            seed: 0,
            adam: AdamConfig::default(),
            primal_optimizer: PrimalOptimizer::Adam,
            w_init: None,
            init_model: None,
            gamma: DEFAULT_GAMMA,
            dual_init: DualInit::Uniform { lo: -1.0, hi: 0.0 },
            nu_ceiling: -1e-8,
            sampling: Sampling::WithReplacement,
            log_every: 1000,
            early_stop_patience: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.batch == 0 {
            return bad("batch must be >= 1".into());
        }
        if !(self.primal_lr >= 0.0 && self.dual_lr >= 0.0) {
            return bad("learning rates must be >= 0".into());
        }
        if let DualInit::Uniform { lo, hi } = self.dual_init {
            if !(lo < hi && hi <= 0.0) {
                return bad(format!("dual_init ({lo}, {hi}) must be a negative interval"));
            }
        }
        if !(self.nu_ceiling < 0.0) {
            return bad(format!("nu_ceiling must be negative, got {}", self.nu_ceiling));
        }
        if !(self.gamma > 0.0) {
            return bad(format!("gamma must be positive, got {}", self.gamma));
        }
        Ok(())
    }

    pub fn initial_model(&self, classes: usize, dim: usize) -> Result<LinearClassifier> {
        match &self.init_model {
            Some(m) if m.classes() != classes => Err(Error::DimensionMismatch { expected: classes, found: m.classes() }),
            Some(m) if m.dim() != dim => Err(Error::DimensionMismatch { expected: dim, found: m.dim() }),
            Some(m) => Ok(m.clone()),
            None => {
                let w = self.w_init.unwrap_or(1.0 / dim as f64);
                Ok(LinearClassifier::constant(classes, dim, self.gamma, w))
            }
        }
    }
}

/// What an evaluation hook reports about a model snapshot.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HookMetrics {
    pub train_error: Option<f64>,
    pub test_error: Option<f64>,
    pub heldout_cost: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricRow {
    pub step: usize,
    pub cost_j: f64,
    pub cost_l: Option<f64>,
    pub train_error: Option<f64>,
    pub test_error: Option<f64>,
    pub grad_norm_theta: f64,
    pub grad_norm_v: Option<f64>,
    pub wall_ms: u128,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricLog {
    pub rows: Vec<MetricRow>,
}

impl MetricLog {
    pub const HEADER: &'static str = "step,J,L,train_error,test_error,grad_norm_theta,grad_norm_v,wall_ms";

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        let mut out = String::from(Self::HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{:e},{},{},{},{:e},{},{}",
                r.step,
                r.cost_j,
                opt(r.cost_l),
                opt(r.train_error),
                opt(r.test_error),
                r.grad_norm_theta,
                opt(r.grad_norm_v),
                r.wall_ms
            );
        }
        out
    }

    pub fn last(&self) -> Option<&MetricRow> {
        self.rows.last()
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: LinearClassifier,
    pub duals: Option<DualVariables>,
    pub log: MetricLog,
    pub steps_run: usize,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// One optimizer driven by [`drive`].
trait Stepper {
    fn step(&mut self, batch: &[Window], step: usize) -> Result<()>;
    fn model(&self) -> &LinearClassifier;
    fn grad_norms(&self) -> (f64, Option<f64>);
    /// Full-data objective values for the log: `(J-like cost, L)`.
    fn objectives(&self) -> Result<(f64, Option<f64>)>;
    fn finish(self) -> (LinearClassifier, Option<DualVariables>);
}

fn draw_batch(rng: &mut ChaCha8Rng, windows: &[Window], batch: usize, out: &mut Vec<Window>) {
    out.clear();
    out.extend((0..batch).map(|_| windows[rng.random_range(0..windows.len())]));
}

fn drive<S: Stepper>(
    mut stepper: S,
    config: &TrainConfig,
    windows: &[Window],
    hook: &mut dyn FnMut(&LinearClassifier) -> HookMetrics,
) -> Result<TrainOutcome> {
    let started = Instant::now();
    let mut rng = stream(config.seed, Stream::WindowSampler);
    let mut batch = Vec::with_capacity(config.batch);
    let mut log = MetricLog::default();
    let mut heldout: Vec<f64> = Vec::new();
    let mut best_avg = f64::INFINITY;
    let mut stale = 0usize;
    let mut steps_run = 0;

    let mut record = |stepper: &S, step: usize, log: &mut MetricLog| -> Result<HookMetrics> {
        let (cost_j, cost_l) = stepper.objectives()?;
        if !cost_j.is_finite() || cost_l.is_some_and(|l| !l.is_finite()) {
            return Err(Error::Divergence { step, what: format!("objective J={cost_j} L={cost_l:?}") });
        }
        let metrics = hook(stepper.model());
        let (gt, gv) = stepper.grad_norms();
        log.rows.push(MetricRow {
            step,
            cost_j,
            cost_l,
            train_error: metrics.train_error,
            test_error: metrics.test_error,
            grad_norm_theta: gt,
            grad_norm_v: gv,
            wall_ms: started.elapsed().as_millis(),
        });
        Ok(metrics)
    };

    for step in 1..=config.steps {
        match config.sampling {
            Sampling::WithReplacement => {
                draw_batch(&mut rng, windows, config.batch, &mut batch);
                stepper.step(&batch, step)?;
            }
            Sampling::FullBatch => stepper.step(windows, step)?,
        }
        steps_run = step;
        if config.log_every > 0 && step % config.log_every == 0 && step < config.steps {
            let metrics = record(&stepper, step, &mut log)?;
            if let (Some(patience), Some(cost)) = (config.early_stop_patience, metrics.heldout_cost) {
                heldout.push(cost);
                let k = heldout.len().min(5);
                let avg = heldout[heldout.len() - k..].iter().sum::<f64>() / k as f64;
                if avg < best_avg {
                    best_avg = avg;
                    stale = 0;
                } else {
                    stale += 1;
                    if stale >= patience {
                        break;
                    }
                }
            }
        }
    }
    record(&stepper, steps_run, &mut log)?;
    let (model, duals) = stepper.finish();
    Ok(TrainOutcome { model, duals, log, steps_run })
}

/// Stochastic primal-dual gradient trainer: Adam descent on the classifier
/// weights and Adam ascent on the duals of the saddle objective, from
/// uniformly sampled windows.
pub struct SpdgTrainer<'a> {
    config: TrainConfig,
    dataset: &'a SequenceDataset,
    lm: &'a NGramModel,
    model: LinearClassifier,
    duals: DualVariables,
    primal: PrimalUpdate,
    adam_v: Adam,
    workspace: SaddleWorkspace,
    grads: SaddleGrads,
    steps: usize,
}

impl<'a> SpdgTrainer<'a> {
    pub fn new(config: TrainConfig, dataset: &'a SequenceDataset, lm: &'a NGramModel) -> Result<Self> {
        config.validate()?;
        if dataset.classes() != lm.classes() {
            return Err(Error::DimensionMismatch { expected: lm.classes(), found: dataset.classes() });
        }
        if dataset.window_count(lm.order()) == 0 {
            return Err(Error::NoWindows { order: lm.order() });
        }
        let model = config.initial_model(lm.classes(), dataset.dim())?;
        let duals = match config.dual_init {
            DualInit::Uniform { lo, hi } => DualVariables::uniform(lm, lo, hi, config.seed)?,
            DualInit::ClosedForm => {
                let mut d = dual_closed_form(&model, dataset, lm)?;
                d.clamp(config.nu_ceiling);
                d
            }
        };
        let n_theta = model.weights().len();
        Ok(Self {
            primal: PrimalUpdate::new(config.primal_optimizer, n_theta, config.adam),
            adam_v: Adam::new(lm.support_len(), config.adam),
            workspace: SaddleWorkspace::new(lm.order(), lm.classes()),
            grads: SaddleGrads { theta: vec![0.0; n_theta], duals: vec![0.0; lm.support_len()], value: 0.0 },
            steps: 0,
            config,
            dataset,
            lm,
            model,
            duals,
        })
    }

    pub fn model(&self) -> &LinearClassifier {
        &self.model
    }

    pub fn duals(&self) -> &DualVariables {
        &self.duals
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// One primal descent and dual ascent step on `batch`.
    pub fn step_on(&mut self, batch: &[Window]) -> Result<()> {
        self.steps += 1;
        self.workspace
            .grads_into(&self.model, &self.duals, self.dataset, batch, self.lm, &mut self.grads);
        if !self.grads.value.is_finite() || !all_finite(&self.grads.theta) || !all_finite(&self.grads.duals) {
            return Err(Error::Divergence {
                step: self.steps,
                what: format!("minibatch L = {}", self.grads.value),
            });
        }
        self.primal
            .descend(self.model.weights_mut(), &self.grads.theta, self.config.primal_lr);
        self.adam_v
            .ascend(self.duals.values_mut(), &self.grads.duals, self.config.dual_lr);
        self.duals.clamp(self.config.nu_ceiling);
        debug_assert!(self.duals.check_negative().is_ok());
        Ok(())
    }
}

impl Stepper for SpdgTrainer<'_> {
    fn step(&mut self, batch: &[Window], _step: usize) -> Result<()> {
        self.step_on(batch)
    }

    fn model(&self) -> &LinearClassifier {
        &self.model
    }

    fn grad_norms(&self) -> (f64, Option<f64>) {
        (norm(&self.grads.theta), Some(norm(&self.grads.duals)))
    }

    fn objectives(&self) -> Result<(f64, Option<f64>)> {
        Ok((
            empirical_odm_cost(&self.model, self.dataset, self.lm)?,
            Some(lagrangian(&self.model, &self.duals, self.dataset, self.lm)?),
        ))
    }

    fn finish(self) -> (LinearClassifier, Option<DualVariables>) {
        (self.model, Some(self.duals))
    }
}

/// Runs the stochastic primal-dual method. Labels in `dataset`, if any, are
/// not read; evaluation happens only through `hook`.
pub fn spdg_train(
    config: &TrainConfig,
    dataset: &SequenceDataset,
    lm: &NGramModel,
    hook: &mut dyn FnMut(&LinearClassifier) -> HookMetrics,
) -> Result<TrainOutcome> {
    let unlabeled = dataset.without_labels();
    let trainer = SpdgTrainer::new(config.clone(), &unlabeled, lm)?;
    let windows = unlabeled.windows(lm.order());
    drive(trainer, config, &windows, hook)
}

/// Shared state of the primal-only trainers.
struct PrimalStepper<'a> {
    config: TrainConfig,
    dataset: &'a SequenceDataset,
    lm: &'a NGramModel,
    model: LinearClassifier,
    primal: PrimalUpdate,
    grad: Vec<f64>,
    kernel: WindowKernel,
    posts: Vec<f64>,
    products: Vec<f64>,
    weights: Vec<f64>,
    /// Mode-seeking tuple list; empty for the biased trainer.
    ms_ids: Vec<usize>,
    ms_weights: Vec<f64>,
    mode_seeking: bool,
}

impl<'a> PrimalStepper<'a> {
    fn new(config: &TrainConfig, dataset: &'a SequenceDataset, lm: &'a NGramModel, mode_seeking: bool) -> Result<Self> {
        config.validate()?;
        if dataset.window_count(lm.order()) == 0 {
            return Err(Error::NoWindows { order: lm.order() });
        }
        let model = config.initial_model(lm.classes(), dataset.dim())?;
        let n = model.weights().len();
        let (ms_ids, ms_weights) = if mode_seeking { conditional_log_weights(lm) } else { (Vec::new(), Vec::new()) };
        Ok(Self {
            primal: PrimalUpdate::new(config.primal_optimizer, n, config.adam),
            grad: vec![0.0; n],
            kernel: WindowKernel::new(lm.order(), lm.classes()),
            posts: Vec::new(),
            products: vec![0.0; lm.support_len()],
            weights: vec![0.0; lm.support_len()],
            config: config.clone(),
            dataset,
            lm,
            model,
            ms_ids,
            ms_weights,
            mode_seeking,
        })
    }

    fn fill_posteriors(&mut self, batch: &[Window]) {
        let (order, c) = (self.lm.order(), self.lm.classes());
        self.posts.resize(batch.len() * order * c, 0.0);
        let mut xs = Vec::with_capacity(order);
        for (b, &w) in batch.iter().enumerate() {
            window_inputs(self.dataset, w, order, &mut xs);
            for (k, x) in xs.iter().enumerate() {
                let off = (b * order + k) * c;
                self.model.posterior_into(x, &mut self.posts[off..off + c]);
            }
        }
    }

    fn accumulate(&mut self, batch: &[Window], tuples_ids: &[usize], weights: &[f64], products: Option<&mut [f64]>, grad: bool) {
        let (order, c) = (self.lm.order(), self.lm.classes());
        let tuples = TupleWeights { order, ids: tuples_ids, weights };
        let scale = 1.0 / batch.len() as f64;
        let mut xs = Vec::with_capacity(order);
        let mut products = products;
        for (b, &w) in batch.iter().enumerate() {
            let ps: Vec<&[f64]> = (0..order)
                .map(|k| &self.posts[(b * order + k) * c..(b * order + k + 1) * c])
                .collect();
            if grad {
                window_inputs(self.dataset, w, order, &mut xs);
            }
            self.kernel.eval(
                &self.model,
                &xs,
                &ps,
                tuples,
                scale,
                grad.then_some(self.grad.as_mut_slice()),
                products.as_deref_mut(),
            );
        }
    }
}

impl Stepper for PrimalStepper<'_> {
    fn step(&mut self, batch: &[Window], step: usize) -> Result<()> {
        self.grad.iter_mut().for_each(|g| *g = 0.0);
        self.fill_posteriors(batch);
        if self.mode_seeking {
            let ids = std::mem::take(&mut self.ms_ids);
            let weights = std::mem::take(&mut self.ms_weights);
            self.accumulate(batch, &ids, &weights, None, true);
            self.ms_ids = ids;
            self.ms_weights = weights;
        } else {
            // Minibatch estimate of p̄ in both numerator and denominator.
            let lm = self.lm;
            let mut products = std::mem::take(&mut self.products);
            products.iter_mut().for_each(|p| *p = 0.0);
            let zeros = vec![0.0; lm.support_len()];
            self.accumulate(batch, lm.support_ids(), &zeros, Some(&mut products), false);
            let mut weights = std::mem::take(&mut self.weights);
            for ((w, &p), &q) in weights.iter_mut().zip(lm.support_probs()).zip(&products) {
                *w = -p / q.max(PROB_FLOOR);
            }
            self.accumulate(batch, lm.support_ids(), &weights, None, true);
            self.products = products;
            self.weights = weights;
        }
        if !all_finite(&self.grad) {
            return Err(Error::Divergence { step, what: "non-finite gradient".into() });
        }
        self.primal.descend(self.model.weights_mut(), &self.grad, self.config.primal_lr);
        Ok(())
    }

    fn model(&self) -> &LinearClassifier {
        &self.model
    }

    fn grad_norms(&self) -> (f64, Option<f64>) {
        (norm(&self.grad), None)
    }

    fn objectives(&self) -> Result<(f64, Option<f64>)> {
        if self.mode_seeking {
            Ok((mode_seeking_cost(&self.model, self.dataset, self.lm)?.cost, None))
        } else {
            Ok((empirical_odm_cost(&self.model, self.dataset, self.lm)?, None))
        }
    }

    fn finish(self) -> (LinearClassifier, Option<DualVariables>) {
        (self.model, None)
    }
}

/// Minibatch SGD (with Adam) on the output-matching cost where the
/// expected frequency inside the logarithm is also estimated from the
/// minibatch. The estimator is biased unless the batch is the full data.
pub fn sgd_biased_train(
    config: &TrainConfig,
    dataset: &SequenceDataset,
    lm: &NGramModel,
    hook: &mut dyn FnMut(&LinearClassifier) -> HookMetrics,
) -> Result<TrainOutcome> {
    let unlabeled = dataset.without_labels();
    let stepper = PrimalStepper::new(config, &unlabeled, lm, false)?;
    let windows = unlabeled.windows(lm.order());
    drive(stepper, config, &windows, hook)
}

/// Minibatch SGD (with Adam) on the mode-seeking cost
/// `-Σ p̄_θ ln p_LM(i_N | context)`, which is linear in `p̄_θ` and therefore
/// has unbiased minibatch gradients.
pub fn mode_seeking_train(
    config: &TrainConfig,
    dataset: &SequenceDataset,
    lm: &NGramModel,
    hook: &mut dyn FnMut(&LinearClassifier) -> HookMetrics,
) -> Result<TrainOutcome> {
    let unlabeled = dataset.without_labels();
    let stepper = PrimalStepper::new(config, &unlabeled, lm, true)?;
    let windows = unlabeled.windows(lm.order());
    drive(stepper, config, &windows, hook)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupervisedConfig {
    pub max_steps: usize,
    /// Initial step size; adapted by backtracking.
    pub lr: f64,
    /// Stop once the gradient norm falls below this.
    pub tol: f64,
    pub gamma: f64,
    /// Backtracking on/off. Without it every step uses `lr`.
    pub line_search: bool,
}

impl Default for SupervisedConfig {
    fn default() -> Self {
        Self { max_steps: 500, lr: 1.0, tol: 1e-4, gamma: DEFAULT_GAMMA, line_search: true }
    }
}

#[derive(Debug, Clone)]
pub struct SupervisedOutcome {
    pub model: LinearClassifier,
    pub losses: Vec<f64>,
    pub grad_norm: f64,
    pub steps: usize,
}

/// Mean per-position softmax cross-entropy and its gradient.
fn cross_entropy_and_grad(model: &LinearClassifier, dataset: &SequenceDataset, labels: &[Vec<usize>], grad: Option<&mut [f64]>) -> f64 {
    let (c, d) = (model.classes(), model.dim());
    let total = dataset.total_positions() as f64;
    let mut p = vec![0.0; c];
    let mut loss = 0.0;
    let mut grad = grad;
    if let Some(g) = grad.as_deref_mut() {
        g.iter_mut().for_each(|v| *v = 0.0);
    }
    let coef = model.gamma() / total;
    for (n, ys) in labels.iter().enumerate() {
        for (x, &y) in dataset.sequence(n).chunks_exact(d).zip(ys) {
            model.posterior_into(x, &mut p);
            loss -= p[y].max(PROB_FLOOR).ln();
            if let Some(g) = grad.as_deref_mut() {
                for j in 0..c {
                    let delta = if j == y { 1.0 } else { 0.0 };
                    let a = coef * (p[j] - delta);
                    if a != 0.0 {
                        for (gv, xv) in g[j * d..(j + 1) * d].iter_mut().zip(x) {
                            *gv += a * xv;
                        }
                    }
                }
            }
        }
    }
    loss / total
}

/// Full-batch gradient descent on the supervised cross-entropy from zero
/// weights, with Armijo backtracking so the loss never increases.
pub fn supervised_train(dataset: &SequenceDataset, config: &SupervisedConfig) -> Result<SupervisedOutcome> {
    let labels = dataset.labels().ok_or(Error::MissingLabels)?;
    if dataset.total_positions() == 0 {
        return Err(Error::InvalidArgument("no labeled positions".into()));
    }
    let mut model = LinearClassifier::constant(dataset.classes(), dataset.dim(), config.gamma, 0.0);
    let mut grad = vec![0.0; model.weights().len()];
    let mut loss = cross_entropy_and_grad(&model, dataset, labels, Some(&mut grad));
    let mut losses = vec![loss];
    let mut lr = config.lr;
    let mut steps = 0;
    let mut gnorm = norm(&grad);
    while steps < config.max_steps && gnorm >= config.tol {
        steps += 1;
        loop {
            let trial: Vec<f64> = model.weights().iter().zip(&grad).map(|(w, g)| w - lr * g).collect();
            let candidate = model.with_weights(trial);
            let new_loss = cross_entropy_and_grad(&candidate, dataset, labels, None);
            if !config.line_search || new_loss <= loss - 0.5 * lr * gnorm * gnorm {
                model = candidate;
                break;
            }
            lr *= 0.5;
            if lr < 1e-12 {
                return Ok(SupervisedOutcome { model, losses, grad_norm: gnorm, steps });
            }
        }
        loss = cross_entropy_and_grad(&model, dataset, labels, Some(&mut grad));
        if !loss.is_finite() {
            return Err(Error::Divergence { step: steps, what: "supervised loss".into() });
        }
        losses.push(loss);
        gnorm = norm(&grad);
        if config.line_search {
            lr *= 2.0;
        }
    }
    Ok(SupervisedOutcome { model, losses, grad_norm: gnorm, steps })
}

/// The constant predictor that always outputs the most frequent class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Majority {
    pub class: usize,
    /// Frequency of `class` in the data it was fitted on.
    pub frequency: f64,
}

impl Majority {
    /// Most probable class under the prior's last-position marginal.
    pub fn from_lm(lm: &NGramModel) -> Self {
        let uni = lm.unigram();
        let (class, &frequency) = uni
            .iter()
            .enumerate()
            .fold((0, &f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
        Self { class, frequency }
    }

    pub fn error(&self, dataset: &SequenceDataset) -> Result<f64> {
        let labels = dataset.labels().ok_or(Error::MissingLabels)?;
        let total: usize = labels.iter().map(Vec::len).sum();
        if total == 0 {
            return Err(Error::InvalidArgument("no labeled positions".into()));
        }
        let hits: usize = labels.iter().flatten().filter(|&&y| y == self.class).count();
        Ok(1.0 - hits as f64 / total as f64)
    }
}

/// Majority guess fitted on label sequences; its training error is
/// `1 - frequency`.
pub fn majority_baseline(labels: &[Vec<usize>], classes: usize) -> Result<Majority> {
    let mut counts = vec![0usize; classes];
    let mut total = 0usize;
    for &y in labels.iter().flatten() {
        *counts.get_mut(y).ok_or(Error::IdOutOfRange { id: y, classes })? += 1;
        total += 1;
    }
    if total == 0 {
        return Err(Error::InvalidArgument("no labels".into()));
    }
    let (class, &count) = counts
        .iter()
        .enumerate()
        .fold((0, &0usize), |best, cur| if cur.1 > best.1 { cur } else { best });
    Ok(Majority { class, frequency: count as f64 / total as f64 })
}
