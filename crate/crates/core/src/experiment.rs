//! The synthetic substitution-cipher benchmark and the two comparison tables
//! built on it: trainers side by side, and SPDG across prior orders and
//! prior domains.
//!
//! Plaintext comes from [`PseudoEnglish`]. Train and test text are drawn
//! from disjoint RNG streams of the same register. The out-of-domain prior is
//! estimated from text in a shifted register with its own seed.

use std::fmt::Write as _;

use crate::corpus::{estimate_ngram, NGramModel};
use crate::error::Result;
use crate::model::{eval_error, LinearClassifier};
use crate::spdg::{
    majority_baseline, mode_seeking_train, sgd_biased_train, spdg_train, supervised_train, DualInit,
    HookMetrics, Majority, PrimalOptimizer, SupervisedConfig, TrainConfig, TrainOutcome,
};
use crate::synthdata::text::{PseudoEnglish, Register, ALPHABET};
use crate::synthdata::{gen_cipher_dataset, gen_gaussian_features, SequenceDataset};

#[derive(Debug, Clone, PartialEq)]
pub struct CipherSpec {
    pub dim: usize,
    pub noise: f64,
    pub train_chars: usize,
    pub test_chars: usize,
    /// Symbols of out-of-domain text used for the shifted prior.
    pub ood_chars: usize,
    /// Log-normal spread of the shifted register's word weights.
    pub ood_spread: f64,
    pub seed: u64,
}

impl Default for CipherSpec {
    fn default() -> Self {
        Self {
            dim: 29,
            noise: 0.1,
            train_chars: 50_000,
            test_chars: 15_000,
            ood_chars: 200_000,
            ood_spread: 0.5,
            seed: 0,
        }
    }
}

impl CipherSpec {
    pub fn classes(&self) -> usize {
        ALPHABET.chars().count()
    }
}

/// Unlabeled training features paired with a labeled test set enciphered
/// with the same key. The hidden training plaintext is kept only to estimate
/// the in-domain prior and to report training error.
#[derive(Debug, Clone)]
pub struct CipherTask {
    pub spec: CipherSpec,
    pub train: SequenceDataset,
    pub train_text: Vec<Vec<usize>>,
    pub test: SequenceDataset,
    pub key: Vec<usize>,
}

// Seed offsets keep the text streams of one task disjoint.
const TRAIN_TEXT: u64 = 0x7472_6169;
const TEST_TEXT: u64 = 0x7465_7374;
const OOD_TEXT: u64 = 0x6f6f_6421;

pub fn build_cipher_task(spec: &CipherSpec) -> Result<CipherTask> {
    let english = PseudoEnglish::new(Register::Standard);
    let train_text = english.segment_ids(spec.train_chars, spec.seed ^ TRAIN_TEXT)?;
    let test_text = english.segment_ids(spec.test_chars, spec.seed ^ TEST_TEXT)?;
    let classes = spec.classes();
    let train = gen_cipher_dataset(&train_text, classes, spec.dim, spec.noise, 1, spec.seed)?;
    // Same key, independent noise stream.
    let noise_seed = spec.seed.wrapping_add(TEST_TEXT);
    let features = gen_gaussian_features(&test_text, &prototypes(&train.key, spec.dim), spec.noise, noise_seed)?;
    let test = SequenceDataset::new(spec.dim, classes, features, Some(test_text))?;
    Ok(CipherTask {
        spec: spec.clone(),
        train: train.dataset.without_labels(),
        train_text,
        test,
        key: train.key,
    })
}

fn prototypes(key: &[usize], dim: usize) -> Vec<Vec<f64>> {
    key.iter()
        .map(|&k| {
            let mut m = vec![0.0; dim];
            m[k] = 1.0;
            m
        })
        .collect()
}

impl CipherTask {
    /// Prior of the given order estimated from the training plaintext.
    pub fn in_domain_lm(&self, order: usize) -> Result<NGramModel> {
        estimate_ngram(&self.train_text, &PseudoEnglish::vocabulary(), order, 0.0)
    }

    /// Shifted-register text that shares no draws with the task's own text.
    pub fn ood_text(&self) -> Result<Vec<Vec<usize>>> {
        let english = PseudoEnglish::new(Register::Shifted { seed: self.spec.seed ^ OOD_TEXT, spread: self.spec.ood_spread });
        english.segment_ids(self.spec.ood_chars, self.spec.seed ^ OOD_TEXT)
    }

    /// Prior estimated from [`Self::ood_text`]. Smoothed with `k = 0.01` so
    /// tuples of the task that the other text never produced keep nonzero
    /// mass.
    pub fn out_of_domain_lm(&self, order: usize) -> Result<NGramModel> {
        estimate_ngram(&self.ood_text()?, &PseudoEnglish::vocabulary(), order, 0.01)
    }

    /// Training set with its plaintext attached, for error reporting only.
    pub fn labeled_train(&self) -> Result<SequenceDataset> {
        let (features, _) = self.train.clone().into_parts();
        SequenceDataset::new(self.spec.dim, self.spec.classes(), features, Some(self.train_text.clone()))
    }

    pub fn test_error(&self, model: &LinearClassifier) -> Result<f64> {
        eval_error(model, &self.test)
    }

    pub fn majority(&self) -> Result<Majority> {
        majority_baseline(&self.train_text, self.spec.classes())
    }
}

/// Tuned SPDG settings for the cipher task at the given prior order.
///
/// The duals start at their closed-form optimum, whose magnitude grows like
/// `C^N`, so the dual step grows with the order. The primal uses plain
/// gradient steps: with per-coordinate Adam scaling the weights drift into
/// a wrong-permutation basin on noisy inputs.
pub fn spdg_preset(order: usize, seed: u64) -> TrainConfig {
    let (dual_lr, steps) = match order {
        1 => (0.5, 10_000),
        2 => (10.0, 20_000),
        _ => (50.0, 30_000),
    };
    TrainConfig {
        primal_lr: 0.005,
        dual_lr,
        batch: 64,
        steps,
        seed,
        primal_optimizer: PrimalOptimizer::Sgd,
        dual_init: DualInit::ClosedForm,
        log_every: 0,
        ..TrainConfig::default()
    }
}

/// Minibatch SGD baseline that differs from the 2-gram SPDG preset only in
/// its batch size.
pub fn sgd_preset(batch: usize, seed: u64) -> TrainConfig {
    TrainConfig { batch, ..spdg_preset(2, seed) }
}

pub fn mode_seeking_preset(seed: u64) -> TrainConfig {
    sgd_preset(64, seed)
}

pub fn supervised_preset() -> SupervisedConfig {
    SupervisedConfig { max_steps: 300, ..SupervisedConfig::default() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub method: String,
    pub test_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub title: String,
    pub rows: Vec<TableRow>,
}

impl Table {
    pub fn get(&self, method: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.method == method).map(|r| r.test_error)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,test_error\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{:.6}", r.method, r.test_error);
        }
        out
    }
}

fn test_hook(task: &CipherTask) -> impl FnMut(&LinearClassifier) -> HookMetrics + '_ {
    |m| HookMetrics { test_error: task.test_error(m).ok(), ..HookMetrics::default() }
}

pub fn run_spdg(task: &CipherTask, lm: &NGramModel, config: &TrainConfig) -> Result<TrainOutcome> {
    spdg_train(config, &task.train, lm, &mut test_hook(task))
}

/// Rows: SPDG, mode-seeking, SGD at three batch sizes, supervised, majority.
pub fn cipher_table1(task: &CipherTask, seed: u64, sgd_batches: &[usize]) -> Result<Table> {
    let lm = task.in_domain_lm(2)?;
    let mut rows = Vec::new();
    let mut push = |method: String, model: &LinearClassifier| -> Result<()> {
        rows.push(TableRow { method, test_error: task.test_error(model)? });
        Ok(())
    };
    push("SPDG".into(), &run_spdg(task, &lm, &spdg_preset(2, seed))?.model)?;
    push(
        "mode-seeking".into(),
        &mode_seeking_train(&mode_seeking_preset(seed), &task.train, &lm, &mut test_hook(task))?.model,
    )?;
    for &b in sgd_batches {
        let out = sgd_biased_train(&sgd_preset(b, seed), &task.train, &lm, &mut test_hook(task))?;
        push(format!("SGD<{b}>"), &out.model)?;
    }
    let sup = supervised_train(&task.labeled_train()?, &supervised_preset())?;
    push("supervised".into(), &sup.model)?;
    let majority = task.majority()?;
    rows.push(TableRow { method: "majority".into(), test_error: majority.error(&task.test)? });
    Ok(Table { title: "cipher-table1".into(), rows })
}

/// SPDG test error for each prior order, with in-domain and out-of-domain
/// priors.
pub fn cipher_table2(task: &CipherTask, seed: u64, orders: &[usize]) -> Result<Table> {
    let mut rows = Vec::new();
    for &n in orders {
        for (domain, lm) in [("in-domain", task.in_domain_lm(n)?), ("out-of-domain", task.out_of_domain_lm(n)?)] {
            let out = run_spdg(task, &lm, &spdg_preset(n, seed))?;
            rows.push(TableRow { method: format!("{n}-gram {domain}"), test_error: task.test_error(&out.model)? });
        }
    }
    Ok(Table { title: "cipher-table2".into(), rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> CipherSpec {
        CipherSpec { train_chars: 3_000, test_chars: 1_000, ood_chars: 5_000, ..CipherSpec::default() }
    }

    #[test]
    fn task_shapes_and_determinism() {
        let a = build_cipher_task(&small()).unwrap();
        let b = build_cipher_task(&small()).unwrap();
        assert_eq!(a.train, b.train);
        assert_eq!(a.test, b.test);
        assert!(!a.train.has_labels());
        assert!(a.test.has_labels());
        assert!(a.train.total_positions() >= 3_000);
        assert!(a.test.total_positions() >= 1_000);
        assert_ne!(a.train_text, a.test.labels().unwrap());
    }

    #[test]
    fn priors_share_the_alphabet() {
        let task = build_cipher_task(&small()).unwrap();
        let ind = task.in_domain_lm(2).unwrap();
        let ood = task.out_of_domain_lm(2).unwrap();
        assert_eq!(ind.vocab(), ood.vocab());
        assert_eq!(ood.support_len(), 29 * 29);
        assert!(ind.support_len() < ood.support_len());
    }

    #[test]
    fn key_decodes_noiseless_features() {
        let spec = CipherSpec { noise: 0.0, ..small() };
        let task = build_cipher_task(&spec).unwrap();
        let labels = task.test.labels().unwrap();
        for (n, ys) in labels.iter().enumerate() {
            for (t, &y) in ys.iter().enumerate() {
                assert_eq!(task.test.x(n, t)[task.key[y]], 1.0);
            }
        }
    }
}
