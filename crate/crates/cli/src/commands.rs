use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use odm_core::corpus::{build_vocab, estimate_ngram, format_ngram, load_ngram, Vocabulary};
use odm_core::cost::empirical_odm_cost;
use odm_core::experiment::{
    build_cipher_task, cipher_table1, cipher_table2, spdg_preset, supervised_preset, CipherSpec,
};
use odm_core::landscape::{
    dual_direction, line_profile, profile_j, profile_l, random_direction, saddle_checks, Axis,
};
use odm_core::model::{eval_error, format_model, load_model};
use odm_core::spdg::{
    dual_closed_form, mode_seeking_train, sgd_biased_train, spdg_train, supervised_train, DualInit, HookMetrics,
    Majority, PrimalOptimizer, Sampling, TrainConfig,
};
use odm_core::synthdata::text::{normalize_text, PseudoEnglish};
use odm_core::synthdata::{
    format_dataset, gen_cipher_dataset, gen_markov_labels, load_dataset, split_indices,
};
use odm_core::{LinearClassifier, NGramModel, SequenceDataset};

use crate::config::{Config, ConfigError};
use crate::manifest::Manifest;

/// Output directory and manifest of one run.
pub struct Run {
    pub config: Config,
    out: PathBuf,
    manifest: Manifest,
}

impl Run {
    pub fn new(command: &str, config: Config, out: &Path) -> Result<Self> {
        std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        Ok(Self { config, out: out.to_path_buf(), manifest: Manifest::new(command) })
    }

    fn input(&mut self, key: &str) -> Result<PathBuf> {
        let path = self.config.input_path(key)?;
        self.manifest.input(key, &path);
        Ok(path)
    }

    fn optional_input(&mut self, key: &str) -> Result<Option<PathBuf>> {
        let path = self.config.optional_input_path(key)?;
        if let Some(p) = &path {
            self.manifest.input(key, p);
        }
        Ok(path)
    }

    /// All keys have been read: reject the rest before any work starts.
    fn ready(&self) -> Result<()> {
        Ok(self.config.finish()?)
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.out.join(name);
        std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.manifest.output(name);
        Ok(())
    }

    pub fn finish(self) -> Result<()> {
        self.manifest.write(&self.config, &self.out)
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn parse_list<T: std::str::FromStr>(key: &str, raw: &str) -> Result<Vec<T>, ConfigError> {
    raw.split(',')
        .map(|s| s.trim().parse().ok())
        .collect::<Option<Vec<T>>>()
        .filter(|v| !v.is_empty())
        .ok_or_else(|| ConfigError::Invalid {
            key: key.into(),
            value: raw.into(),
            expected: "comma-separated list".into(),
        })
}

/// Rows separated by `;`, entries by whitespace.
fn parse_table(key: &str, raw: &str) -> Result<Vec<Vec<f64>>, ConfigError> {
    raw.split(';')
        .map(|row| row.split_whitespace().map(|v| v.parse().ok()).collect::<Option<Vec<f64>>>())
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| ConfigError::Invalid {
            key: key.into(),
            value: raw.into(),
            expected: "rows of numbers separated by `;`".into(),
        })
}

fn write_lines(vocab: &Vocabulary, text: &[Vec<usize>]) -> String {
    text.iter().map(|ids| vocab.decode(ids) + "\n").collect()
}

fn write_ids(labels: &[Vec<usize>]) -> String {
    labels
        .iter()
        .map(|seq| seq.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ") + "\n")
        .collect()
}

pub fn estimate_lm(mut run: Run) -> Result<()> {
    let corpus = run.input("corpus")?;
    let format = run.config.choice("format", &["text", "ids"], "text")?;
    let (alphabet, classes) = if format == "text" {
        (Some(run.config.choice("alphabet", &["cipher", "infer"], "cipher")?), None)
    } else {
        (None, Some(run.config.require::<usize>("classes")?))
    };
    let order: usize = run.config.get("order", 2)?;
    let k: f64 = run.config.get("k", 0.0)?;
    run.ready()?;

    let text = read_text(&corpus)?;
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    let (vocab, sequences) = match (alphabet.as_deref(), classes) {
        (Some("cipher"), _) => {
            let vocab = PseudoEnglish::vocabulary();
            let seqs = lines
                .iter()
                .map(|l| vocab.encode(&normalize_text(l)?))
                .collect::<odm_core::Result<Vec<_>>>()?;
            (vocab, seqs)
        }
        (Some(_), _) => {
            let vocab = build_vocab(&lines.concat())?;
            let seqs = lines.iter().map(|l| vocab.encode(l)).collect::<odm_core::Result<Vec<_>>>()?;
            (vocab, seqs)
        }
        (None, Some(c)) => {
            let seqs = lines
                .iter()
                .enumerate()
                .map(|(i, l)| {
                    l.split_whitespace()
                        .map(|t| match t.parse::<usize>() {
                            Ok(id) if id < c => Ok(id),
                            _ => bail!(odm_core::Error::Parse { line: i + 1, msg: format!("bad id {t:?}") }),
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            (Vocabulary::numbered(c)?, seqs)
        }
        (None, None) => unreachable!("ids format requires classes"),
    };
    let lm = estimate_ngram(&sequences, &vocab, order, k)?;
    run.write("lm.txt", &format_ngram(&lm))?;
    println!("estimated {order}-gram model: {} classes, support {}, entropy {:.4} nats", lm.classes(), lm.support_len(), lm.entropy());
    run.finish()
}

pub fn gen_data(mut run: Run) -> Result<()> {
    let task = run.config.choice("task", &["cipher", "markov"], "cipher")?;
    let seed: u64 = run.config.get("seed", 0)?;
    if task == "cipher" {
        let d = CipherSpec::default();
        let spec = CipherSpec {
            dim: run.config.get("dim", d.dim)?,
            noise: run.config.get("noise", d.noise)?,
            train_chars: run.config.get("train_chars", d.train_chars)?,
            test_chars: run.config.get("test_chars", d.test_chars)?,
            ood_chars: run.config.get("ood_chars", d.ood_chars)?,
            ood_spread: run.config.get("ood_spread", d.ood_spread)?,
            seed,
        };
        run.ready()?;
        let task = build_cipher_task(&spec)?;
        let vocab = PseudoEnglish::vocabulary();
        run.write("train.seq", &format_dataset(&task.train))?;
        run.write("test.seq", &format_dataset(&task.test))?;
        run.write("train_corpus.txt", &write_lines(&vocab, &task.train_text))?;
        run.write("ood_corpus.txt", &write_lines(&vocab, &task.ood_text()?))?;
        println!(
            "cipher task: {} train / {} test positions, {} classes, dim {}",
            task.train.total_positions(),
            task.test.total_positions(),
            spec.classes(),
            spec.dim
        );
    } else {
        let classes: usize = run.config.require("classes")?;
        let dim: usize = run.config.get("dim", classes)?;
        let noise: f64 = run.config.get("noise", 0.1)?;
        let sequences: usize = run.config.get("sequences", 100)?;
        let length: usize = run.config.get("length", 50)?;
        let test_fraction: f64 = run.config.get("test_fraction", 0.2)?;
        let raw: String = run.config.require("transition")?;
        let transition = parse_table("transition", &raw)?;
        let initial = match run.config.optional::<String>("initial")? {
            Some(raw) => parse_list::<f64>("initial", &raw)?,
            None => vec![1.0 / classes as f64; classes],
        };
        run.ready()?;
        if transition.len() != classes {
            bail!(ConfigError::Rejected { key: "transition".into(), reason: format!("expected {classes} rows") });
        }
        let labels = gen_markov_labels(&transition, &initial, &vec![length; sequences], seed)?;
        let data = gen_cipher_dataset(&labels, classes, dim, noise, 1, seed)?;
        let (train_idx, test_idx) = split_indices(data.dataset.len(), test_fraction, seed)?;
        let train_labels: Vec<Vec<usize>> = train_idx.iter().map(|&i| labels[i].clone()).collect();
        run.write("train.seq", &format_dataset(&data.dataset.select(&train_idx).without_labels()))?;
        run.write("test.seq", &format_dataset(&data.dataset.select(&test_idx)))?;
        run.write("train_labels.ids", &write_ids(&train_labels))?;
        println!("markov task: {} train / {} test sequences of length {length}", train_idx.len(), test_idx.len());
    }
    run.finish()
}

/// Training data must come from the unlabeled file format.
fn load_unlabeled(path: &Path) -> Result<SequenceDataset> {
    let data = load_dataset(path)?;
    if data.has_labels() {
        bail!(ConfigError::Rejected {
            key: "train".into(),
            reason: format!("{} is labeled; training reads only unlabeled datasets", path.display()),
        });
    }
    Ok(data)
}

fn load_labeled(key: &str, path: &Path) -> Result<SequenceDataset> {
    let data = load_dataset(path)?;
    if !data.has_labels() {
        bail!(ConfigError::Rejected { key: key.into(), reason: format!("{} has no labels", path.display()) });
    }
    Ok(data)
}

fn train_config(config: &mut Config, order: usize) -> Result<TrainConfig, ConfigError> {
    let seed: u64 = config.get("seed", 0)?;
    let base = match config.choice("preset", &["none", "cipher"], "none")?.as_str() {
        "cipher" => spdg_preset(order, seed),
        _ => TrainConfig { seed, ..TrainConfig::default() },
    };
    let primal_optimizer = match base.primal_optimizer {
        PrimalOptimizer::Adam => "adam",
        PrimalOptimizer::Sgd => "sgd",
    };
    let primal_optimizer = match config.choice("primal_optimizer", &["adam", "sgd"], primal_optimizer)?.as_str() {
        "adam" => PrimalOptimizer::Adam,
        _ => PrimalOptimizer::Sgd,
    };
    let (init, lo, hi) = match base.dual_init {
        DualInit::Uniform { lo, hi } => ("uniform", lo, hi),
        DualInit::ClosedForm => ("closed-form", -1.0, 0.0),
    };
    let dual_init = match config.choice("dual_init", &["uniform", "closed-form"], init)?.as_str() {
        "uniform" => DualInit::Uniform { lo: config.get("dual_init_lo", lo)?, hi: config.get("dual_init_hi", hi)? },
        _ => DualInit::ClosedForm,
    };
    let sampling = match config.choice("sampling", &["with-replacement", "full-batch"], "with-replacement")?.as_str() {
        "full-batch" => Sampling::FullBatch,
        _ => Sampling::WithReplacement,
    };
    let mut adam = base.adam;
    adam.beta1 = config.get("adam_beta1", adam.beta1)?;
    adam.beta2 = config.get("adam_beta2", adam.beta2)?;
    adam.eps = config.get("adam_eps", adam.eps)?;
    Ok(TrainConfig {
        primal_lr: config.get("primal_lr", base.primal_lr)?,
        dual_lr: config.get("dual_lr", base.dual_lr)?,
        batch: config.get("batch", base.batch)?,
        steps: config.get("steps", base.steps)?,
        seed,
        adam,
        primal_optimizer,
        w_init: config.optional("w_init")?,
        init_model: None,
        gamma: config.get("gamma", base.gamma)?,
        dual_init,
        nu_ceiling: config.get("nu_ceiling", base.nu_ceiling)?,
        sampling,
        log_every: config.get("log_every", 1000)?,
        early_stop_patience: config.optional("early_stop_patience")?,
    })
}

pub fn train(mut run: Run) -> Result<()> {
    let train_path = run.input("train")?;
    let lm_path = run.input("lm")?;
    let test_path = run.optional_input("test")?;
    let trainer = run.config.choice("trainer", &["spdg", "sgd-biased", "mode-seeking"], "spdg")?;
    let init_path = run.optional_input("init_model")?;
    let lm = load_ngram(&lm_path)?;
    let mut config = train_config(&mut run.config, lm.order())?;
    let wall_time: bool = run.config.get("record_wall_time", false)?;
    run.ready()?;
    config.validate().map_err(|e| ConfigError::Rejected { key: "train config".into(), reason: e.to_string() })?;

    config.init_model = init_path.map(|p| load_model(&p)).transpose()?;
    let data = load_unlabeled(&train_path)?;
    let test = test_path.map(|p| load_labeled("test", &p)).transpose()?;
    let mut hook = |m: &LinearClassifier| match &test {
        Some(t) => HookMetrics {
            test_error: eval_error(m, t).ok(),
            heldout_cost: empirical_odm_cost(m, t, &lm).ok(),
            ..HookMetrics::default()
        },
        None => HookMetrics::default(),
    };
    let mut outcome = match trainer.as_str() {
        "spdg" => spdg_train(&config, &data, &lm, &mut hook)?,
        "sgd-biased" => sgd_biased_train(&config, &data, &lm, &mut hook)?,
        _ => mode_seeking_train(&config, &data, &lm, &mut hook)?,
    };
    if !wall_time {
        // Keeps the metrics file bit-identical across re-runs.
        outcome.log.rows.iter_mut().for_each(|r| r.wall_ms = 0);
    }
    run.write("model.txt", &format_model(&outcome.model))?;
    run.write("metrics.csv", &outcome.log.to_csv())?;
    if let Some(last) = outcome.log.last() {
        let err = last.test_error.map_or_else(|| "n/a".to_string(), |e| format!("{:.2}%", 100.0 * e));
        println!("{trainer}: {} steps, J = {:.6}, test error {err}", outcome.steps_run, last.cost_j);
    }
    run.finish()
}

pub fn eval(mut run: Run) -> Result<()> {
    let data_path = run.input("data")?;
    let model_path = run.optional_input("model")?;
    let majority_path = run.optional_input("majority_lm")?;
    run.ready()?;
    let data = load_labeled("data", &data_path)?;
    let (predictor, error) = match (model_path, majority_path) {
        (Some(m), None) => ("model", eval_error(&load_model(&m)?, &data)?),
        (None, Some(lm)) => ("majority", Majority::from_lm(&load_ngram(&lm)?).error(&data)?),
        _ => bail!(ConfigError::Rejected {
            key: "model".into(),
            reason: "give exactly one of `model` and `majority_lm`".into(),
        }),
    };
    let report = format!("predictor,positions,error\n{predictor},{},{error:e}\n", data.total_positions());
    run.write("report.csv", &report)?;
    println!("{predictor} error {:.4}% over {} positions", 100.0 * error, data.total_positions());
    run.finish()
}

fn axis(config: &mut Config, prefix: &str, default: Axis) -> Result<Axis> {
    let min = config.get(&format!("{prefix}_min"), default.min)?;
    let max = config.get(&format!("{prefix}_max"), default.max)?;
    let points = config.get(&format!("{prefix}_points"), default.points)?;
    Axis::new(min, max, points).map_err(|e| {
        ConfigError::Rejected { key: format!("{prefix}_*"), reason: e.to_string() }.into()
    })
}

pub fn landscape(mut run: Run) -> Result<()> {
    let data_path = run.input("data")?;
    let lm_path = run.input("lm")?;
    let model_key = run.config.get("model", "supervised".to_string())?;
    let model_path = (model_key != "supervised").then(|| run.input("model")).transpose()?;
    let seed: u64 = run.config.get("seed", 0)?;
    let primal = axis(&mut run.config, "primal", Axis::default())?;
    let plane = axis(&mut run.config, "plane", Axis::new(-1.0, 1.0, 11)?)?;
    let dual = axis(&mut run.config, "dual", Axis::new(-1.0, 1.0, 21)?)?;
    let line_points: usize = run.config.get("line_points", 11)?;
    let directions: u64 = run.config.get("directions", 5)?;
    run.ready()?;

    let data = load_dataset(&data_path)?;
    let lm: NGramModel = load_ngram(&lm_path)?;
    let theta_star = match model_path {
        Some(p) => load_model(&p)?,
        None => supervised_train(&data, &supervised_preset())?.model,
    };
    let data = data.without_labels();
    let t1 = random_direction(&theta_star, seed, 0)?;
    let t2 = random_direction(&theta_star, seed, 1)?;
    let grid_j = profile_j(&data, &lm, &theta_star, &t1, &t2, plane, plane)?;
    run.write("profile_j.csv", &grid_j.to_csv())?;
    run.write("profile_j.meta", &grid_j.metadata())?;

    let v_star = dual_closed_form(&theta_star, &data, &lm)?;
    let v1 = dual_direction(&lm, seed)?;
    let grid_l = profile_l(&data, &lm, &theta_star, &v_star, &t1, &v1, primal, dual)?;
    let report = saddle_checks(&grid_l)?;
    run.write("profile_l.csv", &grid_l.to_csv())?;
    run.write("profile_l.meta", &grid_l.metadata())?;

    let lambdas: Vec<f64> = (0..line_points).map(|k| k as f64 / (line_points.max(2) - 1) as f64).collect();
    let mut summary = String::from("direction,max_J,max_L,L_below_J\n");
    let mut below = 0;
    for d in 0..directions {
        let line = line_profile(&data, &lm, &theta_star, &random_direction(&theta_star, seed, 2 + d)?, &lambdas)?;
        let ok = line.l_below_j();
        below += usize::from(ok);
        summary.push_str(&format!("{d},{:e},{:e},{}\n", line.max_j(), line.max_l(), u8::from(ok)));
        run.write(&format!("line_{d}.csv"), &line.to_csv())?;
    }
    run.write("lines.csv", &summary)?;
    let saddle = format!(
        "dual_axis_max_at_origin,dual_axis_worst_excess,primal_slope\n{},{:e},{:e}\n",
        u8::from(report.dual_axis_max_at_origin),
        report.dual_axis_worst_excess,
        report.primal_slope
    );
    run.write("saddle.csv", &saddle)?;
    println!(
        "saddle check: dual-axis maximum at origin = {}; max L <= max J on {below}/{directions} lines",
        report.dual_axis_max_at_origin
    );
    run.finish()
}

pub fn reproduce(mut run: Run) -> Result<()> {
    let preset = run.config.choice("preset", &["cipher-table1", "cipher-table2"], "cipher-table1")?;
    let d = CipherSpec::default();
    let seed: u64 = run.config.get("seed", 0)?;
    let spec = CipherSpec {
        dim: run.config.get("dim", d.dim)?,
        noise: run.config.get("noise", d.noise)?,
        train_chars: run.config.get("train_chars", d.train_chars)?,
        test_chars: run.config.get("test_chars", d.test_chars)?,
        ood_chars: run.config.get("ood_chars", d.ood_chars)?,
        ood_spread: run.config.get("ood_spread", d.ood_spread)?,
        seed,
    };
    let table = match preset.as_str() {
        "cipher-table1" => {
            let raw = run.config.get("sgd_batches", "10,100,1000".to_string())?;
            let batches = parse_list::<usize>("sgd_batches", &raw)?;
            run.ready()?;
            cipher_table1(&build_cipher_task(&spec)?, seed, &batches)?
        }
        "cipher-table2" => {
            let raw = run.config.get("orders", "1,2,3".to_string())?;
            let orders = parse_list::<usize>("orders", &raw)?;
            run.ready()?;
            cipher_table2(&build_cipher_task(&spec)?, seed, &orders)?
        }
        _ => unreachable!("preset validated above"),
    };
    run.write("table.csv", &table.to_csv())?;
    for row in &table.rows {
        println!("{:<24} {:>7.2}%", row.method, 100.0 * row.test_error);
    }
    run.finish()
}
