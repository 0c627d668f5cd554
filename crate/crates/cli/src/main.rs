//! `odm`: batch runner for unsupervised sequence-classifier experiments.

mod commands;
mod config;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::commands::Run;
use crate::config::{Config, ConfigError};

const CONFIG_ERROR: u8 = 2;
const DIVERGENCE: u8 = 3;
const IO_ERROR: u8 = 4;

#[derive(Parser)]
#[command(name = "odm", version, about = "Unsupervised sequence classification by output distribution matching")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Config file with one `key = value` per line.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override or add a key, as `key=value`. Repeatable.
    #[arg(long = "set", short = 's', value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory; created if missing.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate an N-gram prior from a corpus.
    ///
    /// Keys: corpus, format (text | ids), alphabet (cipher | infer, for text),
    /// classes (for ids), order, k. Writes lm.txt.
    EstimateLm(Common),
    /// Generate an unlabeled train split and a labeled test split.
    ///
    /// Keys: task (cipher | markov), seed. Cipher: dim, noise, train_chars,
    /// test_chars, ood_chars, ood_spread. Markov: classes, dim, noise,
    /// sequences, length, test_fraction, transition (rows split by `;`),
    /// initial.
    GenData(Common),
    /// Train a classifier on an unlabeled dataset.
    ///
    /// Keys: train, lm, test, trainer (spdg | sgd-biased | mode-seeking),
    /// preset (none | cipher), seed, primal_lr, dual_lr, batch, steps,
    /// primal_optimizer (adam | sgd), dual_init (uniform | closed-form),
    /// dual_init_lo, dual_init_hi, w_init, init_model, gamma, nu_ceiling, sampling
    /// (with-replacement | full-batch), adam_beta1, adam_beta2, adam_eps,
    /// log_every, early_stop_patience, record_wall_time. Writes model.txt and
    /// metrics.csv.
    Train(Common),
    /// Report the error rate of a model or of the majority predictor.
    ///
    /// Keys: data (labeled), and either model or majority_lm. Writes
    /// report.csv.
    Eval(Common),
    /// Cost and saddle-objective profiles around a solution.
    ///
    /// Keys: data, lm, model (path or `supervised`), seed, plane_min,
    /// plane_max, plane_points, primal_min, primal_max, primal_points,
    /// dual_min, dual_max, dual_points, line_points, directions.
    Landscape(Common),
    /// Rebuild a comparison table on the synthetic cipher task.
    ///
    /// Keys: seed, dim, noise, train_chars, test_chars, ood_chars,
    /// ood_spread, sgd_batches (cipher-table1), orders (cipher-table2).
    Reproduce {
        /// cipher-table1 or cipher-table2.
        preset: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Re-run the command recorded in a manifest.
    Rerun {
        manifest: PathBuf,
        /// Output directory; created if missing.
        #[arg(long, short)]
        out: PathBuf,
    },
}

fn load_config(common: &Common) -> Result<Config> {
    let mut config = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Config::parse(&text, &path.display().to_string())?
        }
        None => Config::default(),
    };
    for s in &common.set {
        config.set(s)?;
    }
    Ok(config)
}

fn dispatch(command: &str, config: Config, out: &Path) -> Result<()> {
    let run = Run::new(command, config, out)?;
    match command {
        "estimate-lm" => commands::estimate_lm(run),
        "gen-data" => commands::gen_data(run),
        "train" => commands::train(run),
        "eval" => commands::eval(run),
        "landscape" => commands::landscape(run),
        "reproduce" => commands::reproduce(run),
        other => Err(ConfigError::Invalid {
            key: "command".into(),
            value: other.into(),
            expected: "a subcommand name".into(),
        }
        .into()),
    }
}

fn execute(cli: Cli) -> Result<()> {
    let (name, common) = match &cli.command {
        Command::EstimateLm(c) => ("estimate-lm", c),
        Command::GenData(c) => ("gen-data", c),
        Command::Train(c) => ("train", c),
        Command::Eval(c) => ("eval", c),
        Command::Landscape(c) => ("landscape", c),
        Command::Reproduce { common, .. } => ("reproduce", common),
        Command::Rerun { manifest, out } => {
            let (command, config) = manifest::load(manifest)?;
            return dispatch(&command, config, out);
        }
    };
    let mut config = load_config(common)?;
    if let Command::Reproduce { preset: Some(p), .. } = &cli.command {
        config.set(&format!("preset={p}"))?;
    }
    dispatch(name, config, &common.out)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ConfigError>() {
            return CONFIG_ERROR;
        }
        if let Some(e) = cause.downcast_ref::<odm_core::Error>() {
            return match e {
                odm_core::Error::Divergence { .. } => DIVERGENCE,
                odm_core::Error::Io { .. } => IO_ERROR,
                _ => CONFIG_ERROR,
            };
        }
        if cause.is::<std::io::Error>() {
            return IO_ERROR;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
