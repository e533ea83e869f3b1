//! One training run: data preparation, the epoch loop, metrics and
//! artifacts.

use std::collections::BTreeSet;
use std::path::Path;

use anyhow::{Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use tmprune::analysis::{boundary_features, clause_variables, or_covered, EpochRecord, MetricsHistory};
use tmprune::bn::BayesNet;
use tmprune::csia::CsiaBank;
use tmprune::data::{filter_classes, load_idx, Dataset};
use tmprune::tm::{io, rules, LiteralVector, TmModel};
use tmprune::train::{accuracy, fit_epoch};

use crate::config::{ExperimentConfig, ImageSource, Source};
use crate::output::Outputs;

/// Fresh BN samples used to score a model after each recorded epoch.
pub const EVAL_SAMPLES: usize = 2000;

// Generator streams derived from the experiment seed.
const STREAM_TRAIN: u64 = 0;
const STREAM_SAMPLES: u64 = 1;
const STREAM_EVAL: u64 = 2;

fn stream(seed: u64, s: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(s);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub epochs: usize,
    pub type3: bool,
    pub feature_count: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    /// Online accuracy during the last epoch.
    pub final_train_accuracy: f64,
    pub test_accuracy: f64,
    pub mean_literals: f64,
    pub variable_frequency: Vec<usize>,
    /// Literals pruned over the whole run.
    pub pruned: usize,
    pub held: usize,
    /// First completed epoch at which partial-boundary clauses cover the
    /// boundary.
    pub or_epoch: Option<usize>,
    /// Clean (boundary-only) clauses after the last epoch.
    pub mb_clauses: Option<usize>,
    /// Clean clauses averaged over the trailing metric rows.
    pub mb_clauses_trailing: Option<f64>,
    pub boundary: Option<Vec<String>>,
}

pub struct Outcome {
    pub model: TmModel,
    pub bank: Option<CsiaBank>,
    pub history: MetricsHistory,
    pub summary: Summary,
}

struct Prepared {
    names: Vec<String>,
    boundary: Option<(BTreeSet<usize>, Vec<String>)>,
    train: Train,
    test: (Vec<LiteralVector>, Vec<bool>),
}

enum Train {
    Stream(BayesNet),
    Fixed(Vec<LiteralVector>, Vec<bool>),
}

fn net_features(net: &BayesNet, values: &[bool], out: &mut Vec<u8>) {
    out.clear();
    let t = net.target();
    out.extend(values.iter().enumerate().filter(|&(i, _)| i != t).map(|(_, &b)| u8::from(b)));
}

fn load_images(img: &ImageSource) -> Result<(Dataset, Dataset)> {
    let [a, b] = img.classes;
    let raw = load_idx(&img.train_images, &img.train_labels).context("loading training images")?;
    let all = filter_classes(&raw, a, b, img.threshold)?;
    let (train, test) = match (&img.test_images, &img.test_labels) {
        (Some(ti), Some(tl)) => {
            let raw = load_idx(ti, tl).context("loading test images")?;
            (all, filter_classes(&raw, a, b, img.threshold)?)
        }
        _ => {
            let keep = all.len() - (all.len() as f64 * img.holdout).round() as usize;
            all.split_at(keep)
        }
    };
    let train = img.train_limit.map_or(train.clone(), |n| train.limit(n));
    let test = img.test_limit.map_or(test.clone(), |n| test.limit(n));
    Ok((train, test))
}

fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    match &cfg.source {
        Source::Net(src) => {
            let net = src.load()?;
            let t = net.target();
            let names: Vec<String> = net.names().enumerate().filter(|&(i, _)| i != t).map(|(_, n)| n.to_string()).collect();
            let mb = net.markov_boundary(net.target_name())?;
            let boundary = if mb.is_empty() {
                None
            } else {
                Some((boundary_features(&mb, &names)?, mb.into_iter().collect()))
            };
            let mut rng = stream(cfg.seed, STREAM_EVAL);
            let mut values = vec![false; net.len()];
            let mut bits = Vec::new();
            let (mut xs, mut ys) = (Vec::new(), Vec::new());
            for _ in 0..EVAL_SAMPLES {
                net.sample_into(&mut rng, &mut values);
                net_features(&net, &values, &mut bits);
                xs.push(LiteralVector::from_bits(&bits));
                ys.push(values[t]);
            }
            Ok(Prepared {
                names,
                boundary,
                train: Train::Stream(net),
                test: (xs, ys),
            })
        }
        Source::Images(img) => {
            let (train, test) = load_images(img)?;
            anyhow::ensure!(!train.is_empty(), "no training rows");
            Ok(Prepared {
                names: train.names_or_default(),
                boundary: None,
                train: Train::Fixed(train.literal_vectors(), train.labels().to_vec()),
                test: (test.literal_vectors(), test.labels().to_vec()),
            })
        }
    }
}

fn score(model: &TmModel, test: &(Vec<LiteralVector>, Vec<bool>), fallback: f64) -> Result<f64> {
    if test.0.is_empty() {
        Ok(fallback)
    } else {
        Ok(accuracy(model, &test.0, &test.1)?)
    }
}

/// Runs the configured experiment in memory.
pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate()?;
    let prepared = prepare(cfg)?;
    let mut tm = cfg.tm.clone();
    tm.seed = cfg.seed;
    let mut model = TmModel::new(tm, prepared.names.len())?;
    let mut bank = if cfg.type3 { Some(CsiaBank::new(&model, cfg.csia.clone())?) } else { None };
    let mut rng = stream(cfg.seed, STREAM_TRAIN);
    let mut sample_rng = stream(cfg.seed, STREAM_SAMPLES);
    let boundary = prepared.boundary.as_ref().map(|(b, _)| b);
    let mut history = MetricsHistory::new(prepared.names.clone());
    let mut or_epoch = None;
    let mut pruned = 0;
    let mut last_accuracy = 0.0;

    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    let mut values = Vec::new();
    let mut bits = Vec::new();
    for epoch in 1..=cfg.epochs {
        let stats = match &prepared.train {
            Train::Stream(net) => {
                values.resize(net.len(), false);
                xs.clear();
                ys.clear();
                for _ in 0..cfg.samples_per_epoch {
                    net.sample_into(&mut sample_rng, &mut values);
                    net_features(net, &values, &mut bits);
                    xs.push(LiteralVector::from_bits(&bits));
                    ys.push(values[net.target()]);
                }
                fit_epoch(&mut model, &xs, &ys, bank.as_mut(), &mut rng)?
            }
            Train::Fixed(fx, fy) => fit_epoch(&mut model, fx, fy, bank.as_mut(), &mut rng)?,
        };
        pruned += stats.pruned;
        last_accuracy = stats.accuracy();
        if let (None, Some(b)) = (or_epoch, boundary) {
            let vars: Vec<_> = model.clauses().iter().map(clause_variables).collect();
            if or_covered(&vars, b) {
                or_epoch = Some(epoch);
            }
        }
        if epoch % cfg.metrics_every == 0 || epoch == cfg.epochs {
            let acc = score(&model, &prepared.test, last_accuracy)?;
            history.push(EpochRecord::capture(&model, epoch, acc, boundary));
        }
    }

    let last = history.records.last().expect("at least one epoch is recorded");
    let summary = Summary {
        epochs: cfg.epochs,
        type3: cfg.type3,
        feature_count: prepared.names.len(),
        train_rows: match &prepared.train {
            Train::Stream(_) => cfg.epochs * cfg.samples_per_epoch,
            Train::Fixed(x, _) => x.len(),
        },
        test_rows: prepared.test.0.len(),
        final_train_accuracy: last_accuracy,
        test_accuracy: last.accuracy,
        mean_literals: last.mean_literals,
        variable_frequency: last.variable_frequency.clone(),
        pruned,
        held: bank.as_ref().map_or(0, CsiaBank::held_count),
        or_epoch,
        mb_clauses: last.categories.map(|c| c.clean()),
        mb_clauses_trailing: history.trailing_clean_mean(cfg.trailing_window),
        boundary: prepared.boundary.map(|(_, names)| names),
    };
    Ok(Outcome {
        model,
        bank,
        history,
        summary,
    })
}

pub const METRICS_FILE: &str = "metrics.csv";
pub const MODEL_FILE: &str = "model.tmpm";
pub const RULES_FILE: &str = "rules.txt";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CONFIG_FILE: &str = "config.json";

/// Writes every artifact of `outcome` into `dir`, all or nothing. The saved
/// config omits the output directory so artifacts do not depend on it.
pub fn write_outputs(dir: &Path, cfg: &ExperimentConfig, outcome: &Outcome) -> Result<()> {
    let cfg = ExperimentConfig {
        out: None,
        ..cfg.clone()
    };
    let mut out = Outputs::new();
    out.stage(&dir.join(METRICS_FILE), outcome.history.to_csv().as_bytes())?;
    out.stage(&dir.join(MODEL_FILE), &io::save(&outcome.model, outcome.bank.as_ref()))?;
    let names = &outcome.history.feature_names;
    out.stage(&dir.join(RULES_FILE), rules::export_rules(&outcome.model, Some(names)).as_bytes())?;
    out.stage(&dir.join(SUMMARY_FILE), json(&outcome.summary)?.as_bytes())?;
    out.stage(&dir.join(CONFIG_FILE), json(&cfg)?.as_bytes())?;
    out.commit()?;
    Ok(())
}

pub fn json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}
