//! Experiment and sweep configuration, stored as JSON.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use tmprune::bn::{builtin_chain3, builtin_toy, BayesNet};
use tmprune::csia::CsiaConfig;
use tmprune::data::DEFAULT_BINARIZE_THRESHOLD;
use tmprune::tm::TmConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NetSource {
    BuiltinToy,
    BuiltinChain3 { p_x1: f64, p_y: f64, p_x2: f64 },
    File { path: PathBuf },
}

impl NetSource {
    pub fn load(&self) -> Result<BayesNet> {
        Ok(match self {
            NetSource::BuiltinToy => builtin_toy(),
            NetSource::BuiltinChain3 { p_x1, p_y, p_x2 } => builtin_chain3(*p_x1, *p_y, *p_x2)?,
            NetSource::File { path } => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                BayesNet::from_json(&text).with_context(|| format!("parsing {}", path.display()))?
            }
        })
    }

    /// `toy`, `chain3`, `chain3:p_x1,p_y,p_x2` or a path to a JSON net.
    pub fn parse(spec: &str) -> Result<Self> {
        Ok(match spec {
            "toy" => NetSource::BuiltinToy,
            "chain3" => NetSource::BuiltinChain3 {
                p_x1: 0.5,
                p_y: 0.9,
                p_x2: 0.8,
            },
            s if s.starts_with("chain3:") => {
                let p: Vec<f64> = s["chain3:".len()..]
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .with_context(|| format!("bad chain3 parameters in `{s}`"))?;
                ensure!(p.len() == 3, "chain3 takes three parameters, got {}", p.len());
                NetSource::BuiltinChain3 {
                    p_x1: p[0],
                    p_y: p[1],
                    p_x2: p[2],
                }
            }
            path => NetSource::File { path: path.into() },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageSource {
    pub train_images: PathBuf,
    pub train_labels: PathBuf,
    /// Without test files the tail of the training files is held out.
    #[serde(default)]
    pub test_images: Option<PathBuf>,
    #[serde(default)]
    pub test_labels: Option<PathBuf>,
    /// `[a, b]`: class `a` becomes label 1, class `b` label 0.
    pub classes: [u8; 2],
    #[serde(default = "default_threshold")]
    pub threshold: u8,
    #[serde(default)]
    pub train_limit: Option<usize>,
    #[serde(default)]
    pub test_limit: Option<usize>,
    /// Rows held out when there are no test files.
    #[serde(default = "default_holdout")]
    pub holdout: f64,
}

fn default_threshold() -> u8 {
    DEFAULT_BINARIZE_THRESHOLD
}

fn default_holdout() -> f64 {
    0.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Net(NetSource),
    Images(ImageSource),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub source: Source,
    pub tm: TmConfig,
    /// Type III feedback on/off.
    #[serde(default)]
    pub type3: bool,
    pub csia: CsiaConfig,
    pub epochs: usize,
    /// Fresh BN samples per epoch; ignored for images (one pass per epoch).
    #[serde(default = "default_samples_per_epoch")]
    pub samples_per_epoch: usize,
    #[serde(default = "one")]
    pub metrics_every: usize,
    /// Metric rows averaged for the trailing clean-clause mean.
    #[serde(default = "default_window")]
    pub trailing_window: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_samples_per_epoch() -> usize {
    100
}

fn one() -> usize {
    1
}

fn default_window() -> usize {
    10
}

impl Default for ExperimentConfig {
    /// Best toy-run hyperparameters with 200 clauses, scaled to 10^5 epochs.
    fn default() -> Self {
        Self {
            source: Source::Net(NetSource::BuiltinToy),
            tm: TmConfig {
                num_clauses: 200,
                threshold: 17.33,
                specificity: 66.81,
                ta_state_bits: 6,
                weighted: true,
                boost_true_positive: false,
                seed: 0,
            },
            type3: true,
            csia: CsiaConfig::new(10, 226.18),
            epochs: 100_000,
            samples_per_epoch: 100,
            metrics_every: 1000,
            trailing_window: 10,
            seed: 0,
            out: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.epochs >= 1, "epochs must be at least 1");
        ensure!(self.samples_per_epoch >= 1, "samples_per_epoch must be at least 1");
        ensure!(self.metrics_every >= 1, "metrics_every must be at least 1");
        ensure!(self.trailing_window >= 1, "trailing_window must be at least 1");
        self.tm.validate()?;
        self.csia.validate()?;
        match &self.source {
            Source::Net(NetSource::File { path }) => ensure!(path.exists(), "net file {} not found", path.display()),
            Source::Net(_) => {}
            Source::Images(img) => {
                ensure!(img.classes[0] != img.classes[1], "classes must differ");
                ensure!((0.0..1.0).contains(&img.holdout), "holdout must be in [0, 1)");
                for p in [Some(&img.train_images), Some(&img.train_labels), img.test_images.as_ref(), img.test_labels.as_ref()]
                    .into_iter()
                    .flatten()
                {
                    ensure!(p.exists(), "image file {} not found", p.display());
                }
                if img.test_images.is_some() != img.test_labels.is_some() {
                    bail!("test images and test labels must be given together");
                }
            }
        }
        Ok(())
    }
}

/// Inclusive range to sample from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range<T> {
    pub min: T,
    pub max: T,
}

impl<T: PartialOrd + Copy> Range<T> {
    pub fn new(min: T, max: T) -> Self {
        Self { min, max }
    }

    fn ok(&self) -> bool {
        self.min <= self.max
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub threshold: Range<f64>,
    pub specificity: Range<f64>,
    pub d: Range<f64>,
    pub ta_state_bits: Range<u32>,
    pub ia_state_bits: Range<u32>,
    /// Allowed values of the weighted flag.
    pub weighted: Vec<bool>,
    pub trials: usize,
    pub seed: u64,
    /// Per-trial experiment template; the sampled fields are overwritten.
    pub base: ExperimentConfig,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            threshold: Range::new(5.0, 20.0),
            specificity: Range::new(2.0, 100.0),
            d: Range::new(20.0, 400.0),
            ta_state_bits: Range::new(5, 19),
            ia_state_bits: Range::new(5, 19),
            weighted: vec![false, true],
            trials: 96,
            seed: 0,
            base: ExperimentConfig {
                epochs: 1000,
                metrics_every: 100,
                ..ExperimentConfig::default()
            },
        }
    }
}

impl SweepSpec {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.trials >= 1, "trials must be at least 1");
        ensure!(self.threshold.ok() && self.threshold.min > 0.0, "bad threshold range");
        ensure!(self.specificity.ok() && self.specificity.min >= 1.0, "bad specificity range");
        ensure!(self.d.ok() && self.d.min > 1.0, "bad d range");
        ensure!(self.ta_state_bits.ok(), "bad ta_state_bits range");
        ensure!(self.ia_state_bits.ok(), "bad ia_state_bits range");
        ensure!(!self.weighted.is_empty(), "weighted needs at least one value");
        ensure!(
            matches!(self.base.source, Source::Net(_)),
            "sweeps rank Markov-boundary clauses and need a net source"
        );
        let mut lo = self.base.clone();
        lo.tm.ta_state_bits = self.ta_state_bits.min;
        lo.csia.ia_state_bits = self.ia_state_bits.min;
        let mut hi = lo.clone();
        hi.tm.ta_state_bits = self.ta_state_bits.max;
        hi.csia.ia_state_bits = self.ia_state_bits.max;
        lo.validate()?;
        hi.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn net_source_parsing() {
        assert_eq!(NetSource::parse("toy").unwrap(), NetSource::BuiltinToy);
        assert_eq!(
            NetSource::parse("chain3:0.1,0.2,0.3").unwrap(),
            NetSource::BuiltinChain3 {
                p_x1: 0.1,
                p_y: 0.2,
                p_x2: 0.3
            }
        );
        assert!(NetSource::parse("chain3:0.1,0.2").is_err());
        assert!(matches!(NetSource::parse("net.json").unwrap(), NetSource::File { .. }));
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = ExperimentConfig::default();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&text).unwrap(), cfg);
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = ExperimentConfig::default();
        cfg.epochs = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.csia.d = 0.5;
        assert!(cfg.validate().is_err());
        let mut spec = SweepSpec::default();
        spec.threshold = Range::new(5.0, 1.0);
        assert!(spec.validate().is_err());
        SweepSpec::default().validate().unwrap();
    }
}
