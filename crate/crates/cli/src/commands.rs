//! Subcommand definitions and their implementations.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use tmprune::analysis::{boundary_features, categorize_clauses, clause_variables, literal_frequency, or_covered, CategoryCounts, ClauseCategory};
use tmprune::bn::format_samples;
use tmprune::convergence::{check_keep_condition, event_bound, rates, simulate_chain, ChainReport, RateReport, Variable};
use tmprune::csia::{CsiaConfig, PruneMode};
use tmprune::data::bn_dataset;
use tmprune::tm::{io, rules, TmModel};

use crate::config::{ExperimentConfig, ImageSource, NetSource, Source, SweepSpec};
use crate::experiment::{self, json};
use crate::output::write_atomic;
use crate::sweep;

/// A failed command and the exit status it maps to.
#[derive(Debug)]
pub enum Failure {
    /// Bad arguments or configuration: exit 1.
    Usage(anyhow::Error),
    /// The command started but could not finish: exit 2.
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Usage(e) | Failure::Runtime(e) => e,
        }
    }
}

trait Classify<T> {
    fn usage(self) -> Result<T, Failure>;
    fn runtime(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn usage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Usage(e.into()))
    }

    fn runtime(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Runtime(e.into()))
    }
}

#[derive(Debug, Parser)]
#[command(name = "tmprune", version, about = "Tsetlin Machine experiments with context-specific independence pruning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw ancestral samples from a Bayesian network.
    BnSample(BnSampleArgs),
    /// Train a model and write metrics, model, rules and a summary.
    Train(TrainArgs),
    /// Random hyperparameter search ranked by Markov-boundary clauses.
    Sweep(SweepArgs),
    /// Analytic rates and Monte Carlo check for the clause X1 AND X2.
    Converge(ConvergeArgs),
    /// Literal frequencies and boundary categories of a saved model.
    Analyze(AnalyzeArgs),
    /// Print the clauses of a saved model as rules.
    ExportRules(ExportRulesArgs),
}

fn parse_classes(s: &str) -> Result<[u8; 2], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected `a,b`, got `{s}`"));
    }
    let p = |v: &str| v.trim().parse::<u8>().map_err(|e| format!("bad class `{v}`: {e}"));
    Ok([p(parts[0])?, p(parts[1])?])
}

fn parse_prune_mode(s: &str) -> Result<PruneMode, String> {
    match s {
        "hold" => Ok(PruneMode::Hold),
        "reset" => Ok(PruneMode::Reset),
        _ => Err(format!("prune mode must be `hold` or `reset`, got `{s}`")),
    }
}

#[derive(Debug, Args)]
pub struct BnSampleArgs {
    /// `toy`, `chain3`, `chain3:p_x1,p_y,p_x2` or a JSON net file.
    #[arg(long, default_value = "toy")]
    pub net: String,
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write features plus a trailing `label` column for the target.
    #[arg(long)]
    pub dataset: bool,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct TrainArgs {
    /// JSON experiment config; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `toy`, `chain3`, `chain3:p_x1,p_y,p_x2` or a JSON net file.
    #[arg(long, conflicts_with = "images")]
    pub net: Option<String>,
    /// IDX image file (optionally gzipped); needs `--labels`.
    #[arg(long, requires = "labels")]
    pub images: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, requires = "test_labels")]
    pub test_images: Option<PathBuf>,
    #[arg(long)]
    pub test_labels: Option<PathBuf>,
    /// `a,b`: class a becomes label 1, class b label 0.
    #[arg(long, value_parser = parse_classes)]
    pub classes: Option<[u8; 2]>,
    /// Binarization threshold: a pixel is 1 iff it exceeds this value.
    #[arg(long)]
    pub threshold: Option<u8>,
    /// Cap on training rows.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Cap on test rows.
    #[arg(long)]
    pub test_limit: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub samples_per_epoch: Option<usize>,
    #[arg(long)]
    pub metrics_every: Option<usize>,
    #[arg(long)]
    pub clauses: Option<usize>,
    /// Vote clamp T.
    #[arg(long)]
    pub vote_threshold: Option<f64>,
    /// Specificity s.
    #[arg(long)]
    pub specificity: Option<f64>,
    #[arg(long)]
    pub ta_bits: Option<u32>,
    #[arg(long)]
    pub weighted: Option<bool>,
    #[arg(long)]
    pub boost: Option<bool>,
    /// Enable Type III feedback.
    #[arg(long)]
    pub type3: bool,
    /// Disable Type III feedback even if the config enables it.
    #[arg(long, conflicts_with = "type3")]
    pub no_type3: bool,
    #[arg(long)]
    pub d: Option<f64>,
    #[arg(long)]
    pub ia_bits: Option<u32>,
    /// `hold` (default) or `reset`.
    #[arg(long, value_parser = parse_prune_mode)]
    pub prune_mode: Option<PruneMode>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// JSON sweep spec; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "sweep-out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    /// `chain3`, `chain3:p_x1,p_y,p_x2` or a JSON net file with nodes X1, X2
    /// and the target.
    #[arg(long, default_value = "chain3")]
    pub net: String,
    /// Drift divisor; drift probability is 1/d.
    #[arg(long, default_value_t = 200.0, conflicts_with = "p_d")]
    pub d: f64,
    /// Drift probability, overriding `--d`.
    #[arg(long)]
    pub p_d: Option<f64>,
    #[arg(long, default_value_t = 10)]
    pub ia_bits: u32,
    /// Step pairs per cell.
    #[arg(long, default_value_t = 100_000)]
    pub horizon: u64,
    /// Simulation runs; 0 skips the simulation.
    #[arg(long, default_value_t = 200)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Net supplying feature names and the target's Markov boundary.
    #[arg(long)]
    pub net: Option<String>,
    /// Report file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportRulesArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Net supplying feature names.
    #[arg(long)]
    pub net: Option<String>,
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::BnSample(a) => cmd_bn_sample(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Converge(a) => cmd_converge(&a),
        Command::Analyze(a) => cmd_analyze(&a),
        Command::ExportRules(a) => cmd_export_rules(&a),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes()).runtime(),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn cmd_bn_sample(a: &BnSampleArgs) -> Result<(), Failure> {
    let net = NetSource::parse(&a.net).usage()?.load().usage()?;
    let text = if a.dataset {
        bn_dataset(&net, a.count, a.seed).to_text()
    } else {
        format_samples(&net, &net.sample(a.count, a.seed))
    };
    emit(a.out.as_deref(), &text)
}

/// Desk-scale defaults for two-class image runs.
pub fn image_defaults(src: ImageSource) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        source: Source::Images(src),
        type3: false,
        csia: CsiaConfig::new(4, 4.0),
        epochs: 60,
        metrics_every: 1,
        ..ExperimentConfig::default()
    };
    cfg.tm.num_clauses = 100;
    cfg.tm.threshold = 20.0;
    cfg.tm.specificity = 20.0;
    cfg.tm.ta_state_bits = 8;
    cfg
}

/// Resolves the experiment config from a file and flag overrides.
pub fn resolve_train_config(a: &TrainArgs) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match (&a.config, &a.images) {
        (Some(p), _) => ExperimentConfig::from_file(p)?,
        (None, Some(_)) => image_defaults(ImageSource {
            train_images: PathBuf::new(),
            train_labels: PathBuf::new(),
            test_images: None,
            test_labels: None,
            classes: [1, 0],
            threshold: tmprune::data::DEFAULT_BINARIZE_THRESHOLD,
            train_limit: None,
            test_limit: None,
            holdout: 0.2,
        }),
        (None, None) => ExperimentConfig::default(),
    };
    if let Some(n) = &a.net {
        cfg.source = Source::Net(NetSource::parse(n)?);
    }
    if let Some(images) = &a.images {
        let labels = a.labels.clone().ok_or_else(|| anyhow!("--images needs --labels"))?;
        let prev = match &cfg.source {
            Source::Images(s) => Some(s.clone()),
            Source::Net(_) => None,
        };
        cfg.source = Source::Images(ImageSource {
            train_images: images.clone(),
            train_labels: labels,
            test_images: prev.as_ref().and_then(|p| p.test_images.clone()),
            test_labels: prev.as_ref().and_then(|p| p.test_labels.clone()),
            classes: prev.as_ref().map_or([1, 0], |p| p.classes),
            threshold: prev.as_ref().map_or(tmprune::data::DEFAULT_BINARIZE_THRESHOLD, |p| p.threshold),
            train_limit: prev.as_ref().and_then(|p| p.train_limit),
            test_limit: prev.as_ref().and_then(|p| p.test_limit),
            holdout: prev.as_ref().map_or(0.2, |p| p.holdout),
        });
    }
    let image_only = a.test_images.is_some() || a.classes.is_some() || a.threshold.is_some() || a.limit.is_some() || a.test_limit.is_some();
    match &mut cfg.source {
        Source::Images(s) => {
            if let (Some(ti), Some(tl)) = (&a.test_images, &a.test_labels) {
                s.test_images = Some(ti.clone());
                s.test_labels = Some(tl.clone());
            }
            if let Some(c) = a.classes {
                s.classes = c;
            }
            if let Some(t) = a.threshold {
                s.threshold = t;
            }
            if let Some(n) = a.limit {
                s.train_limit = Some(n);
            }
            if let Some(n) = a.test_limit {
                s.test_limit = Some(n);
            }
        }
        Source::Net(_) if image_only => {
            anyhow::bail!("--test-images, --classes, --threshold, --limit and --test-limit apply to image runs only")
        }
        Source::Net(_) => {}
    }
    macro_rules! set {
        ($flag:expr, $field:expr) => {
            if let Some(v) = $flag {
                $field = v;
            }
        };
    }
    set!(a.epochs, cfg.epochs);
    set!(a.samples_per_epoch, cfg.samples_per_epoch);
    set!(a.metrics_every, cfg.metrics_every);
    set!(a.clauses, cfg.tm.num_clauses);
    set!(a.vote_threshold, cfg.tm.threshold);
    set!(a.specificity, cfg.tm.specificity);
    set!(a.ta_bits, cfg.tm.ta_state_bits);
    set!(a.weighted, cfg.tm.weighted);
    set!(a.boost, cfg.tm.boost_true_positive);
    set!(a.d, cfg.csia.d);
    set!(a.ia_bits, cfg.csia.ia_state_bits);
    set!(a.prune_mode, cfg.csia.prune_mode);
    set!(a.seed, cfg.seed);
    if a.type3 {
        cfg.type3 = true;
    }
    if a.no_type3 {
        cfg.type3 = false;
    }
    if let Some(o) = &a.out {
        cfg.out = Some(o.clone());
    }
    if cfg.out.is_none() {
        cfg.out = Some(PathBuf::from("tmprune-out"));
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn cmd_train(a: &TrainArgs) -> Result<(), Failure> {
    let cfg = resolve_train_config(a).usage()?;
    let outcome = experiment::run(&cfg).runtime()?;
    let dir = cfg.out.clone().expect("resolved config has an output directory");
    experiment::write_outputs(&dir, &cfg, &outcome).runtime()?;
    let s = &outcome.summary;
    eprintln!(
        "trained {} epochs: test accuracy {:.4}, {:.2} literals per clause, {} pruned; outputs in {}",
        s.epochs,
        s.test_accuracy,
        s.mean_literals,
        s.pruned,
        dir.display()
    );
    Ok(())
}

pub const LEADERBOARD_FILE: &str = "leaderboard.csv";
pub const SWEEP_FILE: &str = "sweep.json";

pub fn resolve_sweep_spec(a: &SweepArgs) -> anyhow::Result<SweepSpec> {
    let mut spec = match &a.config {
        Some(p) => SweepSpec::from_file(p)?,
        None => SweepSpec::default(),
    };
    if let Some(t) = a.trials {
        spec.trials = t;
    }
    if let Some(e) = a.epochs {
        spec.base.epochs = e;
    }
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    spec.validate()?;
    Ok(spec)
}

#[derive(Serialize)]
struct SweepReport<'a> {
    spec: &'a SweepSpec,
    ranked: &'a [sweep::TrialRow],
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<(), Failure> {
    let spec = resolve_sweep_spec(a).usage()?;
    let rows = sweep::run(&spec).runtime()?;
    let mut out = crate::output::Outputs::new();
    out.stage(&a.out.join(LEADERBOARD_FILE), sweep::leaderboard_csv(&rows).as_bytes()).runtime()?;
    let report = json(&SweepReport { spec: &spec, ranked: &rows }).runtime()?;
    out.stage(&a.out.join(SWEEP_FILE), report.as_bytes()).runtime()?;
    out.commit().runtime()?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct KeepCondition {
    pub holds: bool,
    pub margin: f64,
}

#[derive(Debug, Serialize)]
pub struct ConvergeReport {
    pub p_d: f64,
    pub event_bound: f64,
    pub rates: [RateReport; 2],
    pub keep_condition: KeepCondition,
    pub simulation: Option<ChainReport>,
}

pub fn converge_report(a: &ConvergeArgs) -> Result<ConvergeReport, Failure> {
    let net = NetSource::parse(&a.net).usage()?.load().usage()?;
    let p_d = a.p_d.unwrap_or(1.0 / a.d);
    let config = CsiaConfig::new(a.ia_bits, 1.0 / p_d);
    config.validate().usage()?;
    let bound = event_bound(&net).usage()?;
    let r1 = rates(&net, Variable::X1, p_d).usage()?;
    let r2 = rates(&net, Variable::X2, p_d).usage()?;
    let (holds, margin) = check_keep_condition(&net, p_d).usage()?;
    let simulation = if a.runs == 0 {
        None
    } else {
        Some(simulate_chain(&net, &config, a.horizon, a.runs, a.seed).runtime()?)
    };
    Ok(ConvergeReport {
        p_d,
        event_bound: bound,
        rates: [r1, r2],
        keep_condition: KeepCondition { holds, margin },
        simulation,
    })
}

pub fn cmd_converge(a: &ConvergeArgs) -> Result<(), Failure> {
    let report = converge_report(a)?;
    emit(a.out.as_deref(), &json(&report).runtime()?)
}

fn load_model(path: &Path) -> anyhow::Result<(TmModel, Option<tmprune::csia::CsiaBank>)> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    io::load(&bytes).with_context(|| format!("loading model {}", path.display()))
}

fn net_names(spec: &str, model: &TmModel) -> anyhow::Result<(Vec<String>, Vec<String>)> {
    let net = NetSource::parse(spec)?.load()?;
    let t = net.target();
    let names: Vec<String> = net.names().enumerate().filter(|&(i, _)| i != t).map(|(_, n)| n.to_string()).collect();
    anyhow::ensure!(
        names.len() == model.feature_count(),
        "net has {} features but the model has {}",
        names.len(),
        model.feature_count()
    );
    let boundary = net.markov_boundary(net.target_name())?.into_iter().collect();
    Ok((names, boundary))
}

/// Clause counts keyed by category label.
#[derive(Debug, Serialize)]
pub struct CategoryReport {
    pub pooled: BTreeMap<&'static str, usize>,
    pub positive: BTreeMap<&'static str, usize>,
    pub negative: BTreeMap<&'static str, usize>,
    pub clean: usize,
}

impl From<CategoryCounts> for CategoryReport {
    fn from(c: CategoryCounts) -> Self {
        let keyed = |counts: [usize; 4]| ClauseCategory::ALL.iter().map(|k| (k.label(), counts[k.index()])).collect();
        Self {
            pooled: keyed(c.pooled),
            positive: keyed(c.positive),
            negative: keyed(c.negative),
            clean: c.clean(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct AnalysisReport {
    pub feature_names: Vec<String>,
    pub literal_frequency: Vec<usize>,
    pub variable_frequency: Vec<usize>,
    pub mean_literals: f64,
    pub held: usize,
    pub boundary: Option<Vec<String>>,
    pub categories: Option<CategoryReport>,
    pub or_covered: Option<bool>,
}

pub fn analysis_report(a: &AnalyzeArgs) -> Result<AnalysisReport, Failure> {
    let (model, bank) = load_model(&a.model).runtime()?;
    let (names, boundary) = match &a.net {
        Some(n) => {
            let (names, b) = net_names(n, &model).usage()?;
            (names, Some(b))
        }
        None => ((1..=model.feature_count()).map(|i| format!("X{i}")).collect(), None),
    };
    let freq = literal_frequency(&model);
    let (categories, covered) = match &boundary {
        Some(b) if !b.is_empty() => {
            let set = b.iter().cloned().collect();
            let idx = boundary_features(&set, &names).usage()?;
            let vars: Vec<_> = model.clauses().iter().map(clause_variables).collect();
            (Some(categorize_clauses(&model, &idx).usage()?.into()), Some(or_covered(&vars, &idx)))
        }
        _ => (None, None),
    };
    Ok(AnalysisReport {
        feature_names: names,
        literal_frequency: freq.per_literal,
        variable_frequency: freq.per_variable,
        mean_literals: model.mean_literals_per_clause(),
        held: bank.as_ref().map_or(0, |b| b.held_count()),
        boundary,
        categories,
        or_covered: covered,
    })
}

pub fn cmd_analyze(a: &AnalyzeArgs) -> Result<(), Failure> {
    let report = analysis_report(a)?;
    emit(a.out.as_deref(), &json(&report).runtime()?)
}

pub fn cmd_export_rules(a: &ExportRulesArgs) -> Result<(), Failure> {
    let (model, _) = load_model(&a.model).runtime()?;
    let names = match &a.net {
        Some(n) => Some(net_names(n, &model).usage()?.0),
        None => None,
    };
    print!("{}", rules::export_rules(&model, names.as_deref()));
    Ok(())
}
