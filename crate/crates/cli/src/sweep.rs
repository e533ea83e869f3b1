//! Random hyperparameter search ranked by Markov-boundary clause count.

use std::fmt::Write as _;

use anyhow::Result;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, SweepSpec};
use crate::experiment;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    pub trial: usize,
    pub threshold: f64,
    pub specificity: f64,
    pub d: f64,
    pub ta_state_bits: u32,
    pub ia_state_bits: u32,
    pub weighted: bool,
    /// Clean clauses after the last epoch; the ranking key.
    pub mb_clauses: usize,
    pub mb_clauses_trailing: f64,
    pub or_epoch: Option<usize>,
    pub test_accuracy: f64,
}

/// Config of trial `i`, drawn from stream `i` of the sweep seed.
pub fn trial_config(spec: &SweepSpec, i: usize) -> ExperimentConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(i as u64);
    let mut cfg = spec.base.clone();
    cfg.tm.threshold = rng.gen_range(spec.threshold.min..=spec.threshold.max);
    cfg.tm.specificity = rng.gen_range(spec.specificity.min..=spec.specificity.max);
    cfg.csia.d = rng.gen_range(spec.d.min..=spec.d.max);
    cfg.tm.ta_state_bits = rng.gen_range(spec.ta_state_bits.min..=spec.ta_state_bits.max);
    cfg.csia.ia_state_bits = rng.gen_range(spec.ia_state_bits.min..=spec.ia_state_bits.max);
    cfg.tm.weighted = spec.weighted[rng.gen_range(0..spec.weighted.len())];
    cfg.type3 = true;
    cfg.seed = rng.gen();
    cfg.out = None;
    cfg
}

/// Runs all trials (in parallel) and returns them ranked: most clean
/// clauses first, ties by trial index.
pub fn run(spec: &SweepSpec) -> Result<Vec<TrialRow>> {
    spec.validate()?;
    let mut rows = (0..spec.trials)
        .into_par_iter()
        .map(|i| {
            let cfg = trial_config(spec, i);
            let s = experiment::run(&cfg)?.summary;
            Ok(TrialRow {
                trial: i,
                threshold: cfg.tm.threshold,
                specificity: cfg.tm.specificity,
                d: cfg.csia.d,
                ta_state_bits: cfg.tm.ta_state_bits,
                ia_state_bits: cfg.csia.ia_state_bits,
                weighted: cfg.tm.weighted,
                mb_clauses: s.mb_clauses.unwrap_or(0),
                mb_clauses_trailing: s.mb_clauses_trailing.unwrap_or(0.0),
                or_epoch: s.or_epoch,
                test_accuracy: s.test_accuracy,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rank(&mut rows);
    Ok(rows)
}

pub fn rank(rows: &mut [TrialRow]) {
    rows.sort_by(|a, b| b.mb_clauses.cmp(&a.mb_clauses).then(a.trial.cmp(&b.trial)));
}

pub const LEADERBOARD_HEADER: &str =
    "rank,trial,T,s,d,ta_state_bits,ia_state_bits,weighted,mb_clauses,mb_clauses_trailing,or_epoch,test_accuracy";

pub fn leaderboard_csv(rows: &[TrialRow]) -> String {
    let mut out = String::from(LEADERBOARD_HEADER);
    out.push('\n');
    for (rank, r) in rows.iter().enumerate() {
        writeln!(
            out,
            "{},{},{:.4},{:.4},{:.4},{},{},{},{},{:.4},{},{:.6}",
            rank + 1,
            r.trial,
            r.threshold,
            r.specificity,
            r.d,
            r.ta_state_bits,
            r.ia_state_bits,
            r.weighted,
            r.mb_clauses,
            r.mb_clauses_trailing,
            r.or_epoch.map_or(String::new(), |e| e.to_string()),
            r.test_accuracy
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Range;

    #[test]
    fn trial_configs_respect_ranges_and_are_stable() {
        let spec = SweepSpec::default();
        for i in 0..50 {
            let c = trial_config(&spec, i);
            assert!((5.0..=20.0).contains(&c.tm.threshold));
            assert!((2.0..=100.0).contains(&c.tm.specificity));
            assert!((20.0..=400.0).contains(&c.csia.d));
            assert!((5..=19).contains(&c.tm.ta_state_bits));
            assert_eq!(c, trial_config(&spec, i));
        }
        assert_ne!(trial_config(&spec, 0), trial_config(&spec, 1));
    }

    #[test]
    fn tiny_sweep_ranks_by_clean_clauses() {
        let mut spec = SweepSpec {
            trials: 3,
            ta_state_bits: Range::new(4, 6),
            ia_state_bits: Range::new(4, 6),
            ..SweepSpec::default()
        };
        spec.base.epochs = 20;
        spec.base.metrics_every = 5;
        spec.base.tm.num_clauses = 20;
        let rows = run(&spec).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.windows(2).all(|w| w[0].mb_clauses >= w[1].mb_clauses));
        let csv = leaderboard_csv(&rows);
        assert_eq!(csv.lines().count(), 4);
    }
}
