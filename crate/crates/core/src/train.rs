//! Epoch-level training: Type I/II on every sample, then (optionally)
//! Type III against the post-update clause composition.

use rand::Rng;

use crate::csia::{type_iii_step, CsiaBank};
use crate::tm::{LiteralVector, TmError, TmModel};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EpochStats {
    pub samples: usize,
    /// Predictions made before each update that matched the label.
    pub correct: usize,
    pub pruned: usize,
    pub mean_literals: f64,
}

impl EpochStats {
    pub fn accuracy(&self) -> f64 {
        if self.samples == 0 {
            0.0
        } else {
            self.correct as f64 / self.samples as f64
        }
    }
}

pub fn fit_epoch<R: Rng + ?Sized>(
    model: &mut TmModel,
    samples: &[LiteralVector],
    labels: &[bool],
    mut csia: Option<&mut CsiaBank>,
    rng: &mut R,
) -> Result<EpochStats, TmError> {
    if samples.len() != labels.len() {
        return Err(TmError::LengthMismatch {
            samples: samples.len(),
            labels: labels.len(),
        });
    }
    if let Some(x) = samples.iter().find(|x| x.features() != model.feature_count()) {
        model.check_dims(x.features())?;
    }
    let mut stats = EpochStats {
        samples: samples.len(),
        ..EpochStats::default()
    };
    for (x, &y) in samples.iter().zip(labels) {
        if (model.vote_sum_unchecked(x) >= 0) == y {
            stats.correct += 1;
        }
        match csia.as_deref_mut() {
            None => {
                model.feedback_step(x, y, rng, None, None);
            }
            Some(bank) => {
                model.feedback_step(x, y, rng, Some(bank.held_masks()), None);
                bank.sync(model);
                stats.pruned += type_iii_step(model, bank, x, y, rng, None).len();
            }
        }
    }
    stats.mean_literals = model.mean_literals_per_clause();
    Ok(stats)
}

/// Fraction of samples classified correctly.
pub fn accuracy(model: &TmModel, samples: &[LiteralVector], labels: &[bool]) -> Result<f64, TmError> {
    if samples.len() != labels.len() {
        return Err(TmError::LengthMismatch {
            samples: samples.len(),
            labels: labels.len(),
        });
    }
    if samples.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0;
    for (x, &y) in samples.iter().zip(labels) {
        if model.classify(x)? == y {
            correct += 1;
        }
    }
    Ok(correct as f64 / samples.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csia::{CsiaConfig, PruneMode};
    use crate::tm::TmConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn data(n: usize, seed: u64) -> (Vec<LiteralVector>, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..n {
            let x: Vec<u8> = (0..4).map(|_| rng.gen_range(0..2)).collect();
            ys.push(x[0] == 1 && x[2] == 0);
            xs.push(LiteralVector::from_bits(&x));
        }
        (xs, ys)
    }

    fn config() -> TmConfig {
        TmConfig {
            num_clauses: 10,
            threshold: 5.0,
            specificity: 3.0,
            ta_state_bits: 8,
            ..TmConfig::default()
        }
    }

    #[test]
    fn empty_epoch_changes_nothing() {
        let mut m = TmModel::new(config(), 4).unwrap();
        let before = m.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let stats = fit_epoch(&mut m, &[], &[], None, &mut rng).unwrap();
        assert_eq!(stats.samples, 0);
        assert_eq!(m, before);
    }

    #[test]
    fn length_and_dimension_errors() {
        let mut m = TmModel::new(config(), 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (xs, _) = data(3, 1);
        assert!(matches!(
            fit_epoch(&mut m, &xs, &[true], None, &mut rng),
            Err(TmError::LengthMismatch { .. })
        ));
        let wrong = vec![LiteralVector::from_bits(&[1, 0])];
        assert!(matches!(
            fit_epoch(&mut m, &wrong, &[true], None, &mut rng),
            Err(TmError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn epochs_are_deterministic_with_and_without_type_iii() {
        let (xs, ys) = data(300, 4);
        for type3 in [false, true] {
            let run = || {
                let mut m = TmModel::new(config(), 4).unwrap();
                let mut bank = CsiaBank::new(&m, CsiaConfig::new(6, 20.0)).unwrap();
                let mut rng = ChaCha8Rng::seed_from_u64(8);
                for _ in 0..5 {
                    fit_epoch(&mut m, &xs, &ys, type3.then_some(&mut bank), &mut rng).unwrap();
                }
                (m, bank)
            };
            assert_eq!(run(), run());
        }
    }

    #[test]
    fn bank_matches_include_set_after_every_sample() {
        let (xs, ys) = data(400, 6);
        for mode in [PruneMode::Reset, PruneMode::Hold] {
            let mut m = TmModel::new(config(), 4).unwrap();
            let mut bank = CsiaBank::new(
                &m,
                CsiaConfig {
                    ia_state_bits: 4,
                    d: 5.0,
                    prune_mode: mode,
                },
            )
            .unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            for (x, &y) in xs.iter().zip(&ys) {
                fit_epoch(&mut m, std::slice::from_ref(x), &[y], Some(&mut bank), &mut rng).unwrap();
                assert!(bank.covers(&m));
            }
        }
    }

    #[test]
    fn learns_with_type_iii_enabled() {
        let (xs, ys) = data(1000, 12);
        let mut m = TmModel::new(config(), 4).unwrap();
        let mut bank = CsiaBank::new(&m, CsiaConfig::new(8, 100.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            fit_epoch(&mut m, &xs, &ys, Some(&mut bank), &mut rng).unwrap();
        }
        assert!(accuracy(&m, &xs, &ys).unwrap() > 0.99);
    }
}
