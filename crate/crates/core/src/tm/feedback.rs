//! Type I and Type II feedback.
//!
//! For target `y`, the clamped vote `v` sets the activation probability
//! `(T - v) / 2T` (y = 1) or `(T + v) / 2T` (y = 0). Activated clauses whose
//! polarity votes for `y` get Type I feedback, the others Type II.
//!
//! | feedback | clause | effect                                                      |
//! |----------|--------|-------------------------------------------------------------|
//! | Type I   | 1      | true literals `+1` w.p. `(s-1)/s`, false literals `-1` w.p. `1/s`, weight `+1` |
//! | Type I   | 0      | every literal `-1` w.p. `1/s`                               |
//! | Type II  | 1      | excluded false literals `+1`, weight `-1` (floor 1)          |
//! | Type II  | 0      | nothing                                                     |

use rand::Rng;

use super::{iter_bits, EvalMode, LiteralVector, TmError, TmModel};
use crate::sampling::Bernoulli;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feedback {
    TypeI { clause_output: bool },
    TypeII { clause_output: bool },
}

/// Which clauses received which feedback for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackTrace {
    pub clamped_vote: f64,
    pub activation_probability: f64,
    pub feedback: Vec<Option<Feedback>>,
}

impl TmModel {
    /// Applies Type I/II feedback for one labelled sample.
    pub fn fit_sample<R: Rng + ?Sized>(
        &mut self,
        x: &LiteralVector,
        y: bool,
        rng: &mut R,
    ) -> Result<FeedbackTrace, TmError> {
        self.check_dims(x.features())?;
        let mut feedback = vec![None; self.clauses.len()];
        let (clamped_vote, activation_probability) = self.feedback_step(x, y, rng, None, Some(&mut feedback));
        Ok(FeedbackTrace {
            clamped_vote,
            activation_probability,
            feedback,
        })
    }

    /// Shared update path. `held[j]` masks literals whose TAs may not move
    /// toward inclusion; `trace` records per-clause feedback when present.
    pub(crate) fn feedback_step<R: Rng + ?Sized>(
        &mut self,
        x: &LiteralVector,
        y: bool,
        rng: &mut R,
        held: Option<&[Vec<u64>]>,
        mut trace: Option<&mut Vec<Option<Feedback>>>,
    ) -> (f64, f64) {
        let t = self.config.threshold;
        let v = (self.vote_sum_unchecked(x) as f64).clamp(-t, t);
        let p_activate = if y { (t - v) / (2.0 * t) } else { (t + v) / (2.0 * t) };
        if p_activate <= 0.0 {
            return (v, p_activate);
        }

        let s = self.config.specificity;
        let forget = Bernoulli::new(1.0 / s);
        // Complement of the include-reinforcement probability.
        let skip_memorize = Bernoulli::new(if self.config.boost_true_positive { 0.0 } else { 1.0 / s });
        let max = self.config.max_state();
        let boundary = self.config.boundary();
        let literals = self.literal_count();
        let weighted = self.config.weighted;

        for (j, clause) in self.clauses.iter_mut().enumerate() {
            if rng.gen::<f64>() >= p_activate {
                continue;
            }
            let output = clause.evaluate(x, EvalMode::Train);
            let held_j = held.map(|h| h[j].as_slice());
            let is_held = |lit: usize| held_j.is_some_and(|h| (h[lit / 64] >> (lit % 64)) & 1 == 1);

            if clause.polarity.predicts() == y {
                if output {
                    if weighted {
                        clause.weight = clause.weight.saturating_add(1);
                    }
                    let mut next_skip = skip_memorize.gap(rng);
                    for (k, lit) in iter_bits(&x.words).enumerate() {
                        if k == next_skip {
                            next_skip = k.saturating_add(1).saturating_add(skip_memorize.gap(rng));
                            continue;
                        }
                        if !is_held(lit) {
                            clause.increment(lit, max, boundary);
                        }
                    }
                    forget.for_each(literals, rng, |lit| {
                        if !x.is_true(lit) {
                            clause.decrement(lit, boundary);
                        }
                    });
                } else {
                    forget.for_each(literals, rng, |lit| clause.decrement(lit, boundary));
                }
                if let Some(tr) = trace.as_deref_mut() {
                    tr[j] = Some(Feedback::TypeI { clause_output: output });
                }
            } else {
                if output {
                    if weighted && clause.weight > 1 {
                        clause.weight -= 1;
                    }
                    for w in 0..clause.include.len() {
                        let mut candidates = !x.words[w] & !clause.include[w];
                        if let Some(h) = held_j {
                            candidates &= !h[w];
                        }
                        if w == clause.include.len() - 1 && literals % 64 != 0 {
                            candidates &= (1u64 << (literals % 64)) - 1;
                        }
                        while candidates != 0 {
                            let b = candidates.trailing_zeros() as usize;
                            candidates &= candidates - 1;
                            clause.increment(w * 64 + b, max, boundary);
                        }
                    }
                }
                if let Some(tr) = trace.as_deref_mut() {
                    tr[j] = Some(Feedback::TypeII { clause_output: output });
                }
            }
        }
        (v, p_activate)
    }
}
