//! Vanilla Tsetlin Machine: clause bank, automaton states, evaluation and
//! voting. Feedback lives in [`feedback`], persistence in [`io`] and the
//! human-readable rule dump in [`rules`].
//!
//! Literal `2i` is `X_i`, literal `2i + 1` is `NOT X_i`. Every clause keeps
//! its TA states alongside a packed include mask so evaluation is a handful
//! of word operations.

pub mod feedback;
pub mod io;
pub mod rules;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use feedback::{Feedback, FeedbackTrace};

#[derive(Debug, Error)]
pub enum TmError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("input has {found} features, model expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{samples} samples but {labels} labels")]
    LengthMismatch { samples: usize, labels: usize },
    #[error("literal {literal} is not included in clause {clause}")]
    LiteralNotIncluded { clause: usize, literal: usize },
    #[error("model format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Hyperparameters of a single-output TM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TmConfig {
    pub num_clauses: usize,
    /// Voting threshold `T`.
    pub threshold: f64,
    /// Specificity `s`.
    pub specificity: f64,
    pub ta_state_bits: u32,
    pub weighted: bool,
    #[serde(default)]
    pub boost_true_positive: bool,
    #[serde(default)]
    pub seed: u64,
}

impl Default for TmConfig {
    fn default() -> Self {
        Self {
            num_clauses: 20,
            threshold: 10.0,
            specificity: 3.9,
            ta_state_bits: 8,
            weighted: false,
            boost_true_positive: false,
            seed: 0,
        }
    }
}

impl TmConfig {
    pub fn validate(&self) -> Result<(), TmError> {
        let bad = |m: String| Err(TmError::InvalidConfig(m));
        if self.num_clauses == 0 || self.num_clauses % 2 != 0 {
            return bad(format!("num_clauses must be even and positive, got {}", self.num_clauses));
        }
        if !(self.threshold > 0.0 && self.threshold.is_finite()) {
            return bad(format!("threshold T must be positive, got {}", self.threshold));
        }
        if !(self.specificity > 1.0 && self.specificity.is_finite()) {
            return bad(format!("specificity s must exceed 1, got {}", self.specificity));
        }
        if !(2..=MAX_STATE_BITS).contains(&self.ta_state_bits) {
            return bad(format!(
                "ta_state_bits must be in [2, {MAX_STATE_BITS}], got {}",
                self.ta_state_bits
            ));
        }
        Ok(())
    }

    /// Highest TA state, `2^bits`.
    pub fn max_state(&self) -> u32 {
        1u32 << self.ta_state_bits
    }

    /// Last exclude state, `2^(bits-1)`; fresh TAs start here.
    pub fn boundary(&self) -> u32 {
        1u32 << (self.ta_state_bits - 1)
    }
}

/// Automaton states are stored as `u32` in `[1, 2^bits]`.
pub const MAX_STATE_BITS: u32 = 31;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn sign(self) -> i8 {
        match self {
            Polarity::Positive => 1,
            Polarity::Negative => -1,
        }
    }

    /// Class this polarity votes for.
    pub fn predicts(self) -> bool {
        self == Polarity::Positive
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// Empty clauses output 1 so they can still receive feedback.
    Train,
    /// Empty clauses output 0.
    Infer,
}

pub(crate) fn word_count(literals: usize) -> usize {
    literals.div_ceil(64)
}

/// An input vector expanded into its `2F` literal truth values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiteralVector {
    words: Vec<u64>,
    features: usize,
}

impl LiteralVector {
    /// Nonzero entries count as 1.
    pub fn from_bits(x: &[u8]) -> Self {
        let mut words = vec![0u64; word_count(2 * x.len())];
        for (i, &b) in x.iter().enumerate() {
            let lit = 2 * i + usize::from(b == 0);
            words[lit / 64] |= 1 << (lit % 64);
        }
        Self {
            words,
            features: x.len(),
        }
    }

    pub fn from_bools(x: &[bool]) -> Self {
        let mut words = vec![0u64; word_count(2 * x.len())];
        for (i, &b) in x.iter().enumerate() {
            let lit = 2 * i + usize::from(!b);
            words[lit / 64] |= 1 << (lit % 64);
        }
        Self {
            words,
            features: x.len(),
        }
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn literal_count(&self) -> usize {
        2 * self.features
    }

    pub fn is_true(&self, literal: usize) -> bool {
        (self.words[literal / 64] >> (literal % 64)) & 1 == 1
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }
}

/// One conjunctive clause.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    polarity: Polarity,
    weight: u32,
    ta_states: Vec<u32>,
    include: Vec<u64>,
}

impl Clause {
    fn new(polarity: Polarity, literals: usize, initial: u32) -> Self {
        Self {
            polarity,
            weight: 1,
            ta_states: vec![initial; literals],
            include: vec![0; word_count(literals)],
        }
    }

    pub fn polarity(&self) -> Polarity {
        self.polarity
    }

    pub fn weight(&self) -> u32 {
        self.weight
    }

    pub fn ta_states(&self) -> &[u32] {
        &self.ta_states
    }

    pub fn ta_state(&self, literal: usize) -> u32 {
        self.ta_states[literal]
    }

    pub fn is_included(&self, literal: usize) -> bool {
        (self.include[literal / 64] >> (literal % 64)) & 1 == 1
    }

    pub fn include_words(&self) -> &[u64] {
        &self.include
    }

    pub fn included_count(&self) -> usize {
        self.include.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.include.iter().all(|&w| w == 0)
    }

    pub fn included_literals(&self) -> impl Iterator<Item = usize> + '_ {
        iter_bits(&self.include)
    }

    /// Conjunction of the included literals.
    pub fn evaluate(&self, x: &LiteralVector, mode: EvalMode) -> bool {
        if self.is_empty() {
            return mode == EvalMode::Train;
        }
        self.include
            .iter()
            .zip(&x.words)
            .all(|(&inc, &lit)| inc & !lit == 0)
    }

    fn set_state(&mut self, literal: usize, state: u32, boundary: u32) {
        self.ta_states[literal] = state;
        let bit = 1u64 << (literal % 64);
        if state > boundary {
            self.include[literal / 64] |= bit;
        } else {
            self.include[literal / 64] &= !bit;
        }
    }

    #[inline]
    fn increment(&mut self, literal: usize, max: u32, boundary: u32) {
        let s = self.ta_states[literal];
        if s < max {
            self.ta_states[literal] = s + 1;
            if s == boundary {
                self.include[literal / 64] |= 1u64 << (literal % 64);
            }
        }
    }

    #[inline]
    fn decrement(&mut self, literal: usize, boundary: u32) {
        let s = self.ta_states[literal];
        if s > 1 {
            self.ta_states[literal] = s - 1;
            if s == boundary + 1 {
                self.include[literal / 64] &= !(1u64 << (literal % 64));
            }
        }
    }
}

/// Iterates the positions of set bits.
pub(crate) fn iter_bits(words: &[u64]) -> impl Iterator<Item = usize> + '_ {
    words.iter().enumerate().flat_map(|(w, &word)| {
        let mut rest = word;
        std::iter::from_fn(move || {
            if rest == 0 {
                return None;
            }
            let b = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(w * 64 + b)
        })
    })
}

/// A clause bank with its configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct TmModel {
    config: TmConfig,
    feature_count: usize,
    clauses: Vec<Clause>,
}

impl TmModel {
    /// Fresh model: even-indexed clauses positive, odd negative, every TA at
    /// the exclude boundary.
    pub fn new(config: TmConfig, feature_count: usize) -> Result<Self, TmError> {
        config.validate()?;
        if feature_count == 0 {
            return Err(TmError::InvalidConfig("feature_count must be positive".into()));
        }
        let clauses = (0..config.num_clauses)
            .map(|j| {
                let polarity = if j % 2 == 0 {
                    Polarity::Positive
                } else {
                    Polarity::Negative
                };
                Clause::new(polarity, 2 * feature_count, config.boundary())
            })
            .collect();
        Ok(Self {
            config,
            feature_count,
            clauses,
        })
    }

    pub fn config(&self) -> &TmConfig {
        &self.config
    }

    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    pub fn literal_count(&self) -> usize {
        2 * self.feature_count
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn clause(&self, j: usize) -> &Clause {
        &self.clauses[j]
    }

    /// Sets one TA state, saturated into `[1, 2^bits]`.
    pub fn set_ta_state(&mut self, clause: usize, literal: usize, state: u32) {
        let state = state.clamp(1, self.config.max_state());
        let boundary = self.config.boundary();
        self.clauses[clause].set_state(literal, state, boundary);
    }

    /// Convenience for tests and hand-built banks: include exactly `literals`.
    pub fn set_clause_literals(&mut self, clause: usize, literals: &[usize]) {
        let boundary = self.config.boundary();
        for lit in 0..self.literal_count() {
            let state = if literals.contains(&lit) { boundary + 1 } else { boundary };
            self.clauses[clause].set_state(lit, state, boundary);
        }
    }

    pub fn set_weight(&mut self, clause: usize, weight: u32) {
        self.clauses[clause].weight = weight.max(1);
    }

    pub(crate) fn check_dims(&self, features: usize) -> Result<(), TmError> {
        if features != self.feature_count {
            return Err(TmError::DimensionMismatch {
                expected: self.feature_count,
                found: features,
            });
        }
        Ok(())
    }

    pub fn encode(&self, x: &[u8]) -> Result<LiteralVector, TmError> {
        self.check_dims(x.len())?;
        Ok(LiteralVector::from_bits(x))
    }

    pub fn clause_eval(&self, clause: usize, x: &LiteralVector, mode: EvalMode) -> Result<bool, TmError> {
        self.check_dims(x.features())?;
        Ok(self.clauses[clause].evaluate(x, mode))
    }

    /// Weighted positive votes minus weighted negative votes, infer mode.
    pub fn vote_sum(&self, x: &LiteralVector) -> Result<i64, TmError> {
        self.check_dims(x.features())?;
        Ok(self.vote_sum_unchecked(x))
    }

    pub(crate) fn vote_sum_unchecked(&self, x: &LiteralVector) -> i64 {
        self.clauses
            .iter()
            .filter(|c| c.evaluate(x, EvalMode::Infer))
            .map(|c| i64::from(c.polarity.sign()) * i64::from(c.weight))
            .sum()
    }

    /// 1 iff the vote sum is non-negative.
    pub fn classify(&self, x: &LiteralVector) -> Result<bool, TmError> {
        Ok(self.vote_sum(x)? >= 0)
    }

    pub fn total_included(&self) -> usize {
        self.clauses.iter().map(Clause::included_count).sum()
    }

    /// Mean included literals over all clauses, empty ones included.
    pub fn mean_literals_per_clause(&self) -> f64 {
        self.total_included() as f64 / self.clauses.len() as f64
    }
}
