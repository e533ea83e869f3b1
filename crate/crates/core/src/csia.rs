//! Type III feedback: Context-Specific Independence Automata.
//!
//! Every included literal of every clause owns a CS-IA with states
//! `1..=2N`. States `<= N` mean Prune, states `> N` mean Keep, and fresh
//! automata start at `2N`. Each automaton alternates between two
//! scenarios:
//!
//! * **Step 1**: the clause fires (so the literal is true). The state goes up
//!   when the target matches the clause's class, down otherwise.
//! * **Step 2**: every *other* included literal is true, whatever the value
//!   of this one. The state goes down when the target matches, up otherwise.
//!   After the update the literal is pruned if the state is `<= N`.
//!
//! Both steps also drift down by one with probability `1/d`. A sample that
//! only satisfies the scenario the automaton is not waiting for is ignored.
//!
//! [`PruneMode`] selects what happens to a pruned literal. `Reset` drops the
//! automaton and leaves the literal at the exclude boundary of its TA.
//! `Hold` keeps the automaton running on the pruned literal. Type I/II
//! cannot pull the literal back in until its CS-IA climbs back to `2N`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::tm::{iter_bits, word_count, LiteralVector, TmError, TmModel, MAX_STATE_BITS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PruneMode {
    Reset,
    #[default]
    Hold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsiaConfig {
    /// Total states `2N = 2^ia_state_bits`.
    pub ia_state_bits: u32,
    /// Drift divisor; drift fires with probability `1/d`.
    pub d: f64,
    #[serde(default)]
    pub prune_mode: PruneMode,
}

impl CsiaConfig {
    pub fn new(ia_state_bits: u32, d: f64) -> Self {
        Self {
            ia_state_bits,
            d,
            prune_mode: PruneMode::default(),
        }
    }

    pub fn validate(&self) -> Result<(), TmError> {
        if !(2..=MAX_STATE_BITS).contains(&self.ia_state_bits) {
            return Err(TmError::InvalidConfig(format!(
                "ia_state_bits must be in [2, {MAX_STATE_BITS}], got {}",
                self.ia_state_bits
            )));
        }
        if self.d.is_nan() || self.d <= 1.0 {
            return Err(TmError::InvalidConfig(format!("d must exceed 1, got {}", self.d)));
        }
        Ok(())
    }

    /// Prune threshold `N`.
    pub fn n(&self) -> u32 {
        1 << (self.ia_state_bits - 1)
    }

    /// Initial and maximal state `2N`.
    pub fn max_state(&self) -> u32 {
        1 << self.ia_state_bits
    }

    pub fn drift_probability(&self) -> f64 {
        1.0 / self.d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    AwaitStep1,
    AwaitStep2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    Step1,
    Step2,
}

impl Phase {
    pub fn awaits(self) -> Scenario {
        match self {
            Phase::AwaitStep1 => Scenario::Step1,
            Phase::AwaitStep2 => Scenario::Step2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsiaCell {
    pub state: u32,
    pub phase: Phase,
}

impl CsiaCell {
    pub fn fresh(config: &CsiaConfig) -> Self {
        Self {
            state: config.max_state(),
            phase: Phase::AwaitStep1,
        }
    }

    /// Applies one scenario update and returns the prune signal (only Step 2
    /// can raise it).
    ///
    /// Panics if `scenario` is not the one this cell is waiting for.
    pub fn update<R: Rng + ?Sized>(
        &mut self,
        scenario: Scenario,
        y_matches: bool,
        rng: &mut R,
        config: &CsiaConfig,
    ) -> bool {
        assert_eq!(scenario, self.phase.awaits(), "CS-IA fed a scenario it was not waiting for");
        let max = config.max_state();
        let up = match scenario {
            Scenario::Step1 => y_matches,
            Scenario::Step2 => !y_matches,
        };
        self.state = if up { (self.state + 1).min(max) } else { self.state.saturating_sub(1).max(1) };
        if rng.gen::<f64>() < config.drift_probability() {
            self.state = self.state.saturating_sub(1).max(1);
        }
        match scenario {
            Scenario::Step1 => {
                self.phase = Phase::AwaitStep2;
                false
            }
            Scenario::Step2 => {
                self.phase = Phase::AwaitStep1;
                self.state <= config.n()
            }
        }
    }
}

/// Which scenario, if any, a sample triggers for a cell.
///
/// `rest_satisfied`: every other included literal of the clause is true.
/// `literal_true`: the cell's own literal is true.
pub fn scenario_trigger(phase: Phase, rest_satisfied: bool, literal_true: bool) -> Option<Scenario> {
    match phase {
        Phase::AwaitStep1 if rest_satisfied && literal_true => Some(Scenario::Step1),
        Phase::AwaitStep2 if rest_satisfied => Some(Scenario::Step2),
        _ => None,
    }
}

/// One applied CS-IA update, for inspection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UpdateEvent {
    pub clause: usize,
    pub literal: usize,
    pub scenario: Scenario,
    pub state_after: u32,
}

/// All CS-IA cells of a model.
#[derive(Debug, Clone)]
pub struct CsiaBank {
    config: CsiaConfig,
    literals: usize,
    cells: Vec<Vec<CsiaCell>>,
    present: Vec<Vec<u64>>,
    held: Vec<Vec<u64>>,
}

impl CsiaBank {
    /// One fresh cell per currently included literal.
    pub fn new(model: &TmModel, config: CsiaConfig) -> Result<Self, TmError> {
        config.validate()?;
        let literals = model.literal_count();
        let words = word_count(literals);
        let clauses = model.clauses().len();
        let mut bank = Self {
            cells: vec![vec![CsiaCell::fresh(&config); literals]; clauses],
            config,
            literals,
            present: vec![vec![0; words]; clauses],
            held: vec![vec![0; words]; clauses],
        };
        bank.sync(model);
        Ok(bank)
    }

    pub fn config(&self) -> &CsiaConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.present
            .iter()
            .flatten()
            .map(|w| w.count_ones() as usize)
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, clause: usize, literal: usize) -> Option<&CsiaCell> {
        bit(&self.present[clause], literal).then(|| &self.cells[clause][literal])
    }

    /// Pruned literal whose automaton is still running (hold mode only).
    pub fn is_held(&self, clause: usize, literal: usize) -> bool {
        bit(&self.held[clause], literal)
    }

    pub fn held_count(&self) -> usize {
        self.held.iter().flatten().map(|w| w.count_ones() as usize).sum()
    }

    pub(crate) fn held_masks(&self) -> &[Vec<u64>] {
        &self.held
    }

    /// `((clause, literal), cell, held)` in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), CsiaCell, bool)> + '_ {
        self.present.iter().enumerate().flat_map(move |(j, words)| {
            iter_bits(words).map(move |lit| ((j, lit), self.cells[j][lit], bit(&self.held[j], lit)))
        })
    }

    /// Rebuilds a bank from serialized cells.
    pub fn from_cells(
        model: &TmModel,
        config: CsiaConfig,
        cells: impl IntoIterator<Item = ((usize, usize), CsiaCell, bool)>,
    ) -> Result<Self, TmError> {
        config.validate()?;
        let literals = model.literal_count();
        let words = word_count(literals);
        let clauses = model.clauses().len();
        let mut bank = Self {
            cells: vec![vec![CsiaCell::fresh(&config); literals]; clauses],
            config,
            literals,
            present: vec![vec![0; words]; clauses],
            held: vec![vec![0; words]; clauses],
        };
        for ((j, lit), cell, held) in cells {
            if j >= clauses || lit >= literals {
                return Err(TmError::Format(format!("cell ({j}, {lit}) out of range")));
            }
            if cell.state == 0 || cell.state > bank.config.max_state() {
                return Err(TmError::Format(format!("cell ({j}, {lit}) state {} out of range", cell.state)));
            }
            if held == model.clause(j).is_included(lit) {
                return Err(TmError::Format(format!(
                    "cell ({j}, {lit}) inconsistent with the clause include set"
                )));
            }
            bank.cells[j][lit] = cell;
            set_bit(&mut bank.present[j], lit, true);
            set_bit(&mut bank.held[j], lit, held);
        }
        if !bank.covers(model) {
            return Err(TmError::Format("included literal without a CS-IA cell".into()));
        }
        Ok(bank)
    }

    /// Cells exist exactly for included literals plus held ones.
    pub fn covers(&self, model: &TmModel) -> bool {
        model.clauses().iter().enumerate().all(|(j, c)| {
            c.include_words()
                .iter()
                .zip(&self.present[j])
                .zip(&self.held[j])
                .all(|((&inc, &pres), &held)| pres == inc | held && inc & held == 0)
        })
    }

    /// Creates fresh cells for newly included literals and drops cells of
    /// literals that Type I/II excluded.
    pub fn sync(&mut self, model: &TmModel) {
        let fresh = CsiaCell::fresh(&self.config);
        for (j, clause) in model.clauses().iter().enumerate() {
            for (w, &inc) in clause.include_words().iter().enumerate() {
                // A held literal can only be included through a direct state edit.
                let reincluded = inc & self.held[j][w];
                self.held[j][w] &= !inc;
                let held = self.held[j][w];
                let pres = self.present[j][w];
                let mut new = (inc & !pres) | reincluded;
                while new != 0 {
                    let b = new.trailing_zeros() as usize;
                    new &= new - 1;
                    self.cells[j][w * 64 + b] = fresh;
                }
                self.present[j][w] = inc | held;
            }
        }
    }

    fn drop_cell(&mut self, clause: usize, literal: usize) {
        set_bit(&mut self.present[clause], literal, false);
        set_bit(&mut self.held[clause], literal, false);
    }
}

// Slots of dropped cells keep stale values, so only live cells take part.
impl PartialEq for CsiaBank {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.literals == other.literals
            && self.present == other.present
            && self.held == other.held
            && self.iter().eq(other.iter())
    }
}

fn bit(words: &[u64], i: usize) -> bool {
    (words[i / 64] >> (i % 64)) & 1 == 1
}

fn set_bit(words: &mut [u64], i: usize, on: bool) {
    if on {
        words[i / 64] |= 1 << (i % 64);
    } else {
        words[i / 64] &= !(1 << (i % 64));
    }
}

/// Removes an included literal from its clause: the TA drops to the exclude
/// boundary, and the cell is dropped (reset) or kept running (hold).
pub fn prune_literal(model: &mut TmModel, bank: &mut CsiaBank, clause: usize, literal: usize) -> Result<(), TmError> {
    if !model.clause(clause).is_included(literal) {
        return Err(TmError::LiteralNotIncluded { clause, literal });
    }
    let boundary = model.config().boundary();
    model.set_ta_state(clause, literal, boundary);
    match bank.config.prune_mode {
        PruneMode::Reset => bank.drop_cell(clause, literal),
        PruneMode::Hold => set_bit(&mut bank.held[clause], literal, true),
    }
    Ok(())
}

/// Type III feedback for one sample; returns the pruned `(clause, literal)`
/// pairs.
pub fn type_iii_feedback<R: Rng + ?Sized>(
    model: &mut TmModel,
    bank: &mut CsiaBank,
    x: &LiteralVector,
    y: bool,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>, TmError> {
    model.check_dims(x.features())?;
    Ok(type_iii_step(model, bank, x, y, rng, None))
}

/// Like [`type_iii_feedback`] but also reports every applied update.
pub fn type_iii_feedback_traced<R: Rng + ?Sized>(
    model: &mut TmModel,
    bank: &mut CsiaBank,
    x: &LiteralVector,
    y: bool,
    rng: &mut R,
) -> Result<(Vec<(usize, usize)>, Vec<UpdateEvent>), TmError> {
    model.check_dims(x.features())?;
    let mut log = Vec::new();
    let pruned = type_iii_step(model, bank, x, y, rng, Some(&mut log));
    Ok((pruned, log))
}

pub(crate) fn type_iii_step<R: Rng + ?Sized>(
    model: &mut TmModel,
    bank: &mut CsiaBank,
    x: &LiteralVector,
    y: bool,
    rng: &mut R,
    mut log: Option<&mut Vec<UpdateEvent>>,
) -> Vec<(usize, usize)> {
    let config = bank.config.clone();
    let max = config.max_state();
    let mut pruned = Vec::new();
    let mut released = Vec::new();
    let xw = x.words();

    for (j, clause) in model.clauses().iter().enumerate() {
        if bank.present[j].iter().all(|&w| w == 0) {
            continue;
        }
        let inc = clause.include_words();
        let mut unsat = 0u32;
        let mut lone = 0usize;
        for (w, (&i, &l)) in inc.iter().zip(xw).enumerate() {
            let u = i & !l;
            if u != 0 {
                unsat += u.count_ones();
                lone = w * 64 + u.trailing_zeros() as usize;
                if unsat > 1 {
                    break;
                }
            }
        }
        if unsat > 1 {
            continue;
        }
        let y_matches = clause.polarity().predicts() == y;
        let mut visit = |lit: usize, literal_true: bool, held: bool, rng: &mut R| {
            let cell = &mut bank.cells[j][lit];
            let Some(scenario) = scenario_trigger(cell.phase, true, literal_true) else {
                return;
            };
            let prune = cell.update(scenario, y_matches, rng, &config);
            if let Some(log) = log.as_deref_mut() {
                log.push(UpdateEvent {
                    clause: j,
                    literal: lit,
                    scenario,
                    state_after: cell.state,
                });
            }
            if held {
                if cell.state >= max {
                    released.push((j, lit));
                }
            } else if prune {
                pruned.push((j, lit));
            }
        };
        if unsat == 1 {
            // Only the lone false literal sees the rest of its clause satisfied.
            visit(lone, false, false, rng);
            continue;
        }
        for w in 0..bank.present[j].len() {
            let mut bits = bank.present[j][w];
            let held = bank.held[j][w];
            while bits != 0 {
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                visit(w * 64 + b, (xw[w] >> b) & 1 == 1, (held >> b) & 1 == 1, rng);
            }
        }
    }

    for &(j, lit) in &released {
        bank.drop_cell(j, lit);
    }
    for &(j, lit) in &pruned {
        prune_literal(model, bank, j, lit).expect("pruned literal was included");
    }
    pruned
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tm::TmConfig;
    use rand::rngs::mock::StepRng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Never fires drift: `gen::<f64>()` from this is just below 1.
    fn no_drift() -> StepRng {
        StepRng::new(u64::MAX, 0)
    }

    fn model(features: usize) -> TmModel {
        TmModel::new(
            TmConfig {
                num_clauses: 2,
                ..TmConfig::default()
            },
            features,
        )
        .unwrap()
    }

    fn reset_config(bits: u32) -> CsiaConfig {
        CsiaConfig {
            ia_state_bits: bits,
            d: 200.0,
            prune_mode: PruneMode::Reset,
        }
    }

    #[test]
    fn config_derived_values() {
        let c = CsiaConfig::new(10, 226.18);
        assert_eq!(c.max_state(), 1024);
        assert_eq!(c.n(), 512);
        assert!(CsiaConfig::new(10, 1.0).validate().is_err());
        assert!(CsiaConfig::new(1, 5.0).validate().is_err());
    }

    #[test]
    fn init_bank_covers_included_literals() {
        let mut m = model(4);
        let empty = CsiaBank::new(&m, CsiaConfig::new(10, 100.0)).unwrap();
        assert!(empty.is_empty());
        m.set_clause_literals(0, &[0, 3, 6]);
        m.set_clause_literals(1, &[1]);
        let bank = CsiaBank::new(&m, CsiaConfig::new(10, 100.0)).unwrap();
        let scanned: usize = m
            .clauses()
            .iter()
            .map(|c| c.ta_states().iter().filter(|&&s| s > m.config().boundary()).count())
            .sum();
        assert_eq!(bank.len(), scanned);
        for ((_, _), cell, held) in bank.iter() {
            assert_eq!(cell, CsiaCell { state: 1024, phase: Phase::AwaitStep1 });
            assert!(!held);
        }
    }

    #[test]
    fn step1_saturates_at_top() {
        let cfg = CsiaConfig::new(10, 100.0);
        let mut cell = CsiaCell::fresh(&cfg);
        assert!(!cell.update(Scenario::Step1, true, &mut no_drift(), &cfg));
        assert_eq!(cell.state, 1024);
        assert_eq!(cell.phase, Phase::AwaitStep2);
    }

    #[test]
    fn step2_at_threshold_signals_prune() {
        let cfg = CsiaConfig::new(10, 100.0);
        let mut cell = CsiaCell {
            state: cfg.n() + 1,
            phase: Phase::AwaitStep2,
        };
        assert!(cell.update(Scenario::Step2, true, &mut no_drift(), &cfg));
        assert_eq!(cell.state, cfg.n());
        assert_eq!(cell.phase, Phase::AwaitStep1);
    }

    #[test]
    fn drift_fires_with_zero_draw() {
        let cfg = CsiaConfig::new(4, 2.0);
        let mut cell = CsiaCell { state: 10, phase: Phase::AwaitStep1 };
        // StepRng(0, 0) yields 0.0, always below 1/d.
        cell.update(Scenario::Step1, true, &mut StepRng::new(0, 0), &cfg);
        assert_eq!(cell.state, 10);
        cell.update(Scenario::Step2, false, &mut StepRng::new(0, 0), &cfg);
        assert_eq!(cell.state, 10);
        cell.update(Scenario::Step1, false, &mut StepRng::new(0, 0), &cfg);
        assert_eq!(cell.state, 8);
    }

    #[test]
    #[should_panic(expected = "not waiting for")]
    fn phase_mismatch_panics() {
        let cfg = CsiaConfig::new(4, 20.0);
        let mut cell = CsiaCell::fresh(&cfg);
        cell.update(Scenario::Step2, true, &mut no_drift(), &cfg);
    }

    #[test]
    fn lower_bound_saturates() {
        let cfg = CsiaConfig::new(2, 1.5);
        let mut cell = CsiaCell { state: 1, phase: Phase::AwaitStep1 };
        let mut rng = StepRng::new(0, 0);
        for _ in 0..10 {
            let s = cell.phase.awaits();
            cell.update(s, s == Scenario::Step2, &mut rng, &cfg);
            assert_eq!(cell.state, 1);
        }
    }

    /// Independent Monte Carlo of the walk: with `y_matches` a fair coin in
    /// both steps, the mean change per Step1+Step2 pair is `-2 p_d` away
    /// from the bounds.
    #[test]
    fn pure_drift_walk_matches_expectation() {
        let cfg = CsiaConfig::new(20, 25.0);
        let p_d = cfg.drift_probability();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let pairs = 100_000;
        let start = 1u32 << 18;
        let mut deltas = Vec::with_capacity(pairs);
        let mut cell = CsiaCell { state: start, phase: Phase::AwaitStep1 };
        for _ in 0..pairs {
            let before = cell.state as f64;
            let a: bool = rng.gen();
            cell.update(Scenario::Step1, a, &mut rng, &cfg);
            let b: bool = rng.gen();
            cell.update(Scenario::Step2, b, &mut rng, &cfg);
            deltas.push(cell.state as f64 - before);
        }
        let mean = deltas.iter().sum::<f64>() / pairs as f64;
        let var = deltas.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (pairs - 1) as f64;
        let se = (var / pairs as f64).sqrt();
        assert!((mean + 2.0 * p_d).abs() < 3.0 * se, "mean {mean}, expected {}", -2.0 * p_d);
    }

    #[test]
    fn type_iii_scenarios_follow_the_waiting_rule() {
        let mut m = model(2);
        m.set_clause_literals(0, &[0, 2]); // X1 AND X2
        let mut bank = CsiaBank::new(&m, reset_config(10)).unwrap();
        let mut rng = no_drift();

        // x = (0, 1): clause false, X1 waits for Step 1 -> nothing for X1.
        let x01 = LiteralVector::from_bits(&[0, 1]);
        let (_, log) = type_iii_feedback_traced(&mut m, &mut bank, &x01, true, &mut rng).unwrap();
        assert!(log.iter().all(|e| e.literal != 0));

        // x = (1, 1): clause fires; both cells take Step 1.
        let x11 = LiteralVector::from_bits(&[1, 1]);
        let (_, log) = type_iii_feedback_traced(&mut m, &mut bank, &x11, true, &mut rng).unwrap();
        assert_eq!(log.len(), 2);
        assert!(log.iter().all(|e| e.scenario == Scenario::Step1));
        assert_eq!(bank.get(0, 0).unwrap().phase, Phase::AwaitStep2);

        // x = (0, 1): X2 true, X1 ignored -> Step 2 for X1 only.
        let (_, log) = type_iii_feedback_traced(&mut m, &mut bank, &x01, true, &mut rng).unwrap();
        assert_eq!(
            log,
            vec![UpdateEvent { clause: 0, literal: 0, scenario: Scenario::Step2, state_after: 1023 }]
        );
        assert_eq!(bank.get(0, 0).unwrap().phase, Phase::AwaitStep1);
        assert_eq!(bank.get(0, 2).unwrap().phase, Phase::AwaitStep2);
    }

    #[test]
    fn clause_firing_while_awaiting_step2_counts_as_step2() {
        let mut m = model(2);
        m.set_clause_literals(0, &[0, 2]);
        let mut bank = CsiaBank::new(&m, reset_config(10)).unwrap();
        let x11 = LiteralVector::from_bits(&[1, 1]);
        let mut rng = no_drift();
        type_iii_feedback(&mut m, &mut bank, &x11, true, &mut rng).unwrap();
        let (_, log) = type_iii_feedback_traced(&mut m, &mut bank, &x11, true, &mut rng).unwrap();
        assert!(log.iter().all(|e| e.scenario == Scenario::Step2));
    }

    #[test]
    fn prune_removes_literal_and_cell() {
        let mut m = model(8);
        m.set_clause_literals(0, &[0, 14]); // X1 AND X8
        let mut bank = CsiaBank::new(&m, reset_config(6)).unwrap();
        prune_literal(&mut m, &mut bank, 0, 14).unwrap();
        assert_eq!(m.clause(0).included_literals().collect::<Vec<_>>(), vec![0]);
        assert!(bank.get(0, 14).is_none());
        assert_eq!(m.clause(0).ta_state(14), m.config().boundary());
        assert!(matches!(
            prune_literal(&mut m, &mut bank, 0, 14),
            Err(TmError::LiteralNotIncluded { .. })
        ));
        prune_literal(&mut m, &mut bank, 0, 0).unwrap();
        assert!(m.clause(0).is_empty());
        assert!(bank.covers(&m));
    }

    #[test]
    fn hold_mode_keeps_watching_pruned_literal() {
        let mut m = model(2);
        m.set_clause_literals(0, &[0, 2]);
        let cfg = CsiaConfig { ia_state_bits: 3, d: 1e9, prune_mode: PruneMode::Hold };
        let mut bank = CsiaBank::new(&m, cfg).unwrap();
        prune_literal(&mut m, &mut bank, 0, 2).unwrap();
        assert!(bank.is_held(0, 2));
        assert!(!m.clause(0).is_included(2));
        assert!(bank.covers(&m));
        // Clause is now {X1}. For the held X2, Step 1 needs X1 and X2 true.
        let mut rng = no_drift();
        let x10 = LiteralVector::from_bits(&[1, 0]);
        let (_, log) = type_iii_feedback_traced(&mut m, &mut bank, &x10, true, &mut rng).unwrap();
        assert!(log.iter().all(|e| e.literal != 2));
        // A literal whose presence keeps improving precision climbs back to
        // 2N and is released.
        let x11 = LiteralVector::from_bits(&[1, 1]);
        for _ in 0..40 {
            let cell = bank.get(0, 2);
            match cell.map(|c| c.phase) {
                Some(Phase::AwaitStep1) => {
                    type_iii_feedback(&mut m, &mut bank, &x11, true, &mut rng).unwrap();
                }
                Some(Phase::AwaitStep2) => {
                    type_iii_feedback(&mut m, &mut bank, &x10, false, &mut rng).unwrap();
                }
                None => break,
            }
        }
        assert!(bank.get(0, 2).is_none());
        assert!(!bank.is_held(0, 2));
    }

    #[test]
    fn sync_tracks_include_set() {
        let mut m = model(3);
        let mut bank = CsiaBank::new(&m, reset_config(8)).unwrap();
        m.set_clause_literals(1, &[1, 4]);
        bank.sync(&m);
        assert_eq!(bank.get(1, 4), Some(&CsiaCell::fresh(bank.config())));
        m.set_clause_literals(1, &[1]);
        bank.sync(&m);
        assert!(bank.get(1, 4).is_none());
        assert!(bank.covers(&m));
    }

    #[test]
    fn from_cells_validates() {
        let mut m = model(2);
        m.set_clause_literals(0, &[0]);
        let cfg = reset_config(4);
        let good = [((0, 0), CsiaCell { state: 9, phase: Phase::AwaitStep2 }, false)];
        let bank = CsiaBank::from_cells(&m, cfg.clone(), good).unwrap();
        assert_eq!(bank.get(0, 0).unwrap().state, 9);
        let missing: [((usize, usize), CsiaCell, bool); 0] = [];
        assert!(CsiaBank::from_cells(&m, cfg.clone(), missing).is_err());
        let bad_state = [((0, 0), CsiaCell { state: 99, phase: Phase::AwaitStep1 }, false)];
        assert!(CsiaBank::from_cells(&m, cfg, bad_state).is_err());
    }
}
