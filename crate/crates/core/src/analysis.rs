//! Metrics over a clause bank: how often each variable appears, how clauses
//! relate to a known Markov boundary, and when partial-boundary clauses
//! jointly cover the boundary.
//!
//! A variable appears in a clause when either of its literals is included.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::tm::{Clause, Polarity, TmModel};

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("boundary is empty")]
    EmptyBoundary,
    #[error("boundary variable `{0}` has no feature column")]
    UnmappedVariable(String),
}

/// Inclusion counts across clauses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiteralFrequency {
    /// Indexed by literal (`2i` = `X_i`, `2i + 1` = `NOT X_i`).
    pub per_literal: Vec<usize>,
    /// Clauses containing either literal of variable `i`.
    pub per_variable: Vec<usize>,
}

pub fn literal_frequency(model: &TmModel) -> LiteralFrequency {
    let f = model.feature_count();
    let mut per_literal = vec![0; 2 * f];
    let mut per_variable = vec![0; f];
    for clause in model.clauses() {
        let mut seen = vec![false; f];
        for lit in clause.included_literals() {
            per_literal[lit] += 1;
            seen[lit / 2] = true;
        }
        for (v, s) in seen.into_iter().enumerate() {
            per_variable[v] += usize::from(s);
        }
    }
    LiteralFrequency {
        per_literal,
        per_variable,
    }
}

/// Variables (feature indices) appearing in a clause.
pub fn clause_variables(clause: &Clause) -> BTreeSet<usize> {
    clause.included_literals().map(|l| l / 2).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClauseCategory {
    CompleteBoundaryNoisy,
    CompleteBoundaryClean,
    PartialBoundaryNoisy,
    PartialBoundaryClean,
}

impl ClauseCategory {
    pub const ALL: [ClauseCategory; 4] = [
        ClauseCategory::CompleteBoundaryNoisy,
        ClauseCategory::CompleteBoundaryClean,
        ClauseCategory::PartialBoundaryNoisy,
        ClauseCategory::PartialBoundaryClean,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_clean(self) -> bool {
        matches!(self, ClauseCategory::CompleteBoundaryClean | ClauseCategory::PartialBoundaryClean)
    }

    pub fn is_complete(self) -> bool {
        matches!(self, ClauseCategory::CompleteBoundaryNoisy | ClauseCategory::CompleteBoundaryClean)
    }

    pub fn label(self) -> &'static str {
        match self {
            ClauseCategory::CompleteBoundaryNoisy => "complete_noisy",
            ClauseCategory::CompleteBoundaryClean => "complete_clean",
            ClauseCategory::PartialBoundaryNoisy => "partial_noisy",
            ClauseCategory::PartialBoundaryClean => "partial_clean",
        }
    }
}

/// Category of a non-empty variable set; `None` for an empty one.
pub fn categorize(vars: &BTreeSet<usize>, boundary: &BTreeSet<usize>) -> Option<ClauseCategory> {
    if vars.is_empty() {
        return None;
    }
    let complete = boundary.is_subset(vars);
    let clean = vars.is_subset(boundary);
    Some(match (complete, clean) {
        (true, false) => ClauseCategory::CompleteBoundaryNoisy,
        (true, true) => ClauseCategory::CompleteBoundaryClean,
        (false, false) => ClauseCategory::PartialBoundaryNoisy,
        (false, true) => ClauseCategory::PartialBoundaryClean,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CategoryCounts {
    /// Both polarities pooled, in [`ClauseCategory::ALL`] order.
    pub pooled: [usize; 4],
    pub positive: [usize; 4],
    pub negative: [usize; 4],
}

impl CategoryCounts {
    pub fn get(&self, c: ClauseCategory) -> usize {
        self.pooled[c.index()]
    }

    pub fn total(&self) -> usize {
        self.pooled.iter().sum()
    }

    /// Clauses made of boundary variables only.
    pub fn clean(&self) -> usize {
        self.get(ClauseCategory::CompleteBoundaryClean) + self.get(ClauseCategory::PartialBoundaryClean)
    }
}

/// Maps boundary variable names onto feature indices.
pub fn boundary_features(boundary: &BTreeSet<String>, feature_names: &[String]) -> Result<BTreeSet<usize>, AnalysisError> {
    if boundary.is_empty() {
        return Err(AnalysisError::EmptyBoundary);
    }
    boundary
        .iter()
        .map(|b| {
            feature_names
                .iter()
                .position(|n| n == b)
                .ok_or_else(|| AnalysisError::UnmappedVariable(b.clone()))
        })
        .collect()
}

pub fn categorize_clauses(model: &TmModel, boundary: &BTreeSet<usize>) -> Result<CategoryCounts, AnalysisError> {
    if boundary.is_empty() {
        return Err(AnalysisError::EmptyBoundary);
    }
    let mut counts = CategoryCounts::default();
    for clause in model.clauses() {
        if let Some(c) = categorize(&clause_variables(clause), boundary) {
            counts.pooled[c.index()] += 1;
            match clause.polarity() {
                Polarity::Positive => counts.positive[c.index()] += 1,
                Polarity::Negative => counts.negative[c.index()] += 1,
            }
        }
    }
    Ok(counts)
}

/// True when the boundary variables of the partial-boundary clauses
/// together cover the whole boundary.
pub fn or_covered(clause_vars: &[BTreeSet<usize>], boundary: &BTreeSet<usize>) -> bool {
    let mut union = BTreeSet::new();
    for vars in clause_vars {
        if matches!(categorize(vars, boundary), Some(c) if !c.is_complete()) {
            union.extend(vars.intersection(boundary).copied());
        }
    }
    !boundary.is_empty() && boundary.is_subset(&union)
}

/// First epoch index whose clause sets are OR-covered.
pub fn or_coverage(history: &[Vec<BTreeSet<usize>>], boundary: &BTreeSet<usize>) -> Option<usize> {
    history.iter().position(|epoch| or_covered(epoch, boundary))
}

/// One row of the metrics history.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub accuracy: f64,
    pub mean_literals: f64,
    pub variable_frequency: Vec<usize>,
    /// Absent when no boundary is known (image experiments).
    pub categories: Option<CategoryCounts>,
    pub or_covered: bool,
}

impl EpochRecord {
    /// Snapshot of `model` after `epoch`.
    pub fn capture(model: &TmModel, epoch: usize, accuracy: f64, boundary: Option<&BTreeSet<usize>>) -> Self {
        let freq = literal_frequency(model);
        let (categories, covered) = match boundary {
            Some(b) if !b.is_empty() => {
                let vars: Vec<_> = model.clauses().iter().map(clause_variables).collect();
                (categorize_clauses(model, b).ok(), or_covered(&vars, b))
            }
            _ => (None, false),
        };
        Self {
            epoch,
            accuracy,
            mean_literals: model.mean_literals_per_clause(),
            variable_frequency: freq.per_variable,
            categories,
            or_covered: covered,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsHistory {
    pub feature_names: Vec<String>,
    pub records: Vec<EpochRecord>,
}

impl MetricsHistory {
    pub fn new(feature_names: Vec<String>) -> Self {
        Self {
            feature_names,
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, record: EpochRecord) {
        self.records.push(record);
    }

    /// First recorded epoch with OR coverage.
    pub fn or_epoch(&self) -> Option<usize> {
        self.records.iter().find(|r| r.or_covered).map(|r| r.epoch)
    }

    /// Mean clean-clause count over the last `window` records.
    pub fn trailing_clean_mean(&self, window: usize) -> Option<f64> {
        let tail: Vec<usize> = self
            .records
            .iter()
            .rev()
            .take(window.max(1))
            .filter_map(|r| r.categories.map(|c| c.clean()))
            .collect();
        (!tail.is_empty()).then(|| tail.iter().sum::<usize>() as f64 / tail.len() as f64)
    }

    /// Columns: epoch, accuracy, mean_literals, one `freq_<name>` per
    /// variable, the four pooled category counts, or_covered, then the
    /// polarity-split category counts.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,accuracy,mean_literals");
        for n in &self.feature_names {
            write!(out, ",freq_{n}").unwrap();
        }
        for c in ClauseCategory::ALL {
            write!(out, ",{}", c.label()).unwrap();
        }
        out.push_str(",or_covered");
        for pol in ["pos", "neg"] {
            for c in ClauseCategory::ALL {
                write!(out, ",{pol}_{}", c.label()).unwrap();
            }
        }
        out.push('\n');
        for r in &self.records {
            write!(out, "{},{:.6},{:.6}", r.epoch, r.accuracy, r.mean_literals).unwrap();
            for f in &r.variable_frequency {
                write!(out, ",{f}").unwrap();
            }
            let cats = |a: Option<[usize; 4]>, out: &mut String| {
                for i in 0..4 {
                    match a {
                        Some(a) => write!(out, ",{}", a[i]).unwrap(),
                        None => out.push(','),
                    }
                }
            };
            cats(r.categories.map(|c| c.pooled), &mut out);
            write!(out, ",{}", u8::from(r.or_covered)).unwrap();
            cats(r.categories.map(|c| c.positive), &mut out);
            cats(r.categories.map(|c| c.negative), &mut out);
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tm::TmConfig;

    fn set(v: &[usize]) -> BTreeSet<usize> {
        v.iter().copied().collect()
    }

    fn model(clauses: usize, features: usize) -> TmModel {
        TmModel::new(
            TmConfig {
                num_clauses: clauses,
                ..TmConfig::default()
            },
            features,
        )
        .unwrap()
    }

    /// Toy boundary X1..X7 as feature indices 0..7; X8 is index 7.
    fn toy_boundary() -> BTreeSet<usize> {
        (0..7).collect()
    }

    #[test]
    fn fresh_model_has_zero_frequencies() {
        let m = model(4, 8);
        let f = literal_frequency(&m);
        assert!(f.per_literal.iter().all(|&c| c == 0));
        assert!(f.per_variable.iter().all(|&c| c == 0));
    }

    #[test]
    fn hand_built_bank_tally() {
        let mut m = model(4, 3);
        m.set_clause_literals(0, &[0, 3]); // X1, NOT X2
        m.set_clause_literals(1, &[0, 1]); // X1, NOT X1
        m.set_clause_literals(2, &[5]); // NOT X3
        let f = literal_frequency(&m);
        assert_eq!(f.per_literal, vec![2, 1, 0, 1, 0, 1]);
        assert_eq!(f.per_variable, vec![2, 1, 1]);
    }

    #[test]
    fn categories_by_definition() {
        let b = toy_boundary();
        assert_eq!(categorize(&set(&[0, 1, 2, 3, 4, 5, 6]), &b), Some(ClauseCategory::CompleteBoundaryClean));
        assert_eq!(categorize(&set(&[0, 1, 2, 3, 4, 5, 6, 7]), &b), Some(ClauseCategory::CompleteBoundaryNoisy));
        assert_eq!(categorize(&set(&[0, 7]), &b), Some(ClauseCategory::PartialBoundaryNoisy));
        assert_eq!(categorize(&set(&[0, 2]), &b), Some(ClauseCategory::PartialBoundaryClean));
        assert_eq!(categorize(&set(&[7]), &b), Some(ClauseCategory::PartialBoundaryNoisy));
        assert_eq!(categorize(&set(&[]), &b), None);
    }

    #[test]
    fn counts_skip_empty_clauses_and_split_polarity() {
        let mut m = model(4, 8);
        m.set_clause_literals(0, &[0, 14]); // X1, X8: partial noisy, positive
        m.set_clause_literals(1, &[0, 2, 4, 6, 8, 10, 12]); // complete clean, negative
        let c = categorize_clauses(&m, &toy_boundary()).unwrap();
        assert_eq!(c.total(), 2);
        assert_eq!(c.get(ClauseCategory::PartialBoundaryNoisy), 1);
        assert_eq!(c.negative[ClauseCategory::CompleteBoundaryClean as usize], 1);
        assert_eq!(c.clean(), 1);
        assert_eq!(categorize_clauses(&m, &BTreeSet::new()), Err(AnalysisError::EmptyBoundary));
    }

    #[test]
    fn boundary_mapping() {
        let names: Vec<String> = (1..=8).map(|i| format!("X{i}")).collect();
        let b: BTreeSet<String> = ["X1", "X7"].iter().map(|s| s.to_string()).collect();
        assert_eq!(boundary_features(&b, &names).unwrap(), set(&[0, 6]));
        let bad: BTreeSet<String> = ["Q".to_string()].into();
        assert_eq!(boundary_features(&bad, &names), Err(AnalysisError::UnmappedVariable("Q".into())));
    }

    #[test]
    fn or_coverage_scans_epochs() {
        let b = toy_boundary();
        let epoch0 = vec![set(&[0, 1])];
        let epoch1 = vec![set(&[0, 1, 2, 3]), set(&[3, 4, 5, 6])];
        assert_eq!(or_coverage(&[epoch0.clone(), epoch1.clone()], &b), Some(1));
        assert_eq!(or_coverage(&[epoch0], &b), None);
        // Complete clauses do not count toward the OR.
        assert_eq!(or_coverage(&[vec![set(&[0, 1, 2, 3, 4, 5, 6])]], &b), None);
    }

    #[test]
    fn csv_layout() {
        let mut m = model(2, 2);
        m.set_clause_literals(0, &[0]);
        let mut h = MetricsHistory::new(vec!["X1".into(), "X2".into()]);
        h.push(EpochRecord::capture(&m, 0, 0.5, Some(&set(&[0]))));
        h.push(EpochRecord::capture(&m, 1, 0.75, None));
        let csv = h.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with(
            "epoch,accuracy,mean_literals,freq_X1,freq_X2,complete_noisy,complete_clean,partial_noisy,partial_clean,or_covered,"
        ));
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0,0.500000,0.500000,1,0,0,1,0,0,0"));
        assert!(lines[2].starts_with("1,0.750000,0.500000,1,0,,,,,0"));
        assert_eq!(h.trailing_clean_mean(5), Some(1.0));
    }
}
