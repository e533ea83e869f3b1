//! Increase/decrease rates of the two CS-IA cells watching a frozen clause
//! `C = X1 AND X2`, the keep condition for `X1`, and a Monte Carlo
//! cross-check that drives real [`CsiaCell`]s with ancestral samples.
//!
//! Rates are reported with the shared event probability divided out, so
//! `p_inc` and `p_dec` are sums of two conditionals and can exceed 1.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::bn::{Assignment, BayesNet, BnError};
use crate::csia::{scenario_trigger, CsiaCell, CsiaConfig, Scenario};
use crate::tm::TmError;

#[derive(Debug, Error)]
pub enum ConvergenceError {
    #[error("expected a three-node net with X1, X2 and the target, found {0}")]
    Shape(String),
    #[error("drift probability {0} outside (0, 1)")]
    DriftRange(f64),
    #[error("horizon and runs must be at least 1")]
    EmptySimulation,
    #[error(transparent)]
    Net(#[from] BnError),
    #[error(transparent)]
    Config(#[from] TmError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Variable {
    X1,
    X2,
}

impl Variable {
    pub fn name(self) -> &'static str {
        match self {
            Variable::X1 => "X1",
            Variable::X2 => "X2",
        }
    }

    fn other(self) -> Variable {
        match self {
            Variable::X1 => Variable::X2,
            Variable::X2 => Variable::X1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Keep,
    Prune,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateReport {
    pub variable: Variable,
    pub p_inc: f64,
    pub p_dec: f64,
    /// Upper bound on the probability of the triggering event.
    pub event_bound: f64,
    pub margin: f64,
    pub verdict: Verdict,
}

struct Chain3 {
    x1: usize,
    x2: usize,
    y: usize,
}

fn shape(net: &BayesNet) -> Result<Chain3, ConvergenceError> {
    let names: Vec<&str> = net.names().collect();
    let bad = || ConvergenceError::Shape(names.join(", "));
    if net.len() != 3 {
        return Err(bad());
    }
    let x1 = net.index_of("X1").map_err(|_| bad())?;
    let x2 = net.index_of("X2").map_err(|_| bad())?;
    let y = net.target();
    if y == x1 || y == x2 {
        return Err(bad());
    }
    Ok(Chain3 { x1, x2, y })
}

/// `P(X1=1, X2=1)` by summing the joint.
pub fn event_bound(net: &BayesNet) -> Result<f64, ConvergenceError> {
    let c = shape(net)?;
    let mut total = 0.0;
    for y in [false, true] {
        let mut v = vec![false; 3];
        v[c.x1] = true;
        v[c.x2] = true;
        v[c.y] = y;
        total += net.joint_prob(&Assignment::new(v));
    }
    Ok(total)
}

/// `P(Y=1 | var=1)` and `P(Y=0 | var=1)`.
fn given(net: &BayesNet, c: &Chain3, var: Variable) -> Result<(f64, f64), ConvergenceError> {
    let idx = match var {
        Variable::X1 => c.x1,
        Variable::X2 => c.x2,
    };
    let p = net.conditional_idx(c.y, &[(idx, true)])?;
    Ok((p, 1.0 - p))
}

pub fn rates(net: &BayesNet, variable: Variable, p_d: f64) -> Result<RateReport, ConvergenceError> {
    if !(p_d > 0.0 && p_d < 1.0) {
        return Err(ConvergenceError::DriftRange(p_d));
    }
    let c = shape(net)?;
    let bound = event_bound(net)?;
    let (y1_x1, y0_x1) = given(net, &c, Variable::X1)?;
    let (p_inc, p_dec) = match variable {
        Variable::X1 => {
            let (y1_x2, y0_x2) = given(net, &c, variable.other())?;
            (y1_x1 + y0_x2, y0_x1 + p_d + y1_x2)
        }
        // The literal being judged is X2, so both steps condition on X1.
        Variable::X2 => (y1_x1 + y0_x1, y0_x1 + p_d + y1_x1),
    };
    let margin = p_inc - p_dec;
    Ok(RateReport {
        variable,
        p_inc,
        p_dec,
        event_bound: bound,
        margin,
        verdict: if margin > 0.0 { Verdict::Keep } else { Verdict::Prune },
    })
}

/// Whether `X1` should be kept; returns the margin of
/// `P(Y=1|X1=1) - P(Y=0|X1=1) - (P(Y=1|X2=1) - P(Y=0|X2=1)) > p_d`.
pub fn check_keep_condition(net: &BayesNet, p_d: f64) -> Result<(bool, f64), ConvergenceError> {
    if !(p_d > 0.0 && p_d < 1.0) {
        return Err(ConvergenceError::DriftRange(p_d));
    }
    let c = shape(net)?;
    let (y1_x1, y0_x1) = given(net, &c, Variable::X1)?;
    let (y1_x2, y0_x2) = given(net, &c, Variable::X2)?;
    let margin = (y1_x1 - y0_x1) - (y1_x2 - y0_x2) - p_d;
    Ok((margin > 0.0, margin))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VariableOutcome {
    pub variable: Variable,
    /// Fraction of runs in which the cell fell to the prune region.
    pub prune_frequency: f64,
    /// Final state, or the state at pruning time.
    pub mean_final_state: f64,
    /// Mean completed pairs before pruning, over runs that pruned.
    pub mean_pairs_to_prune: Option<f64>,
    /// Step 1 triggers per sample, pooled over runs.
    pub step1_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainReport {
    pub runs: usize,
    pub horizon: u64,
    pub n: u32,
    pub drift_probability: f64,
    pub outcomes: [VariableOutcome; 2],
}

impl ChainReport {
    pub fn outcome(&self, v: Variable) -> &VariableOutcome {
        &self.outcomes[v as usize]
    }
}

#[derive(Debug, Clone, Copy)]
struct Track {
    cell: CsiaCell,
    pairs: u64,
    pruned: bool,
    step1: u64,
}

/// Streams samples through `X1 AND X2` with one cell per literal.
///
/// A cell stops at its first prune signal or after `horizon` completed
/// pairs; a run ends when both cells have stopped. Run `r` draws from
/// stream `r` of a generator seeded with `seed`.
pub fn simulate_chain(
    net: &BayesNet,
    config: &CsiaConfig,
    horizon: u64,
    runs: usize,
    seed: u64,
) -> Result<ChainReport, ConvergenceError> {
    if horizon == 0 || runs == 0 {
        return Err(ConvergenceError::EmptySimulation);
    }
    config.validate()?;
    let c = shape(net)?;
    let mut pruned = [0usize; 2];
    let mut state_sum = [0f64; 2];
    let mut pairs_sum = [0u64; 2];
    let mut step1 = [0u64; 2];
    let mut samples = 0u64;
    let mut values = vec![false; 3];
    for run in 0..runs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(run as u64);
        let fresh = Track {
            cell: CsiaCell::fresh(config),
            pairs: 0,
            pruned: false,
            step1: 0,
        };
        let mut tracks = [fresh; 2];
        let active = |t: &Track| !t.pruned && t.pairs < horizon;
        while tracks.iter().any(active) {
            net.sample_into(&mut rng, &mut values);
            samples += 1;
            let (x1, x2, y) = (values[c.x1], values[c.x2], values[c.y]);
            for (k, (own, rest)) in [(x1, x2), (x2, x1)].into_iter().enumerate() {
                let t = &mut tracks[k];
                if !active(t) {
                    continue;
                }
                match scenario_trigger(t.cell.phase, rest, own) {
                    Some(Scenario::Step1) => {
                        t.step1 += 1;
                        t.cell.update(Scenario::Step1, y, &mut rng, config);
                    }
                    Some(Scenario::Step2) => {
                        t.pruned = t.cell.update(Scenario::Step2, y, &mut rng, config);
                        t.pairs += 1;
                    }
                    None => {}
                }
            }
        }
        for (k, t) in tracks.iter().enumerate() {
            state_sum[k] += t.cell.state as f64;
            step1[k] += t.step1;
            if t.pruned {
                pruned[k] += 1;
                pairs_sum[k] += t.pairs;
            }
        }
    }
    let outcome = |k: usize, variable| VariableOutcome {
        variable,
        prune_frequency: pruned[k] as f64 / runs as f64,
        mean_final_state: state_sum[k] / runs as f64,
        mean_pairs_to_prune: (pruned[k] > 0).then(|| pairs_sum[k] as f64 / pruned[k] as f64),
        step1_rate: step1[k] as f64 / samples as f64,
    };
    Ok(ChainReport {
        runs,
        horizon,
        n: config.n(),
        drift_probability: config.drift_probability(),
        outcomes: [outcome(0, Variable::X1), outcome(1, Variable::X2)],
    })
}
