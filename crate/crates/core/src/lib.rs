//! Tsetlin Machine learning with per-literal context-specific independence
//! automata that prune literals lying outside the target's Markov boundary,
//! plus a binary Bayesian network used as ground truth.

pub mod analysis;
pub mod bn;
pub mod convergence;
pub mod csia;
pub mod data;
mod sampling;
pub mod tm;
pub mod train;

pub use analysis::{ClauseCategory, EpochRecord, MetricsHistory};
pub use bn::{builtin_chain3, builtin_toy, Assignment, BayesNet, BnError, CpdTable};
pub use convergence::{ChainReport, ConvergenceError, RateReport, Variable, Verdict};
pub use csia::{CsiaBank, CsiaCell, CsiaConfig, Phase, PruneMode, Scenario};
pub use data::{DataError, Dataset, RawImages};
pub use tm::{Clause, LiteralVector, Polarity, TmConfig, TmError, TmModel};
pub use train::{fit_epoch, EpochStats};
