//! Fixed-budget best-arm identification policies.

mod bayesgap;
mod halving;
mod od_linbai;
mod trace;

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::bandit::LinearBanditInstance;
use crate::design::DEFAULT_EPS;
use crate::error::{Error, Result};

pub use bayesgap::{
    exploration_coefficient, gap_choice, run_bayesgap, three_sigma_h1, BayesGapMode,
    DEFAULT_PRIOR_SCALE, GAP_FLOOR,
};
pub use halving::run_sequential_halving;
pub use od_linbai::run_od_linbai;
pub use trace::{allocation_from_design, AllocationPlan, BayesGapStep, PhaseRecord, RunTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    OdLinBai,
    SequentialHalving,
    BayesGapOracle,
    BayesGapAdaptive,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::OdLinBai,
        Algorithm::SequentialHalving,
        Algorithm::BayesGapOracle,
        Algorithm::BayesGapAdaptive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::OdLinBai => "odlinbai",
            Algorithm::SequentialHalving => "sh",
            Algorithm::BayesGapOracle => "bayesgap-oracle",
            Algorithm::BayesGapAdaptive => "bayesgap-adaptive",
        }
    }

    /// Stable id used to derive the algorithm's random stream within a trial.
    /// Stream 0 is reserved for instance generation.
    pub fn stream_id(self) -> u64 {
        match self {
            Algorithm::OdLinBai => 1,
            Algorithm::SequentialHalving => 2,
            Algorithm::BayesGapOracle => 3,
            Algorithm::BayesGapAdaptive => 4,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown algorithm `{s}` (expected odlinbai, sh, bayesgap-oracle or bayesgap-adaptive)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Design-solver tolerance for OD-LinBAI.
    pub eps: f64,
    /// BayesGap prior standard deviation.
    pub prior_scale: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            eps: DEFAULT_EPS,
            prior_scale: DEFAULT_PRIOR_SCALE,
        }
    }
}

/// Runs one policy. BayesGap is told the instance's noise level.
pub fn run_algorithm<R: Rng + ?Sized>(
    algorithm: Algorithm,
    instance: &LinearBanditInstance,
    budget: u64,
    opts: &RunOptions,
    rng: &mut R,
) -> Result<(usize, RunTrace)> {
    match algorithm {
        Algorithm::OdLinBai => run_od_linbai(instance, budget, opts.eps, rng),
        Algorithm::SequentialHalving => run_sequential_halving(instance, budget, rng),
        Algorithm::BayesGapOracle | Algorithm::BayesGapAdaptive => {
            let mode = if algorithm == Algorithm::BayesGapOracle {
                BayesGapMode::Oracle
            } else {
                BayesGapMode::Adaptive
            };
            run_bayesgap(instance, budget, mode, opts.prior_scale, instance.noise_std(), rng)
        }
    }
}

/// Positions of the `keep` largest estimates, returned in ascending order.
/// Ties favor the smaller position.
pub(crate) fn top_by_estimate(estimates: &[f64], keep: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..estimates.len()).collect();
    order.sort_by(|&a, &b| estimates[b].total_cmp(&estimates[a]).then(a.cmp(&b)));
    let mut kept = order[..keep.min(order.len())].to_vec();
    kept.sort_unstable();
    kept
}
