use std::io::Write;

use crate::bandit::PullLog;
use crate::error::{Error, Result};

use super::Algorithm;

/// Pull counts for one phase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllocationPlan {
    counts: Vec<usize>,
    total: usize,
}

impl AllocationPlan {
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Phase budget `T_r`, the sum of the counts.
    pub fn total(&self) -> usize {
        self.total
    }
}

/// `T_r(i) = ceil(pi(i) m)` for supported arms, zero elsewhere.
pub fn allocation_from_design(weights: &[f64], m: f64) -> Result<AllocationPlan> {
    if !m.is_finite() || m <= 0.0 {
        return Err(Error::BudgetTooSmall(format!("phase multiplier m = {m}")));
    }
    if weights.iter().any(|w| w.is_nan() || *w < 0.0) {
        return Err(Error::invalid("allocation weights must be nonnegative"));
    }
    let counts: Vec<usize> = weights
        .iter()
        .map(|&w| if w > 0.0 { (w * m).ceil() as usize } else { 0 })
        .collect();
    let total = counts.iter().sum();
    Ok(AllocationPlan { counts, total })
}

/// One elimination phase. Vectors are aligned with `active`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRecord {
    pub phase: usize,
    /// Original indices of the arms active during this phase, ascending.
    pub active: Vec<usize>,
    /// Working dimension `d_r` of the arm vectors in this phase.
    pub reduced_dim: usize,
    pub weights: Vec<f64>,
    pub counts: Vec<usize>,
    /// Phase-local estimate in the reduced coordinates (empty for
    /// algorithms without a parametric estimate).
    pub theta_hat: Vec<f64>,
    pub estimates: Vec<f64>,
    pub eliminated: Vec<bool>,
    /// Index of the phase's first pull in [`RunTrace::pulls`].
    pub start: usize,
    pub pulls: usize,
}

/// One gap-index step of BayesGap.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesGapStep {
    pub t: usize,
    pub candidate: usize,
    pub challenger: usize,
    pub pulled: usize,
    pub beta: f64,
    /// Hardness value fed into the exploration coefficient.
    pub h1: f64,
    pub gap_index: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub algorithm: Algorithm,
    pub phases: Vec<PhaseRecord>,
    pub output_arm: usize,
    pub total_pulls: usize,
    /// Every pull with original arm indices.
    pub pulls: PullLog,
    pub bayesgap_steps: Vec<BayesGapStep>,
}

impl RunTrace {
    pub(crate) fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            phases: Vec::new(),
            output_arm: usize::MAX,
            total_pulls: 0,
            pulls: PullLog::new(),
            bayesgap_steps: Vec::new(),
        }
    }

    /// CSV with columns `phase,arm,reduced_dim,weight,count,estimate,eliminated_flag`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "phase",
            "arm",
            "reduced_dim",
            "weight",
            "count",
            "estimate",
            "eliminated_flag",
        ])?;
        for p in &self.phases {
            for (pos, &arm) in p.active.iter().enumerate() {
                w.write_record([
                    p.phase.to_string(),
                    arm.to_string(),
                    p.reduced_dim.to_string(),
                    p.weights[pos].to_string(),
                    p.counts[pos].to_string(),
                    p.estimates[pos].to_string(),
                    u8::from(p.eliminated[pos]).to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}
