use rand::Rng;

use crate::bandit::LinearBanditInstance;
use crate::error::{Error, Result};
use crate::hardness::ceil_log2;

use super::trace::{PhaseRecord, RunTrace};
use super::{top_by_estimate, Algorithm};

/// Sequential Halving on the arms as unrelated distributions.
///
/// Each of the `ceil(log2 K)` rounds pulls every surviving arm
/// `floor(T / (|S_r| ceil(log2 K)))` times and keeps the better half
/// (rounded up) by empirical mean.
pub fn run_sequential_halving<R: Rng + ?Sized>(
    instance: &LinearBanditInstance,
    budget: u64,
    rng: &mut R,
) -> Result<(usize, RunTrace)> {
    let num_arms = instance.num_arms();
    let mut trace = RunTrace::new(Algorithm::SequentialHalving);
    let mut active: Vec<usize> = (0..num_arms).collect();
    let rounds = ceil_log2(num_arms);

    for round in 1..=rounds {
        let n = active.len();
        let per_arm = (budget / (n as u64 * rounds as u64)) as usize;
        if per_arm == 0 {
            return Err(Error::BudgetTooSmall(format!(
                "T = {budget} gives no pulls for {n} arms over {rounds} rounds"
            )));
        }
        let start = trace.pulls.len();
        let mut means = Vec::with_capacity(n);
        for &arm in &active {
            let mut sum = 0.0;
            for _ in 0..per_arm {
                let reward = instance.pull(arm, rng)?;
                trace.pulls.push(arm, reward);
                sum += reward;
            }
            means.push(sum / per_arm as f64);
        }
        let kept = top_by_estimate(&means, n.div_ceil(2));
        trace.phases.push(PhaseRecord {
            phase: round,
            active: active.clone(),
            reduced_dim: instance.dim(),
            weights: vec![1.0 / n as f64; n],
            counts: vec![per_arm; n],
            theta_hat: Vec::new(),
            estimates: means,
            eliminated: (0..n).map(|p| !kept.contains(&p)).collect(),
            start,
            pulls: per_arm * n,
        });
        active = kept.iter().map(|&p| active[p]).collect();
    }

    trace.output_arm = active[0];
    trace.total_pulls = trace.pulls.len();
    Ok((trace.output_arm, trace))
}
