//! Optimal-design-based phased elimination.
//!
//! Phase `r` (of `ceil(log2 d)`) reduces the active arm vectors to their
//! span, pulls arm `i` exactly `ceil(pi_r(i) m)` times under a G-optimal
//! design `pi_r`, fits least squares on this phase's rewards only, and keeps
//! the `ceil(d / 2^r)` arms with the largest estimates.

use rand::Rng;

use crate::arms::ArmSet;
use crate::bandit::{ols_estimate, LinearBanditInstance, PullLog};
use crate::design::{prune_support, solve_g_optimal};
use crate::error::{Error, Result};
use crate::geometry::{effective_dimension, orthonormal_basis, reduce, DEFAULT_RANK_TOL};
use crate::hardness::{ceil_log2, compute_m, survivors_after};

use super::trace::{allocation_from_design, PhaseRecord, RunTrace};
use super::{top_by_estimate, Algorithm};

pub fn run_od_linbai<R: Rng + ?Sized>(
    instance: &LinearBanditInstance,
    budget: u64,
    eps: f64,
    rng: &mut R,
) -> Result<(usize, RunTrace)> {
    let num_arms = instance.num_arms();
    let ambient = instance.dim();
    let dim = effective_dimension(instance.arms(), DEFAULT_RANK_TOL)?;
    if dim < 2 {
        return Err(Error::invalid(format!(
            "arm vectors span {dim} dimension(s); at least 2 are required"
        )));
    }
    let m = compute_m(budget, num_arms, dim)?;
    let support_cap = dim * (dim + 1) / 2;

    let mut trace = RunTrace::new(Algorithm::OdLinBai);
    let mut active: Vec<usize> = (0..num_arms).collect();
    let mut vectors: ArmSet = instance.arms().clone();
    let mut prev_dim = ambient;

    for phase in 1..=ceil_log2(dim) {
        let keep = survivors_after(dim, phase);
        let rank = match effective_dimension(&vectors, DEFAULT_RANK_TOL) {
            Ok(rank) => rank,
            Err(Error::ZeroSpan) => {
                // only zero vectors left: nothing to learn, keep by index
                let n = active.len();
                trace.phases.push(PhaseRecord {
                    phase,
                    active: active.clone(),
                    reduced_dim: 0,
                    weights: vec![0.0; n],
                    counts: vec![0; n],
                    theta_hat: Vec::new(),
                    estimates: vec![0.0; n],
                    eliminated: (0..n).map(|p| p >= keep).collect(),
                    start: trace.pulls.len(),
                    pulls: 0,
                });
                active.truncate(keep);
                vectors = vectors.subset(&(0..keep).collect::<Vec<_>>())?;
                continue;
            }
            Err(e) => return Err(e),
        };
        if rank != prev_dim {
            let basis = orthonormal_basis(&vectors, DEFAULT_RANK_TOL)?;
            vectors = reduce(&vectors, &basis)?;
        }
        prev_dim = rank;

        let mut design = solve_g_optimal(&vectors, eps)?;
        if phase == 1 && design.support_size() > support_cap {
            design = prune_support(&design, &vectors, support_cap, eps)?;
        }
        let plan = allocation_from_design(design.weights(), m)?;

        let start = trace.pulls.len();
        let mut phase_log = PullLog::new();
        for (pos, &arm) in active.iter().enumerate() {
            for _ in 0..plan.counts()[pos] {
                let reward = instance.pull(arm, rng)?;
                phase_log.push(pos, reward);
                trace.pulls.push(arm, reward);
            }
        }

        let theta = ols_estimate(&vectors, &phase_log)?;
        let estimates: Vec<f64> = vectors.rewards(&theta)?.iter().copied().collect();
        let kept = top_by_estimate(&estimates, keep);

        trace.phases.push(PhaseRecord {
            phase,
            active: active.clone(),
            reduced_dim: rank,
            weights: design.weights().to_vec(),
            counts: plan.counts().to_vec(),
            theta_hat: theta.iter().copied().collect(),
            estimates,
            eliminated: (0..active.len()).map(|p| !kept.contains(&p)).collect(),
            start,
            pulls: plan.total(),
        });

        active = kept.iter().map(|&p| active[p]).collect();
        vectors = vectors.subset(&kept)?;
    }

    trace.output_arm = active[0];
    trace.total_pulls = trace.pulls.len();
    Ok((trace.output_arm, trace))
}
