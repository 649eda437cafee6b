//! Linear bandit instances, reward sampling and least-squares estimation.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::arms::ArmSet;
use crate::error::{Error, Result};

/// Rewards closer than this to the maximum count as ties at construction.
pub const TIE_TOL: f64 = 1e-12;

/// Arms, a hidden parameter and Gaussian reward noise.
///
/// Pulling arm `i` yields `<theta*, a(i)> + sigma * Z` with `Z ~ N(0, 1)`.
#[derive(Debug, Clone)]
pub struct LinearBanditInstance {
    arms: ArmSet,
    theta: DVector<f64>,
    noise_std: f64,
    labels: Option<Vec<String>>,
    means: DVector<f64>,
    best: usize,
}

impl LinearBanditInstance {
    pub fn new(arms: ArmSet, theta: DVector<f64>, noise_std: f64) -> Result<Self> {
        if !noise_std.is_finite() || noise_std < 0.0 {
            return Err(Error::invalid("noise_std must be finite and nonnegative"));
        }
        if theta.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("theta"));
        }
        let means = arms.rewards(&theta)?;
        if means.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("expected rewards"));
        }
        let best = unique_argmax(means.as_slice())?;
        Ok(Self {
            arms,
            theta,
            noise_std,
            labels: None,
            means,
            best,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.arms.len() {
            return Err(Error::DimensionMismatch {
                expected: self.arms.len(),
                found: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn with_noise_std(mut self, noise_std: f64) -> Result<Self> {
        if !noise_std.is_finite() || noise_std < 0.0 {
            return Err(Error::invalid("noise_std must be finite and nonnegative"));
        }
        self.noise_std = noise_std;
        Ok(self)
    }

    pub fn arms(&self) -> &ArmSet {
        &self.arms
    }

    pub fn theta(&self) -> &DVector<f64> {
        &self.theta
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn dim(&self) -> usize {
        self.arms.dim()
    }

    /// Expected rewards `p(i)`.
    pub fn means(&self) -> &[f64] {
        self.means.as_slice()
    }

    pub fn best_arm(&self) -> usize {
        self.best
    }

    /// One noisy reward from `arm`.
    pub fn pull<R: Rng + ?Sized>(&self, arm: usize, rng: &mut R) -> Result<f64> {
        let mean = *self.means.get(arm).ok_or(Error::ArmOutOfRange {
            arm,
            k: self.arms.len(),
        })?;
        if self.noise_std == 0.0 {
            return Ok(mean);
        }
        let z: f64 = rng.sample(StandardNormal);
        Ok(mean + self.noise_std * z)
    }

    /// Optimality gaps ordered by reward rank, with `gap[0] = gap[1]`.
    pub fn gaps(&self) -> Result<Vec<f64>> {
        gaps_from_means(self.means())
    }
}

fn unique_argmax(values: &[f64]) -> Result<usize> {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    let top = values[best];
    let scale = top.abs().max(1.0);
    let ties = values
        .iter()
        .filter(|&&v| top - v <= TIE_TOL * scale)
        .count();
    if ties > 1 {
        return Err(Error::NonUniqueBest);
    }
    Ok(best)
}

/// Gap vector from expected rewards: sort descending, `gap_i = p(1) - p(i)`,
/// then set `gap_1 = gap_2`.
pub fn gaps_from_means(means: &[f64]) -> Result<Vec<f64>> {
    if means.len() < 2 {
        return Err(Error::invalid("gaps need at least two arms"));
    }
    unique_argmax(means)?;
    let mut sorted = means.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let top = sorted[0];
    let mut gaps: Vec<f64> = sorted.iter().map(|p| top - p).collect();
    gaps[0] = gaps[1];
    Ok(gaps)
}

/// Pulled arm indices with their observed rewards, in pull order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PullLog {
    arm_indices: Vec<usize>,
    rewards: Vec<f64>,
}

impl PullLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_parts(arm_indices: Vec<usize>, rewards: Vec<f64>) -> Result<Self> {
        if arm_indices.len() != rewards.len() {
            return Err(Error::DimensionMismatch {
                expected: arm_indices.len(),
                found: rewards.len(),
            });
        }
        if rewards.iter().any(|r| !r.is_finite()) {
            return Err(Error::NonFinite("rewards"));
        }
        Ok(Self {
            arm_indices,
            rewards,
        })
    }

    pub fn push(&mut self, arm: usize, reward: f64) {
        self.arm_indices.push(arm);
        self.rewards.push(reward);
    }

    pub fn len(&self) -> usize {
        self.arm_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arm_indices.is_empty()
    }

    pub fn arm_indices(&self) -> &[usize] {
        &self.arm_indices
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    /// Pulls `start..end`, as a new log.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        Self {
            arm_indices: self.arm_indices[start..end].to_vec(),
            rewards: self.rewards[start..end].to_vec(),
        }
    }
}

/// Ordinary least squares `theta = V^{-1} sum_t a(A_t) X_t` with
/// `V = sum_t a(A_t) a(A_t)^T`. Indices in `log` refer to rows of `arms`.
pub fn ols_estimate(arms: &ArmSet, log: &PullLog) -> Result<DVector<f64>> {
    let (k, d) = (arms.len(), arms.dim());
    let mut counts = vec![0usize; k];
    let mut sums = vec![0.0; k];
    for (&i, &x) in log.arm_indices.iter().zip(&log.rewards) {
        if i >= k {
            return Err(Error::ArmOutOfRange { arm: i, k });
        }
        counts[i] += 1;
        sums[i] += x;
    }
    let a = arms.matrix();
    let mut v = DMatrix::<f64>::zeros(d, d);
    let mut b = DVector::<f64>::zeros(d);
    for i in 0..k {
        if counts[i] == 0 {
            continue;
        }
        let row = a.row(i).transpose();
        v.ger(counts[i] as f64, &row, &row, 1.0);
        b.axpy(sums[i], &row, 1.0);
    }
    let max_diag = v.diagonal().iter().copied().fold(0.0, f64::max);
    let chol = Cholesky::new(v).ok_or(Error::Underdetermined)?;
    let min_pivot = chol.l_dirty().diagonal().iter().copied().fold(f64::MAX, f64::min);
    if max_diag <= 0.0 || min_pivot * min_pivot < 1e-14 * max_diag {
        return Err(Error::Underdetermined);
    }
    Ok(chol.solve(&b))
}
