//! BayesGap with a Gaussian linear model.
//!
//! Model, in the reduced coordinates of the arm span:
//!
//! ```text
//! prior      theta ~ N(0, eta^2 I),   rewards X = a' theta + N(0, sigma^2)
//! precision  A_t = sum_s a_s a_s' + (sigma_r / eta)^2 I,   sigma_r = sigma (1 if sigma = 0)
//! posterior  mu_k = a_k' A_t^-1 b_t,   s_k = sigma sqrt(a_k' A_t^-1 a_k),   b_t = sum_s X_s a_s
//! bounds     U_k = mu_k + beta s_k,   L_k = mu_k - beta s_k
//! gap index  B_k = max_{i != k} U_i - L_k
//! choice     J = argmin_k B_k,   j = argmax_{k != J} U_k,   pull argmax_{k in {J, j}} s_k
//! beta       sqrt((T - K) / (4 H_eps)),   H_eps = sum_k (gap_k / 2)^-2 = 4 H1
//! ```
//!
//! Each arm is pulled once before the first index is formed. The
//! recommendation is the candidate `J` with the smallest `B_J` seen over all
//! evaluations, including one after the final pull. Ties go to the smaller
//! index throughout, and `J` wins a tie in `s`.
//!
//! The adaptive mode re-estimates every gap before each step with the
//! three-sigma rule, `|max_{i != k}(mu_i + 3 s_i) - (mu_k - 3 s_k)|`, floored
//! at [`GAP_FLOOR`].

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::arms::ArmSet;
use crate::bandit::LinearBanditInstance;
use crate::error::{Error, Result};
use crate::geometry::{reduce_if_deficient, DEFAULT_RANK_TOL};

use super::trace::{BayesGapStep, RunTrace};
use super::Algorithm;

pub const DEFAULT_PRIOR_SCALE: f64 = 1e6;
pub const GAP_FLOOR: f64 = 1e-12;
const REFRESH_EVERY: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BayesGapMode {
    Oracle,
    Adaptive,
}

/// `sqrt((T - K) / (16 H1))`, zero when `T <= K`.
pub fn exploration_coefficient(budget: u64, num_arms: usize, h1: f64) -> f64 {
    ((budget as f64 - num_arms as f64).max(0.0) / (16.0 * h1)).sqrt()
}

fn top_two(values: &[f64]) -> (usize, usize) {
    let mut first = 0;
    let mut second = usize::MAX;
    for i in 1..values.len() {
        if values[i] > values[first] {
            second = first;
            first = i;
        } else if second == usize::MAX || values[i] > values[second] {
            second = i;
        }
    }
    (first, second)
}

fn max_other(values: &[f64], first: usize, second: usize, k: usize) -> f64 {
    if k == first {
        values[second]
    } else {
        values[first]
    }
}

/// `H1` from three-sigma gap estimates.
pub fn three_sigma_h1(means: &[f64], sds: &[f64]) -> f64 {
    let upper: Vec<f64> = means.iter().zip(sds).map(|(m, s)| m + 3.0 * s).collect();
    let (first, second) = top_two(&upper);
    means
        .iter()
        .zip(sds)
        .enumerate()
        .map(|(k, (m, s))| {
            let gap = (max_other(&upper, first, second, k) - (m - 3.0 * s))
                .abs()
                .max(GAP_FLOOR);
            gap.powi(-2)
        })
        .sum()
}

/// `(J, j, B_J)` for the given posterior and coefficient.
pub fn gap_choice(means: &[f64], sds: &[f64], beta: f64) -> (usize, usize, f64) {
    let upper: Vec<f64> = means.iter().zip(sds).map(|(m, s)| m + beta * s).collect();
    let (first, second) = top_two(&upper);
    let mut cand = 0;
    let mut cand_b = f64::INFINITY;
    for k in 0..means.len() {
        let b = max_other(&upper, first, second, k) - (means[k] - beta * sds[k]);
        if b < cand_b {
            cand = k;
            cand_b = b;
        }
    }
    let challenger = if cand == first { second } else { first };
    (cand, challenger, cand_b)
}

struct Posterior {
    arms: DMatrix<f64>,
    sigma: f64,
    ridge: f64,
    gram: DMatrix<f64>,
    a_inv: DMatrix<f64>,
    b: DVector<f64>,
    lev: Vec<f64>,
}

impl Posterior {
    fn new(arms: &ArmSet, sigma: f64, ridge: f64) -> Self {
        let (k, d) = (arms.len(), arms.dim());
        Self {
            arms: arms.matrix().clone(),
            sigma,
            ridge,
            gram: DMatrix::zeros(d, d),
            a_inv: DMatrix::zeros(d, d),
            b: DVector::zeros(d),
            lev: vec![0.0; k],
        }
    }

    fn accumulate(&mut self, arm: usize, reward: f64) -> DVector<f64> {
        let x = self.arms.row(arm).transpose();
        self.gram.ger(1.0, &x, &x, 1.0);
        self.b.axpy(reward, &x, 1.0);
        x
    }

    fn refresh(&mut self) -> Result<()> {
        let d = self.gram.nrows();
        let precision = &self.gram + DMatrix::identity(d, d) * self.ridge;
        let chol = precision
            .cholesky()
            .ok_or(Error::NonFinite("posterior precision"))?;
        self.a_inv = chol.inverse();
        let m = &self.arms * &self.a_inv;
        for (k, l) in self.lev.iter_mut().enumerate() {
            *l = m.row(k).dot(&self.arms.row(k));
        }
        Ok(())
    }

    fn observe(&mut self, arm: usize, reward: f64) {
        let x = self.accumulate(arm, reward);
        let w = &self.a_inv * &x;
        let denom = 1.0 + x.dot(&w);
        self.a_inv.ger(-1.0 / denom, &w, &w, 1.0);
        let aw = &self.arms * &w;
        for (l, v) in self.lev.iter_mut().zip(aw.iter()) {
            *l -= v * v / denom;
        }
    }

    fn means(&self) -> Vec<f64> {
        let theta = &self.a_inv * &self.b;
        (&self.arms * theta).iter().copied().collect()
    }

    fn sds(&self) -> Vec<f64> {
        self.lev.iter().map(|l| self.sigma * l.max(0.0).sqrt()).collect()
    }
}

pub fn run_bayesgap<R: Rng + ?Sized>(
    instance: &LinearBanditInstance,
    budget: u64,
    mode: BayesGapMode,
    prior_scale: f64,
    noise_std: f64,
    rng: &mut R,
) -> Result<(usize, RunTrace)> {
    if !prior_scale.is_finite() || prior_scale <= 0.0 {
        return Err(Error::invalid(format!("prior scale must be positive, got {prior_scale}")));
    }
    if !noise_std.is_finite() || noise_std < 0.0 {
        return Err(Error::invalid(format!("noise std must be nonnegative, got {noise_std}")));
    }
    let num_arms = instance.num_arms();
    if num_arms < 2 {
        return Err(Error::invalid("BayesGap needs at least two arms"));
    }
    if budget < num_arms as u64 {
        return Err(Error::BudgetTooSmall(format!(
            "T = {budget} cannot pull each of {num_arms} arms once"
        )));
    }
    let (_, reduced) = reduce_if_deficient(instance.arms(), DEFAULT_RANK_TOL)?;
    let arms = reduced.as_ref().unwrap_or(instance.arms());
    let sigma_r = if noise_std > 0.0 { noise_std } else { 1.0 };
    let mut post = Posterior::new(arms, noise_std, (sigma_r / prior_scale).powi(2));

    let oracle_h1 = match mode {
        BayesGapMode::Oracle => Some(instance.gaps()?.iter().map(|g| g.powi(-2)).sum::<f64>()),
        BayesGapMode::Adaptive => None,
    };
    let algorithm = match mode {
        BayesGapMode::Oracle => Algorithm::BayesGapOracle,
        BayesGapMode::Adaptive => Algorithm::BayesGapAdaptive,
    };
    let mut trace = RunTrace::new(algorithm);

    for arm in 0..num_arms {
        let reward = instance.pull(arm, rng)?;
        post.accumulate(arm, reward);
        trace.pulls.push(arm, reward);
    }
    post.refresh()?;

    let budget = budget as usize;
    let mut best = (f64::INFINITY, 0);
    for t in num_arms..=budget {
        if t > num_arms && (t - num_arms).is_multiple_of(REFRESH_EVERY) {
            post.refresh()?;
        }
        let means = post.means();
        let sds = post.sds();
        let h1 = oracle_h1.unwrap_or_else(|| three_sigma_h1(&means, &sds));
        let beta = exploration_coefficient(budget as u64, num_arms, h1);
        let (cand, challenger, gap_index) = gap_choice(&means, &sds, beta);
        if gap_index < best.0 {
            best = (gap_index, cand);
        }
        if t == budget {
            break;
        }
        let pulled = if sds[challenger] > sds[cand] { challenger } else { cand };
        trace.bayesgap_steps.push(BayesGapStep {
            t,
            candidate: cand,
            challenger,
            pulled,
            beta,
            h1,
            gap_index,
        });
        let reward = instance.pull(pulled, rng)?;
        post.observe(pulled, reward);
        trace.pulls.push(pulled, reward);
    }

    trace.output_arm = best.1;
    trace.total_pulls = trace.pulls.len();
    Ok((trace.output_arm, trace))
}
