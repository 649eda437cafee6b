//! Approximate G-optimal designs over finite arm sets.
//!
//! The solver maximizes `log det V(pi)` with Frank-Wolfe and Wolfe's away
//! steps (the Wolfe-Atwood method) from a Kumar-Yildirim start. By the
//! Kiefer-Wolfowitz equivalence a design with `g(pi) <= (1 + eps) d` is an
//! `eps`-approximate minimizer of
//!
//! ```text
//! g(pi) = max_i a(i)^T V(pi)^{-1} a(i),   V(pi) = sum_i pi(i) a(i) a(i)^T
//! ```
//!
//! and `g(pi) >= d` for every design whose support spans `R^d`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::arms::ArmSet;
use crate::error::{Error, Result};
use crate::geometry::{self, DEFAULT_RANK_TOL};

pub const DEFAULT_EPS: f64 = 1e-7;
pub const MAX_ITERATIONS: usize = 100_000;
const REFACTOR_EVERY: usize = 1_000;
/// Weights below this are dropped by [`prune_support`].
pub const PRUNE_THRESHOLD: f64 = 1e-9;
const PRUNE_ATTEMPTS: usize = 5;
/// Smallest admissible Cholesky pivot, squared, relative to the largest diagonal entry.
const SINGULAR_PIVOT_RATIO: f64 = 1e-14;

/// Probability weights over an arm set with the induced information matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    weights: Vec<f64>,
    info_matrix: DMatrix<f64>,
    g_value: f64,
}

impl Design {
    /// Builds a design from explicit weights, computing `V(pi)` and `g(pi)`.
    pub fn from_weights(arms: &ArmSet, weights: Vec<f64>) -> Result<Self> {
        validate_weights(arms, &weights)?;
        let info_matrix = information_matrix(&weights, arms);
        let chol = spd_factor(&info_matrix)?;
        let g_value = leverages(&chol, arms).iter().copied().fold(f64::MIN, f64::max);
        Ok(Self {
            weights,
            info_matrix,
            g_value,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn info_matrix(&self) -> &DMatrix<f64> {
        &self.info_matrix
    }

    pub fn g_value(&self) -> f64 {
        self.g_value
    }

    /// Indices with strictly positive weight.
    pub fn support(&self) -> Vec<usize> {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn support_size(&self) -> usize {
        self.weights.iter().filter(|&&w| w > 0.0).count()
    }

    pub fn log_det(&self) -> f64 {
        match Cholesky::new(self.info_matrix.clone()) {
            Some(c) => 2.0 * c.l_dirty().diagonal().iter().map(|x| x.ln()).sum::<f64>(),
            None => f64::NEG_INFINITY,
        }
    }

    /// Whether `g <= (1 + eps) d`.
    pub fn is_certified(&self, eps: f64) -> bool {
        self.g_value <= (1.0 + eps) * self.info_matrix.nrows() as f64
    }
}

fn validate_weights(arms: &ArmSet, weights: &[f64]) -> Result<()> {
    if weights.len() != arms.len() {
        return Err(Error::DimensionMismatch {
            expected: arms.len(),
            found: weights.len(),
        });
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::invalid("design weights must be finite and nonnegative"));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("design weights sum to {total}, not 1")));
    }
    Ok(())
}

/// `V(pi) = sum_i pi(i) a(i) a(i)^T`.
pub fn information_matrix(weights: &[f64], arms: &ArmSet) -> DMatrix<f64> {
    let a = arms.matrix();
    let mut scaled = a.clone();
    for (i, &w) in weights.iter().enumerate() {
        scaled.row_mut(i).scale_mut(w);
    }
    let v = a.transpose() * scaled;
    // symmetrize away rounding asymmetry
    (&v + v.transpose()) * 0.5
}

fn spd_factor(v: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    let max_diag = v.diagonal().iter().copied().fold(0.0, f64::max);
    if max_diag <= 0.0 {
        return Err(Error::DesignNotSpanning);
    }
    let chol = Cholesky::new(v.clone()).ok_or(Error::DesignNotSpanning)?;
    let min_pivot = chol.l_dirty().diagonal().iter().copied().fold(f64::MAX, f64::min);
    if min_pivot * min_pivot < SINGULAR_PIVOT_RATIO * max_diag {
        return Err(Error::DesignNotSpanning);
    }
    Ok(chol)
}

/// `a(i)^T V^{-1} a(i)` for every arm, via a triangular solve against `L`.
fn leverages(chol: &Cholesky<f64, Dyn>, arms: &ArmSet) -> Vec<f64> {
    let l = chol.l();
    let solved = l
        .solve_lower_triangular(&arms.matrix().transpose())
        .expect("Cholesky factor has a positive diagonal");
    solved.column_iter().map(|c| c.norm_squared()).collect()
}

/// `g(pi)`: the largest leverage over all arms, supported or not.
pub fn g_of(weights: &[f64], arms: &ArmSet) -> Result<f64> {
    Ok(Design::from_weights(arms, weights.to_vec())?.g_value)
}

fn require_spanning(arms: &ArmSet) -> Result<()> {
    let rank = geometry::effective_dimension(arms, DEFAULT_RANK_TOL)?;
    if rank < arms.dim() {
        return Err(Error::RankDeficient {
            rank,
            dim: arms.dim(),
        });
    }
    Ok(())
}

/// Kumar-Yildirim style start: greedily pick `d` arms, each maximizing the
/// projection onto the orthogonal complement of those already chosen, and
/// weight them uniformly. Ties go to the smaller index.
pub fn kumar_yildirim_init(arms: &ArmSet) -> Result<Design> {
    let weights = kumar_yildirim_weights(arms)?;
    Design::from_weights(arms, weights)
}

fn kumar_yildirim_weights(arms: &ArmSet) -> Result<Vec<f64>> {
    let (k, d) = (arms.len(), arms.dim());
    let a = arms.matrix();
    let mut residual = a.clone();
    let scale = (0..k).map(|i| a.row(i).norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::ZeroSpan);
    }
    let mut chosen = Vec::with_capacity(d);
    for step in 0..d {
        let (best, best_norm) = (0..k)
            .filter(|i| !chosen.contains(i))
            .map(|i| (i, residual.row(i).norm()))
            .fold((usize::MAX, -1.0), |acc, (i, n)| if n > acc.1 { (i, n) } else { acc });
        if best == usize::MAX || best_norm <= DEFAULT_RANK_TOL * scale {
            return Err(Error::RankDeficient { rank: step, dim: d });
        }
        chosen.push(best);
        let dir: DVector<f64> = residual.row(best).transpose() / best_norm;
        for i in 0..k {
            let proj = residual.row(i).dot(&dir.transpose());
            let update = dir.transpose() * proj;
            let mut row = residual.row_mut(i);
            row -= update;
        }
    }
    let mut weights = vec![0.0; k];
    for i in chosen {
        weights[i] = 1.0 / d as f64;
    }
    Ok(weights)
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub eps: f64,
    pub max_iterations: usize,
    /// Record `log det V` after every step.
    pub record_history: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            eps: DEFAULT_EPS,
            max_iterations: MAX_ITERATIONS,
            record_history: false,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SolveStats {
    pub iterations: usize,
    pub toward_steps: usize,
    pub away_steps: usize,
    pub drop_steps: usize,
    pub log_det_history: Vec<f64>,
}

/// `eps`-approximate G-optimal design: `g <= (1 + eps) d`.
pub fn solve_g_optimal(arms: &ArmSet, eps: f64) -> Result<Design> {
    let opts = SolverOptions {
        eps,
        ..SolverOptions::default()
    };
    solve_g_optimal_with(arms, &opts).map(|(design, _)| design)
}

/// Mutable state of the Wolfe-Atwood iteration.
struct Ascent<'a> {
    arms: &'a ArmSet,
    dim: f64,
    weights: Vec<f64>,
    v_inv: DMatrix<f64>,
    leverage: Vec<f64>,
    log_det: f64,
}

impl<'a> Ascent<'a> {
    fn new(arms: &'a ArmSet, weights: Vec<f64>) -> Result<Self> {
        let mut state = Self {
            arms,
            dim: arms.dim() as f64,
            weights,
            v_inv: DMatrix::zeros(0, 0),
            leverage: Vec::new(),
            log_det: 0.0,
        };
        state.refactor()?;
        Ok(state)
    }

    /// Recomputes `V^{-1}`, leverages and `log det V` from the weights.
    fn refactor(&mut self) -> Result<()> {
        let total: f64 = self.weights.iter().sum();
        self.weights.iter_mut().for_each(|w| *w /= total);
        let v = information_matrix(&self.weights, self.arms);
        let chol = spd_factor(&v)?;
        self.log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|x| x.ln()).sum::<f64>();
        self.leverage = leverages(&chol, self.arms);
        self.v_inv = chol.inverse();
        Ok(())
    }

    /// Moves to `(1 - tau) pi + tau e_idx`; `tau < 0` is an away step.
    fn step(&mut self, idx: usize, tau: f64, drop: bool) {
        let omega = self.leverage[idx];
        let keep = 1.0 - tau;
        for w in self.weights.iter_mut() {
            *w *= keep;
        }
        self.weights[idx] += tau;
        if drop || self.weights[idx] < 0.0 {
            self.weights[idx] = 0.0;
        }

        // Sherman-Morrison on V' = (1 - tau) (V + c a a^T), c = tau / (1 - tau)
        let c = tau / keep;
        let denom = 1.0 + c * omega;
        let a = self.arms.arm(idx);
        let w = &self.v_inv * &a;
        self.v_inv.ger(-c / denom, &w, &w, 1.0);
        self.v_inv /= keep;
        let proj = self.arms.matrix() * &w;
        for (lev, s) in self.leverage.iter_mut().zip(proj.iter()) {
            *lev = (*lev - c * s * s / denom) / keep;
        }
        self.log_det += (self.dim - 1.0) * keep.ln() + (1.0 + tau * (omega - 1.0)).ln();
    }

    fn snapshot(&self) -> Result<Design> {
        let total: f64 = self.weights.iter().sum();
        let weights = self.weights.iter().map(|w| w / total).collect();
        Design::from_weights(self.arms, weights)
    }
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Wolfe-Atwood ascent with explicit options and iteration statistics.
pub fn solve_g_optimal_with(arms: &ArmSet, opts: &SolverOptions) -> Result<(Design, SolveStats)> {
    if opts.eps.is_nan() || opts.eps <= 0.0 {
        return Err(Error::invalid("eps must be positive"));
    }
    require_spanning(arms)?;
    let d = arms.dim() as f64;
    let target = (1.0 + opts.eps) * d;

    let mut state = Ascent::new(arms, kumar_yildirim_weights(arms)?)?;
    let mut stats = SolveStats::default();
    if opts.record_history {
        stats.log_det_history.push(state.log_det);
    }
    let mut since_refactor = 0;

    while stats.iterations < opts.max_iterations {
        if since_refactor >= REFACTOR_EVERY {
            state.refactor()?;
            since_refactor = 0;
        }
        let mut j = argmax(&state.leverage);
        let mut omega_max = state.leverage[j];
        if omega_max <= target {
            let design = state.snapshot()?;
            if design.g_value <= target {
                return Ok((design, stats));
            }
            // tracked leverages drifted; resume from exact values
            state.refactor()?;
            since_refactor = 0;
            j = argmax(&state.leverage);
            omega_max = state.leverage[j];
            if omega_max <= target {
                let design = state.snapshot()?;
                if design.g_value <= target {
                    return Ok((design, stats));
                }
                return Err(Error::NotConverged {
                    g_value: design.g_value,
                    best: Box::new(design),
                    iterations: stats.iterations,
                });
            }
        }

        let mut k = usize::MAX;
        for (i, &w) in state.weights.iter().enumerate() {
            if w > 0.0 && (k == usize::MAX || state.leverage[i] < state.leverage[k]) {
                k = i;
            }
        }
        let eps_plus = omega_max / d - 1.0;
        let eps_minus = 1.0 - state.leverage[k] / d;
        let u_k = state.weights[k];

        if eps_plus > eps_minus || u_k >= 1.0 - 1e-15 {
            let tau = (omega_max - d) / (d * (omega_max - 1.0));
            state.step(j, tau, false);
            stats.toward_steps += 1;
        } else {
            let omega_k = state.leverage[k];
            let floor = -u_k / (1.0 - u_k);
            let tau = if omega_k > 1.0 {
                ((omega_k - d) / (d * (omega_k - 1.0))).max(floor)
            } else {
                floor
            };
            let drop = tau <= floor;
            state.step(k, tau, drop);
            stats.away_steps += 1;
            if drop {
                stats.drop_steps += 1;
            }
        }
        stats.iterations += 1;
        since_refactor += 1;
        if opts.record_history {
            stats.log_det_history.push(state.log_det);
        }
    }

    let best = state.snapshot()?;
    Err(Error::NotConverged {
        g_value: best.g_value,
        best: Box::new(best),
        iterations: stats.iterations,
    })
}

/// Reduces the support of a certified design to at most `max_support` arms
/// while keeping `g <= (1 + 2 eps) d`.
///
/// Weights below [`PRUNE_THRESHOLD`] are dropped first. Remaining excess
/// support is removed by moving along null directions of the map
/// `w -> sum_i w_i a(i) a(i)^T`, which leaves `V` unchanged; at most
/// `d(d+1)/2` arms survive. If the renormalized result fails the
/// certificate, the solver is re-run restricted to the retained arms, with
/// the worst-covered arm exchanged in on each further attempt.
pub fn prune_support(design: &Design, arms: &ArmSet, max_support: usize, eps: f64) -> Result<Design> {
    let d = arms.dim();
    if design.weights.len() != arms.len() {
        return Err(Error::DimensionMismatch {
            expected: arms.len(),
            found: design.weights.len(),
        });
    }
    if max_support < d {
        return Err(Error::invalid(format!(
            "max_support {max_support} is below the dimension {d}"
        )));
    }
    if design.support_size() <= max_support {
        return Ok(design.clone());
    }
    let target = (1.0 + 2.0 * eps) * d as f64;

    let mut weights: Vec<f64> = design
        .weights
        .iter()
        .map(|&w| if w < PRUNE_THRESHOLD { 0.0 } else { w })
        .collect();
    caratheodory_reduce(arms, &mut weights, max_support);
    normalize(&mut weights);

    let mut candidate = Design::from_weights(arms, weights).ok();
    if let Some(c) = &candidate {
        if c.support_size() <= max_support && c.g_value <= target {
            return Ok(c.clone());
        }
    }

    let mut retained = match &candidate {
        Some(c) => top_by_weight(c.weights(), max_support),
        None => top_by_weight(&design.weights, max_support),
    };
    let mut last_g = candidate.as_ref().map_or(f64::INFINITY, |c| c.g_value);
    let mut last_support = candidate.as_ref().map_or(0, |c| c.support_size());
    for attempt in 0..PRUNE_ATTEMPTS {
        if attempt > 0 {
            if let Some(c) = &candidate {
                exchange_worst(arms, c, &mut retained);
            }
        }
        let sub = arms.subset(&retained)?;
        if sub.rank() == d {
            if let Ok(sub_design) = solve_g_optimal(&sub, eps) {
                let mut full = vec![0.0; arms.len()];
                for (&i, &w) in retained.iter().zip(sub_design.weights()) {
                    full[i] = w;
                }
                let c = Design::from_weights(arms, full)?;
                last_g = c.g_value;
                last_support = c.support_size();
                if c.support_size() <= max_support && c.g_value <= target {
                    return Ok(c);
                }
                candidate = Some(c);
            }
        }
    }
    Err(Error::PruneFailed {
        max_support,
        attempts: PRUNE_ATTEMPTS,
        support: last_support,
        g_value: last_g,
        target,
    })
}

fn normalize(weights: &mut [f64]) {
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        weights.iter_mut().for_each(|w| *w /= total);
    }
}

fn top_by_weight(weights: &[f64], n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
    idx.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    idx.truncate(n);
    idx.sort_unstable();
    idx
}

/// Swaps the lowest-weight retained arm for the arm with the largest leverage.
fn exchange_worst(arms: &ArmSet, design: &Design, retained: &mut Vec<usize>) {
    let Ok(chol) = spd_factor(design.info_matrix()) else {
        return;
    };
    let lev = leverages(&chol, arms);
    let outside = (0..arms.len())
        .filter(|i| !retained.contains(i))
        .max_by(|&a, &b| lev[a].total_cmp(&lev[b]).then(b.cmp(&a)));
    let weakest = retained
        .iter()
        .copied()
        .min_by(|&a, &b| design.weights[a].total_cmp(&design.weights[b]).then(b.cmp(&a)));
    if let (Some(o), Some(w)) = (outside, weakest) {
        retained.retain(|&i| i != w);
        retained.push(o);
        retained.sort_unstable();
    }
}

/// Moves weight along null vectors of `w -> sum w_i vech(a_i a_i^T)` until the
/// support is at most `max(max_support, d(d+1)/2)` or no null vector remains.
fn caratheodory_reduce(arms: &ArmSet, weights: &mut [f64], max_support: usize) {
    let d = arms.dim();
    let rows = d * (d + 1) / 2;
    let floor = max_support.max(rows);
    loop {
        let mut support: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
        if support.len() <= floor {
            return;
        }
        // the rows + 1 lightest arms are linearly dependent in vech space
        support.sort_by(|&a, &b| weights[a].total_cmp(&weights[b]).then(a.cmp(&b)));
        let cols: Vec<usize> = support.into_iter().take(rows + 1).collect();
        let n = cols.len();
        // square (n x n) with a zero last row so the SVD yields a full right basis
        let mut m = DMatrix::<f64>::zeros(n, n);
        for (c, &i) in cols.iter().enumerate() {
            let a = arms.arm(i);
            let mut r = 0;
            for p in 0..d {
                for q in p..d {
                    m[(r, c)] = a[p] * a[q];
                    r += 1;
                }
            }
        }
        let Ok(svd) = crate::geometry::checked_svd(&m) else {
            return;
        };
        let vt = svd.v_t.expect("right singular vectors requested");
        let smallest = (0..n)
            .min_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]))
            .expect("non-empty");
        let mut null: Vec<f64> = vt.row(smallest).iter().copied().collect();
        if null.iter().all(|&x| x <= 0.0) {
            null.iter_mut().for_each(|x| *x = -*x);
        }
        // ratio test: the largest step keeping every weight nonnegative
        let mut hit = None;
        let mut alpha = f64::INFINITY;
        for (c, &i) in cols.iter().enumerate() {
            if null[c] > 1e-14 {
                let ratio = weights[i] / null[c];
                if ratio < alpha {
                    alpha = ratio;
                    hit = Some(c);
                }
            }
        }
        let Some(hit) = hit else {
            return;
        };
        for (c, &i) in cols.iter().enumerate() {
            weights[i] = (weights[i] - alpha * null[c]).max(0.0);
        }
        weights[cols[hit]] = 0.0;
    }
}
