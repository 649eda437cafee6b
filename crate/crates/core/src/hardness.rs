//! Phase budget and gap-based complexity measures.

use crate::error::{Error, Result};

/// `ceil(log2 n)` for `n >= 1`.
pub fn ceil_log2(n: usize) -> usize {
    assert!(n >= 1, "ceil_log2 of zero");
    (usize::BITS - (n - 1).leading_zeros()) as usize
}

fn ceil_div_pow2(d: usize, r: usize) -> usize {
    d.div_ceil(1usize << r)
}

/// Number of arms kept after elimination round `r`: `ceil(d / 2^r)`.
pub fn survivors_after(d: usize, r: usize) -> usize {
    ceil_div_pow2(d, r)
}

/// Per-phase allocation multiplier
///
/// ```text
/// m = (T - min(K, d(d+1)/2) - sum_{r=1}^{R-1} ceil(d / 2^r)) / R,   R = ceil(log2 d)
/// ```
///
/// kept as an exact real; ceilings are applied only to per-arm counts.
pub fn compute_m(budget: u64, num_arms: usize, dim: usize) -> Result<f64> {
    if dim < 2 {
        return Err(Error::invalid(format!("effective dimension {dim} must be at least 2")));
    }
    if num_arms < dim {
        return Err(Error::invalid(format!(
            "{num_arms} arms cannot span {dim} dimensions"
        )));
    }
    let phases = ceil_log2(dim);
    let first_support = num_arms.min(dim * (dim + 1) / 2);
    let later: usize = (1..phases).map(|r| ceil_div_pow2(dim, r)).sum();
    let reserved = (first_support + later) as f64;
    let m = (budget as f64 - reserved) / phases as f64;
    if m <= 0.0 {
        return Err(Error::BudgetTooSmall(format!(
            "T = {budget} leaves m = {m} (K = {num_arms}, d = {dim}); need T > {reserved}"
        )));
    }
    Ok(m)
}

/// The four gap-based hardness quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardnessProfile {
    /// `sum_{i<=K} gap_i^-2`
    pub h1: f64,
    /// `max_{2<=i<=K} i gap_i^-2`
    pub h2: f64,
    /// `sum_{i<=d} gap_i^-2`
    pub h1_lin: f64,
    /// `max_{2<=i<=d} i gap_i^-2`
    pub h2_lin: f64,
}

/// Hardness from a rank-ordered gap vector with `gaps[0] == gaps[1]`.
pub fn hardness_profile(gaps: &[f64], dim: usize, num_arms: usize) -> Result<HardnessProfile> {
    if gaps.len() != num_arms {
        return Err(Error::DimensionMismatch {
            expected: num_arms,
            found: gaps.len(),
        });
    }
    if dim < 2 || dim > num_arms {
        return Err(Error::invalid(format!(
            "need 2 <= d <= K, got d = {dim}, K = {num_arms}"
        )));
    }
    if gaps.iter().any(|g| !g.is_finite() || *g <= 0.0) {
        return Err(Error::NonUniqueBest);
    }
    if gaps[1..].windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("gaps must be non-decreasing from the second entry"));
    }
    let inv_sq: Vec<f64> = gaps.iter().map(|g| g.powi(-2)).collect();
    // 1-based rank i weights gap_i^-2 by i
    let ranked = |upto: usize| {
        (1..upto)
            .map(|i| (i + 1) as f64 * inv_sq[i])
            .fold(f64::MIN, f64::max)
    };
    Ok(HardnessProfile {
        h1: inv_sq.iter().sum(),
        h2: ranked(num_arms),
        h1_lin: inv_sq[..dim].iter().sum(),
        h2_lin: ranked(dim),
    })
}

/// Failure-probability upper bound for the design-based elimination:
/// `(4K/d + 3 log2 d) exp(-m / (32 H2_lin))`. Values above 1 are returned as is.
pub fn theorem2_bound(budget: u64, num_arms: usize, dim: usize, h2_lin: f64) -> Result<f64> {
    let m = compute_m(budget, num_arms, dim)?;
    let d = dim as f64;
    Ok((4.0 * num_arms as f64 / d + 3.0 * d.log2()) * (-m / (32.0 * h2_lin)).exp())
}

/// Minimax lower-bound expressions evaluated numerically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBoundExponents {
    /// `(1/6) exp(-240 T / a)`
    pub known_complexity: f64,
    /// `(1/6) exp(-2700 T / (H1_lin log2 d))`
    pub unknown_complexity: f64,
    /// `T >= a^2 log(6 T d) / 900`
    pub budget_premise: bool,
    /// `a >= 15 d^2`
    pub complexity_premise: bool,
}

pub fn lower_bound_exponents(budget: u64, a: f64, h1_lin: f64, dim: usize) -> LowerBoundExponents {
    let t = budget as f64;
    let d = dim as f64;
    LowerBoundExponents {
        known_complexity: (-240.0 * t / a).exp() / 6.0,
        unknown_complexity: (-2700.0 * t / (h1_lin * d.log2())).exp() / 6.0,
        budget_premise: t >= a * a * (6.0 * t * d).ln() / 900.0,
        complexity_premise: a >= 15.0 * d * d,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ceil_log2_values() {
        let expected = [(1, 0), (2, 1), (3, 2), (4, 2), (5, 3), (8, 3), (9, 4), (16, 4), (17, 5)];
        for (n, want) in expected {
            assert_eq!(ceil_log2(n), want, "n = {n}");
        }
    }

    #[test]
    fn m_spot_values() {
        assert_eq!(compute_m(25, 25, 2).unwrap(), 22.0);
        assert_eq!(compute_m(100, 10, 4).unwrap(), 44.0);
        assert!(matches!(compute_m(3, 3, 2), Err(Error::BudgetTooSmall(_))));
        assert!(compute_m(100, 1, 2).is_err());
        assert!(compute_m(100, 4, 1).is_err());
    }

    #[test]
    fn m_is_asymptotically_t_over_log2_d() {
        let m = compute_m(1_000_000, 8, 8).unwrap();
        let ratio = m * 3.0 / 1e6;
        assert!((0.9..=1.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn worked_profile() {
        let p = hardness_profile(&[0.1, 0.1, 0.2, 0.3], 3, 4).unwrap();
        assert!((p.h2_lin - 200.0).abs() < 1e-9);
        assert!((p.h2 - 200.0).abs() < 1e-9);
        assert!((p.h1_lin - 225.0).abs() < 1e-9);
        assert!((p.h1 - (225.0 + 1.0 / 0.09)).abs() < 1e-9);
    }

    #[test]
    fn equal_gaps_are_the_sharp_case() {
        let (k, d, g) = (12, 4, 0.25);
        let p = hardness_profile(&vec![g; k], d, k).unwrap();
        assert!((p.h2 - k as f64 / (g * g)).abs() < 1e-9);
        assert!((p.h2_lin - d as f64 / (g * g)).abs() < 1e-9);
        assert!((p.h2 / p.h2_lin - k as f64 / d as f64).abs() < 1e-12);
    }

    #[test]
    fn k_equals_d_collapses() {
        let p = hardness_profile(&[0.1, 0.1, 0.3, 0.5], 4, 4).unwrap();
        assert_eq!(p.h1, p.h1_lin);
        assert_eq!(p.h2, p.h2_lin);
    }

    #[test]
    fn zero_gap_is_rejected() {
        assert!(matches!(hardness_profile(&[0.0, 0.0, 1.0], 2, 3), Err(Error::NonUniqueBest)));
    }

    #[test]
    fn bound_by_hand() {
        let b = theorem2_bound(450, 2, 2, 2.0).unwrap();
        assert!((b - 7.0 * (-7.0f64).exp()).abs() < 1e-15);
        assert!((b - 0.006_383_6).abs() < 1e-6);
        let vacuous = theorem2_bound(10, 2, 2, 2.0).unwrap();
        assert!((vacuous - 7.0 * (-0.125f64).exp()).abs() < 1e-12);
        assert!(vacuous > 6.0);
    }

    #[test]
    fn lower_bound_flags() {
        let lb = lower_bound_exponents(10, 1e6, 10.0, 4);
        assert!(!lb.budget_premise);
        assert!(lb.complexity_premise);
        assert!(lb.known_complexity > 0.0 && lb.known_complexity <= 1.0 / 6.0);

        // a = 15 d^2 = 240 at d = 4; T = 1000 satisfies 900 T >= a^2 log(6 T d)
        let lb = lower_bound_exponents(1000, 240.0, 240.0, 4);
        assert!(lb.budget_premise && lb.complexity_premise);
        assert!((lb.known_complexity - (-1000.0f64).exp() / 6.0).abs() < 1e-300);
        assert!(lb.unknown_complexity.is_finite() && lb.unknown_complexity >= 0.0);

        let a = lower_bound_exponents(1, 50.0, 50.0, 4);
        let b = lower_bound_exponents(2, 50.0, 50.0, 4);
        let c = lower_bound_exponents(3, 50.0, 50.0, 4);
        let step1 = (6.0 * a.known_complexity).ln() - (6.0 * b.known_complexity).ln();
        let step2 = (6.0 * b.known_complexity).ln() - (6.0 * c.known_complexity).ln();
        assert!((step1 - step2).abs() < 1e-9);
    }

    fn sorted_gaps(raw: Vec<f64>) -> Vec<f64> {
        let mut g = raw;
        g.sort_by(|a, b| a.total_cmp(b));
        let mut out = Vec::with_capacity(g.len() + 1);
        out.push(g[0]);
        out.extend(g);
        out
    }

    proptest! {
        #[test]
        fn table_inequalities(raw in prop::collection::vec(0.01f64..5.0, 3..60), frac in 0.0f64..1.0) {
            let gaps = sorted_gaps(raw);
            let k = gaps.len();
            let d = 2 + ((k - 2) as f64 * frac) as usize;
            let p = hardness_profile(&gaps, d, k).unwrap();
            let tol = 1.0 + 1e-12;
            let (kf, df) = (k as f64, d as f64);
            prop_assert!(p.h2_lin <= p.h2 * tol);
            prop_assert!(p.h2 <= kf / df * p.h2_lin * tol);
            prop_assert!(p.h2 <= p.h1 * tol && p.h1 <= (2.0 * kf).ln() * p.h2 * tol);
            prop_assert!(p.h2_lin <= p.h1_lin * tol && p.h1_lin <= (2.0 * df).ln() * p.h2_lin * tol);
            prop_assert!(p.h1_lin <= p.h1 * tol && p.h1 <= kf / df * p.h1_lin * tol);
        }

        #[test]
        fn bound_decreases_with_budget(t in 20u64..10_000, extra in 1u64..1000, h in 0.5f64..100.0) {
            let a = theorem2_bound(t, 8, 4, h).unwrap();
            let b = theorem2_bound(t + extra, 8, 4, h).unwrap();
            prop_assert!(b < a);
        }
    }
}
