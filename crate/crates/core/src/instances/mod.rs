//! Instance generators, real-data ingestion and instance files.

mod abalone;
pub(crate) mod io;
mod spec;

use std::f64::consts::{FRAC_PI_4, PI};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::arms::ArmSet;
use crate::bandit::{LinearBanditInstance, TIE_TOL};
use crate::error::{Error, Result};
use crate::geometry::{effective_dimension, DEFAULT_RANK_TOL};

pub use abalone::{fit_least_squares, load_abalone, AbaloneOptions};
pub use io::{
    load_instance, read_instance_csv, read_sidecar, sidecar_path, write_instance_csv,
    write_sidecar, InstanceFile, Sidecar,
};
pub use spec::InstanceSpec;

pub const DEFAULT_PHI_STD: f64 = 0.3;
pub const MAX_ATTEMPTS: usize = 100;

/// Two-dimensional instance with many near-second-best arms.
///
/// `theta* = [1, 0]`, arm 0 is `[1, 0]`, the last arm is at angle `3 pi / 4`
/// and every middle arm sits at angle `pi / 4 + phi_i` with
/// `phi_i ~ N(0, phi_std^2)`. A `phi_i` whose arm would tie the best arm is
/// redrawn.
pub fn gen_hard_instance<R: Rng + ?Sized>(
    num_arms: usize,
    phi_std: f64,
    rng: &mut R,
) -> Result<LinearBanditInstance> {
    if !phi_std.is_finite() || phi_std < 0.0 {
        return Err(Error::invalid(format!("phi_std must be nonnegative, got {phi_std}")));
    }
    if num_arms < 3 {
        return Err(Error::invalid(format!("need K >= 3, got {num_arms}")));
    }
    let normal = Normal::new(0.0, phi_std).map_err(|e| Error::invalid(e.to_string()))?;
    let mut phis = Vec::with_capacity(num_arms - 2);
    while phis.len() < num_arms - 2 {
        let phi: f64 = normal.sample(rng);
        if (FRAC_PI_4 + phi).cos() < 1.0 - TIE_TOL {
            phis.push(phi);
        }
    }
    gen_hard_instance_from_phis(&phis)
}

/// The same construction with the middle-arm angles given explicitly.
pub fn gen_hard_instance_from_phis(phis: &[f64]) -> Result<LinearBanditInstance> {
    let mut rows = Vec::with_capacity(phis.len() + 2);
    rows.push(vec![1.0, 0.0]);
    for phi in phis {
        let angle = FRAC_PI_4 + phi;
        rows.push(vec![angle.cos(), angle.sin()]);
    }
    let last = 3.0 * PI / 4.0;
    rows.push(vec![last.cos(), last.sin()]);
    LinearBanditInstance::new(ArmSet::new(&rows)?, DVector::from_vec(vec![1.0, 0.0]), 1.0)
}

/// `K = c^d` uniform unit vectors. The closest pair becomes arms 0 and 1
/// (lower original index first, lexicographically smallest pair on ties) and
/// `theta* = a(0) + 0.01 (a(0) - a(1))`. Labels hold the original draw index.
///
/// Draws that are rank deficient, contain duplicates, or where arm 1 is not
/// the strict runner-up are redrawn, up to [`MAX_ATTEMPTS`] times.
pub fn gen_sphere_instance<R: Rng + ?Sized>(
    dim: usize,
    c: usize,
    rng: &mut R,
) -> Result<LinearBanditInstance> {
    if dim < 2 || c < 2 {
        return Err(Error::invalid(format!("need d >= 2 and c >= 2, got d = {dim}, c = {c}")));
    }
    let num_arms = u32::try_from(dim)
        .ok()
        .and_then(|d| c.checked_pow(d))
        .filter(|&k| k <= 1 << 20)
        .ok_or_else(|| Error::invalid(format!("c^d = {c}^{dim} arms is too many")))?;

    let mut last_reason = String::new();
    for _ in 0..MAX_ATTEMPTS {
        let mut rows = DMatrix::<f64>::zeros(num_arms, dim);
        for mut row in rows.row_iter_mut() {
            loop {
                for x in row.iter_mut() {
                    *x = rng.sample(StandardNormal);
                }
                let norm = row.norm();
                if norm > 1e-12 {
                    row /= norm;
                    break;
                }
            }
        }
        match sphere_from_draw(rows) {
            Ok(inst) => return Ok(inst),
            Err(reason) => last_reason = reason,
        }
    }
    Err(Error::GenerationFailed {
        attempts: MAX_ATTEMPTS,
        reason: last_reason,
    })
}

fn sphere_from_draw(rows: DMatrix<f64>) -> std::result::Result<LinearBanditInstance, String> {
    let num_arms = rows.nrows();
    let arms = ArmSet::from_matrix(rows).map_err(|e| e.to_string())?;
    let rank = effective_dimension(&arms, DEFAULT_RANK_TOL).map_err(|e| e.to_string())?;
    if rank < arms.dim() {
        return Err(format!("rank {rank} < {}", arms.dim()));
    }
    let m = arms.matrix();
    let mut pair = (0, 1);
    let mut best = f64::INFINITY;
    for i in 0..num_arms {
        for j in i + 1..num_arms {
            let dist = (m.row(i) - m.row(j)).norm_squared();
            if dist < best {
                best = dist;
                pair = (i, j);
            }
        }
    }
    if best <= 1e-24 {
        return Err("duplicate arm vectors".into());
    }
    let mut order = vec![pair.0, pair.1];
    order.extend((0..num_arms).filter(|&i| i != pair.0 && i != pair.1));
    let arms = arms.subset(&order).map_err(|e| e.to_string())?;
    let a1 = arms.arm(0);
    let a2 = arms.arm(1);
    let theta = &a1 + (&a1 - &a2) * 0.01;
    let inst = LinearBanditInstance::new(arms, theta, 1.0).map_err(|e| e.to_string())?;
    let p = inst.means();
    let scale = p[0].abs().max(1.0);
    if inst.best_arm() != 0 || p[2..].iter().any(|&x| x >= p[1] - TIE_TOL * scale) {
        return Err("closest pair is not the top two arms".into());
    }
    let labels = order.iter().map(|i| i.to_string()).collect();
    inst.with_labels(labels).map_err(|e| e.to_string())
}

/// Standard-basis arms `e_1 ... e_K` with `theta* = means`, optionally padded
/// with zero arms up to `pad_to` arms in total.
pub fn gen_mab_embedding(means: &[f64], pad_to: Option<usize>) -> Result<LinearBanditInstance> {
    let k = means.len();
    if k < 2 {
        return Err(Error::invalid("need at least two means"));
    }
    let total = pad_to.unwrap_or(k);
    if total < k {
        return Err(Error::invalid(format!("pad_to = {total} is below K = {k}")));
    }
    let mut rows = DMatrix::<f64>::zeros(total, k);
    for i in 0..k {
        rows[(i, i)] = 1.0;
    }
    LinearBanditInstance::new(ArmSet::from_matrix(rows)?, DVector::from_vec(means.to_vec()), 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hardness::hardness_profile;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn hard_instance_by_hand() {
        let inst = gen_hard_instance_from_phis(&[0.0]).unwrap();
        let p = inst.means();
        assert_eq!(p[0], 1.0);
        assert!((p[1] - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((p[2] + FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(inst.best_arm(), 0);
    }

    #[test]
    fn hard_instance_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for k in [3, 10, 50] {
            let inst = gen_hard_instance(k, DEFAULT_PHI_STD, &mut rng).unwrap();
            assert_eq!((inst.num_arms(), inst.dim()), (k, 2));
            assert_eq!(inst.means()[0], 1.0);
            assert_eq!(inst.best_arm(), 0);
            assert!((inst.means()[k - 1] + FRAC_1_SQRT_2).abs() < 1e-15);
        }
        assert!(gen_hard_instance(2, 0.3, &mut rng).is_err());
    }

    #[test]
    fn hard_instance_hardness_ratios() {
        // With phi spread over N(0, 0.09) the single smallest gap dominates
        // every quantity, so H1 ~ H2 and H2_lin ~ H2 rather than (d/K) H2.
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        let (k, d) = (100, 2);
        let draws = 100;
        let (mut h1_over_h2, mut lin_over_h2) = (0.0, 0.0);
        for _ in 0..draws {
            let inst = gen_hard_instance(k, DEFAULT_PHI_STD, &mut rng).unwrap();
            let p = hardness_profile(&inst.gaps().unwrap(), d, k).unwrap();
            h1_over_h2 += p.h1 / p.h2;
            lin_over_h2 += p.h2_lin / p.h2;
        }
        h1_over_h2 /= draws as f64;
        lin_over_h2 /= draws as f64;
        assert!((0.5..=2.0).contains(&h1_over_h2), "H1/H2 = {h1_over_h2}");
        assert!((0.5..=2.0).contains(&lin_over_h2), "H2_lin/H2 = {lin_over_h2}");
    }

    #[test]
    fn hard_instance_equal_angles_give_k_over_d() {
        // all middle arms at pi/4: gaps (c, c, ..., c, 1 + 1/sqrt 2), c = 1 - 1/sqrt 2
        let k = 40;
        let inst = gen_hard_instance_from_phis(&vec![0.0; k - 2]).unwrap();
        let p = hardness_profile(&inst.gaps().unwrap(), 2, k).unwrap();
        let ratio = k as f64 / 2.0 * p.h2_lin / p.h2;
        assert!((0.5..=2.0).contains(&ratio), "{ratio}");
        assert!((0.5..=2.0).contains(&(p.h1 / p.h2)));
    }

    #[test]
    fn sphere_labels_and_norms() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for (d, c) in [(2, 2), (3, 2), (2, 5), (4, 3)] {
            let inst = gen_sphere_instance(d, c, &mut rng).unwrap();
            assert_eq!(inst.num_arms(), c.pow(d as u32));
            for i in 0..inst.num_arms() {
                assert!((inst.arms().arm(i).norm() - 1.0).abs() < 1e-12);
            }
            let p = inst.means();
            assert_eq!(inst.best_arm(), 0);
            assert!(p[2..].iter().all(|&x| x < p[1]));
            // the runner-up is the nearest neighbor of arm 0
            let m = inst.arms().matrix();
            let nearest = (1..inst.num_arms())
                .min_by(|&a, &b| {
                    let da = (m.row(0) - m.row(a)).norm();
                    let db = (m.row(0) - m.row(b)).norm();
                    da.total_cmp(&db)
                })
                .unwrap();
            assert_eq!(nearest, 1);
            let labels = inst.labels().unwrap();
            let mut sorted: Vec<usize> = labels.iter().map(|l| l.parse().unwrap()).collect();
            sorted.sort_unstable();
            assert_eq!(sorted, (0..inst.num_arms()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn sphere_gap_formula() {
        // p(0) - p(1) = <a1 + 0.01(a1 - a2), a1 - a2> = 1.02 (1 - <a1, a2>)
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let inst = gen_sphere_instance(3, 2, &mut rng).unwrap();
        let cos = inst.arms().arm(0).dot(&inst.arms().arm(1));
        let gap = inst.means()[0] - inst.means()[1];
        assert!((gap - 1.02 * (1.0 - cos)).abs() < 1e-12);
    }

    #[test]
    fn sphere_relabels_closest_pair() {
        // arms 1 and 3 are closest; they become 0 and 1, the rest keep their order
        let a = 0.1f64;
        let rows = DMatrix::from_row_slice(
            4,
            2,
            &[-1.0, 0.0, 1.0, 0.0, 0.0, 1.0, a.cos(), a.sin()],
        );
        let inst = sphere_from_draw(rows).unwrap();
        assert_eq!(inst.labels().unwrap(), ["1", "3", "0", "2"]);
        assert_eq!(inst.arms().arm(0)[0], 1.0);
    }

    #[test]
    fn mab_embedding() {
        let inst = gen_mab_embedding(&[0.9, 0.5], None).unwrap();
        assert_eq!(inst.theta().as_slice(), &[0.9, 0.5]);
        assert_eq!(inst.arms().to_vecs(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);

        let padded = gen_mab_embedding(&[0.9, 0.5], Some(5)).unwrap();
        assert_eq!(padded.means(), &[0.9, 0.5, 0.0, 0.0, 0.0]);
        assert_eq!(padded.arms().rank(), 2);

        assert!(gen_mab_embedding(&[0.5, 0.5], None).is_err());
        assert!(gen_mab_embedding(&[0.9, 0.5, 0.1], Some(2)).is_err());
    }

    #[test]
    fn generators_are_seeded() {
        let make = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = gen_hard_instance(20, DEFAULT_PHI_STD, &mut rng).unwrap();
            let b = gen_sphere_instance(3, 2, &mut rng).unwrap();
            let mut buf = Vec::new();
            write_instance_csv(&a, &mut buf).unwrap();
            write_instance_csv(&b, &mut buf).unwrap();
            buf
        };
        assert_eq!(make(5), make(5));
        assert_ne!(make(5), make(6));
    }
}
