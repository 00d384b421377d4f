//! Matrix norms, singular values and pseudoinverses used by the dual-frame
//! constructions and their error bounds.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative rank tolerance: singular values below
/// `max(rows, cols) · σ_max · 2⁻⁴⁶` count as zero.
pub fn rank_tolerance(a: &DMatrix<f64>, sigma_max: f64) -> f64 {
    a.nrows().max(a.ncols()) as f64 * sigma_max * libm::ldexp(1.0, -46)
}

pub fn singular_values(a: &DMatrix<f64>) -> DVector<f64> {
    if a.is_empty() {
        return DVector::zeros(0);
    }
    a.clone().svd(false, false).singular_values
}

pub fn sigma_min(a: &DMatrix<f64>) -> f64 {
    singular_values(a).iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn norm_2_to_2(a: &DMatrix<f64>) -> f64 {
    singular_values(a).iter().copied().fold(0.0, f64::max)
}

/// Largest absolute row sum.
pub fn norm_inf_to_inf(a: &DMatrix<f64>) -> f64 {
    a.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Sum of the Euclidean norms of the columns.
pub fn norm_l21(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.norm()).sum()
}

/// The two computable upper bounds on `‖A‖∞→2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfToTwoBound {
    /// `Σ_j ‖A_j‖₂`.
    pub column_sum: f64,
    /// `√(cols) · ‖A‖2→2`.
    pub spectral: f64,
}

impl InfToTwoBound {
    pub fn of(a: &DMatrix<f64>) -> Self {
        Self {
            column_sum: norm_l21(a),
            spectral: libm::sqrt(a.ncols() as f64) * norm_2_to_2(a),
        }
    }

    pub fn best(&self) -> f64 {
        self.column_sum.min(self.spectral)
    }
}

pub fn bound_inf_to_2(a: &DMatrix<f64>) -> f64 {
    InfToTwoBound::of(a).best()
}

/// Moore–Penrose pseudoinverse of a matrix with full column rank, `R⁻¹Q*`
/// from a Householder QR factorization.
pub fn left_pseudo_inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.nrows() < a.ncols() || a.ncols() == 0 {
        return Err(Error::RankDeficient { sigma_min: 0.0, tolerance: 0.0 });
    }
    let s = singular_values(a);
    let smax = s.iter().copied().fold(0.0, f64::max);
    let smin = s.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = rank_tolerance(a, smax);
    if !(smin > tol) {
        return Err(Error::RankDeficient { sigma_min: smin, tolerance: tol });
    }
    let qr = a.clone().qr();
    qr.r()
        .solve_upper_triangular(&qr.q().transpose())
        .ok_or(Error::RankDeficient { sigma_min: smin, tolerance: tol })
}

/// Least-squares solution of `A x ≈ b` for `A` with full column rank.
pub fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(left_pseudo_inverse(a)? * b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn gaussian(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = crate::seed::rng(seed);
        DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
    }

    /// Cyclic Jacobi eigenvalue iteration for a symmetric matrix.
    fn jacobi_eigenvalues(mut a: DMatrix<f64>) -> Vec<f64> {
        let n = a.nrows();
        for _ in 0..100 {
            let off: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j)))
                .filter(|(i, j)| i != j)
                .map(|(i, j)| a[(i, j)] * a[(i, j)])
                .sum();
            if off < 1e-30 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if a[(p, q)].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                    let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / libm::sqrt(t * t + 1.0);
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                }
            }
        }
        (0..n).map(|i| a[(i, i)]).collect()
    }

    #[test]
    fn identity_norms() {
        let i3 = DMatrix::<f64>::identity(3, 3);
        assert_eq!(norm_inf_to_inf(&i3), 1.0);
        assert!((norm_2_to_2(&i3) - 1.0).abs() < 1e-15);
        assert!((norm_l21(&i3) - 3.0).abs() < 1e-15);
        assert!((bound_inf_to_2(&i3) - libm::sqrt(3.0)).abs() < 1e-15);
        assert!((sigma_min(&i3) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn diagonal_singular_values() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(alloc::vec![1.0, 2.0]));
        assert!((norm_2_to_2(&d) - 2.0).abs() < 1e-15);
        let d = DMatrix::from_diagonal(&DVector::from_vec(alloc::vec![3.0, 1.0, 2.0]));
        assert!((sigma_min(&d) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn inf_to_two_bounds_dominate_truth() {
        for seed in 0..20 {
            let a = gaussian(4, 8, seed);
            // brute force over the 2^8 vertices of the cube
            let mut truth = 0.0f64;
            for mask in 0u32..256 {
                let s = DVector::from_fn(8, |j, _| if mask >> j & 1 == 1 { 1.0 } else { -1.0 });
                truth = truth.max((&a * s).norm());
            }
            let max_col = a.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
            assert!(norm_l21(&a) >= truth - 1e-12);
            assert!(truth >= max_col - 1e-12);
            assert!(bound_inf_to_2(&a) >= truth - 1e-12);
        }
    }

    #[test]
    fn sigma_min_matches_jacobi_oracle() {
        for seed in 0..10 {
            let a = gaussian(32, 4, 100 + seed);
            let eig = jacobi_eigenvalues(a.transpose() * &a);
            let lam_min = eig.iter().copied().fold(f64::INFINITY, f64::min);
            let oracle = libm::sqrt(lam_min);
            let s = sigma_min(&a);
            assert!((s - oracle).abs() <= 1e-9 * oracle.max(1.0), "{s} vs {oracle}");
        }
    }

    #[test]
    fn pseudo_inverse_is_left_inverse() {
        let a = gaussian(16, 3, 9);
        let p = left_pseudo_inverse(&a).unwrap();
        assert!((&p * &a - DMatrix::<f64>::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn rank_deficiency_rejected() {
        let mut a = gaussian(6, 3, 1);
        let c0 = a.column(0).clone_owned();
        a.set_column(2, &(c0 * 2.0));
        assert!(matches!(left_pseudo_inverse(&a), Err(Error::RankDeficient { .. })));
        assert!(left_pseudo_inverse(&gaussian(2, 3, 1)).is_err());
    }
}
