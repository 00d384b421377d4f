use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};

/// Largest number of supports the brute-force search will visit.
pub const RIP_BUDGET: u128 = 1_000_000;

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // exact: acc * (n - i) is divisible by (i + 1)
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Restricted isometry constant `γ_k` by enumerating every support of size `k`:
/// the largest deviation of an eigenvalue of `Φ_Tᵀ Φ_T` from 1.
pub fn rip_constant_bruteforce(phi: &DMatrix<f64>, k: usize) -> Result<f64> {
    let n = phi.ncols();
    if k == 0 || k > n {
        return Err(invalid("rip order must satisfy 1 <= k <= N"));
    }
    let count = binomial(n, k);
    if count > RIP_BUDGET {
        return Err(Error::BudgetExceeded { count, budget: RIP_BUDGET });
    }
    let gram = phi.transpose() * phi;
    let mut idx: alloc::vec::Vec<usize> = (0..k).collect();
    let mut sub = DMatrix::zeros(k, k);
    let mut gamma: f64 = 0.0;
    loop {
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                sub[(a, b)] = gram[(i, j)];
            }
        }
        let eig = sub.clone().symmetric_eigenvalues();
        for &l in eig.iter() {
            gamma = gamma.max((l - 1.0).abs());
        }
        // next combination in lexicographic order
        let mut pos = k;
        while pos > 0 && idx[pos - 1] == n - k + pos - 1 {
            pos -= 1;
        }
        if pos == 0 {
            return Ok(gamma);
        }
        idx[pos - 1] += 1;
        for t in pos..k {
            idx[t] = idx[t - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn binomials() {
        assert_eq!(binomial(12, 2), 66);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(binomial(60, 30), 118_264_581_564_861_424);
    }

    #[test]
    fn orthonormal_columns() {
        let phi = DMatrix::<f64>::identity(6, 4);
        for k in 1..=4 {
            assert!(rip_constant_bruteforce(&phi, k).unwrap() < 1e-14);
        }
    }

    #[test]
    fn repeated_column() {
        let phi = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 0.0]);
        assert!((rip_constant_bruteforce(&phi, 2).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gaussian_and_monotone() {
        let mut rng = crate::seed::rng(2);
        let phi = DMatrix::from_fn(32, 12, |_, _| rng.sample::<f64, _>(StandardNormal)) / libm::sqrt(32.0);
        let g: alloc::vec::Vec<f64> = (1..=4).map(|k| rip_constant_bruteforce(&phi, k).unwrap()).collect();
        assert!(g[1] < 1.0);
        for w in g.windows(2) {
            assert!(w[0] <= w[1] + 1e-12);
        }
    }

    #[test]
    fn budget() {
        let phi = DMatrix::<f64>::identity(40, 40);
        assert!(matches!(rip_constant_bruteforce(&phi, 10), Err(Error::BudgetExceeded { .. })));
    }
}
