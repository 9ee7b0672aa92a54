//! Thin bridge to `faer` for the LU solves and Hermitian eigenvalues.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::hilbert::CMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("coefficient matrix is singular")]
    Singular,
    #[error("sparse assembly failed: {0}")]
    Assembly(String),
}

/// Which LU factorization handled a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factorization {
    Dense,
    Sparse,
}

/// Relative pivot size below which a dense factorization is declared
/// singular.
const PIVOT_RTOL: f64 = 1e-13;

/// Solves `A x = rhs` for a square matrix given as `(row, col, value)`
/// triplets. Duplicate positions are summed.
pub fn solve_triplets(
    n: usize,
    triplets: &[(usize, usize, C64)],
    rhs: &[C64],
    dense_limit: usize,
) -> Result<(Vec<C64>, Factorization), LinalgError> {
    assert_eq!(rhs.len(), n, "right-hand side length");
    let b = Mat::<C64>::from_fn(n, 1, |i, _| rhs[i]);
    let (x, how) = if n < dense_limit {
        let mut a = Mat::<C64>::zeros(n, n);
        for &(r, c, v) in triplets {
            a[(r, c)] += v;
        }
        let lu = a.partial_piv_lu();
        let u = lu.U();
        let pivots = (0..n).map(|k| u[(k, k)].norm());
        let (lo, hi) = pivots.fold((f64::INFINITY, 0.0_f64), |(lo, hi), p| (lo.min(p), hi.max(p)));
        if n > 0 && !(lo > PIVOT_RTOL * hi) {
            return Err(LinalgError::Singular);
        }
        (lu.solve(&b), Factorization::Dense)
    } else {
        let entries: Vec<_> = triplets.iter().map(|&(r, c, v)| Triplet::new(r, c, v)).collect();
        let a = SparseColMat::<usize, C64>::try_new_from_triplets(n, n, &entries)
            .map_err(|e| LinalgError::Assembly(format!("{e:?}")))?;
        let lu = a.sp_lu().map_err(|e| match e {
            faer::sparse::linalg::LuError::SymbolicSingular { .. } => LinalgError::Singular,
            other => LinalgError::Assembly(format!("{other:?}")),
        })?;
        (lu.solve(&b), Factorization::Sparse)
    };
    let out: Vec<C64> = (0..n).map(|i| x[(i, 0)]).collect();
    if out.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(LinalgError::Singular);
    }
    Ok((out, how))
}

/// Smallest eigenvalue of a Hermitian matrix (only the lower triangle is
/// read).
pub fn min_hermitian_eigenvalue(m: &CMatrix) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    let a = Mat::<C64>::from_fn(n, n, |r, c| m[[r, c]]);
    match a.self_adjoint_eigenvalues(Side::Lower) {
        Ok(vals) => vals.into_iter().fold(f64::INFINITY, f64::min),
        Err(_) => f64::NAN,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn dense_and_sparse_agree() {
        let n = 5;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, C64::new(4.0 + i as f64, 1.0)));
            if i + 1 < n {
                t.push((i, i + 1, c(-1.0)));
                t.push((i + 1, i, C64::new(0.5, -0.5)));
            }
        }
        let rhs: Vec<C64> = (0..n).map(|i| C64::new(i as f64, 1.0)).collect();
        let (xd, hd) = solve_triplets(n, &t, &rhs, usize::MAX).unwrap();
        let (xs, hs) = solve_triplets(n, &t, &rhs, 0).unwrap();
        assert_eq!((hd, hs), (Factorization::Dense, Factorization::Sparse));
        for (a, b) in xd.iter().zip(&xs) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn singular_is_reported() {
        let t = vec![(0, 0, c(1.0)), (0, 1, c(1.0)), (1, 0, c(1.0)), (1, 1, c(1.0))];
        assert_eq!(solve_triplets(2, &t, &[c(1.0), c(0.0)], usize::MAX), Err(LinalgError::Singular));
        let t = vec![(0, 0, c(1.0))];
        assert_eq!(solve_triplets(2, &t, &[c(1.0), c(0.0)], 0), Err(LinalgError::Singular));
    }

    #[test]
    fn eigenvalue_of_diagonal() {
        let m = CMatrix::from_diag(&ndarray::arr1(&[c(0.3), c(-0.2), c(0.9)]));
        assert!((min_hermitian_eigenvalue(&m) + 0.2).abs() < 1e-14);
    }
}
