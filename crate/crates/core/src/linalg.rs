//! Small dense linear algebra on top of nalgebra.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

/// Eigenvalues (ascending) and matching eigenvectors of a symmetric matrix.
pub(crate) fn symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Singular values, nonincreasing.
pub(crate) fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut sv: Vec<f64> = m
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

pub(crate) fn cholesky_solve(m: &DMatrix<f64>, rhs: &[f64]) -> Option<Vec<f64>> {
    let chol = m.clone().cholesky()?;
    let x = chol.solve(&DVector::from_column_slice(rhs));
    Some(x.iter().copied().collect())
}

pub(crate) fn cholesky_lower(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    m.clone().cholesky().map(|c| c.unpack())
}

/// Matrix exponential by scaling and squaring with a degree-18 Taylor
/// polynomial; the scaled matrix has 1-norm at most 1/2, where the truncation
/// error is below roundoff.
pub(crate) fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    let norm = (0..m.ncols())
        .map(|j| m.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.5 {
        scale *= 0.5;
        squarings += 1;
    }
    let a = m * scale;
    let n = m.nrows();
    let mut result = DMatrix::<f64>::identity(n, n);
    let mut term = DMatrix::<f64>::identity(n, n);
    for k in 1..=18 {
        term = &term * &a / k as f64;
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// `L^{-T}` for the Cholesky factor `L` of `m`; its columns combine functions
/// with Gram matrix `m` into an orthonormal family.
pub(crate) fn cholesky_orthonormalizer(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let l = cholesky_lower(m)?;
    l.transpose()
        .solve_upper_triangular(&DMatrix::identity(m.nrows(), m.ncols()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use libm::{cos, exp, sin};

    #[test]
    fn expm_of_rotation_and_diagonal() {
        let t = 7.3;
        let r = expm(&DMatrix::from_row_slice(2, 2, &[0.0, t, -t, 0.0]));
        assert!((r[(0, 0)] - cos(t)).abs() < 1e-13);
        assert!((r[(0, 1)] - sin(t)).abs() < 1e-13);
        assert!((r[(1, 0)] + sin(t)).abs() < 1e-13);
        let d = expm(&DMatrix::from_row_slice(2, 2, &[-3.0, 0.0, 0.0, 0.25]));
        assert!((d[(0, 0)] - exp(-3.0)).abs() < 1e-15);
        assert!((d[(1, 1)] / exp(0.25) - 1.0).abs() < 1e-14);
        assert_eq!(expm(&DMatrix::zeros(3, 3)), DMatrix::identity(3, 3));
    }

    #[test]
    fn orthonormalizer_whitens() {
        let g = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let c = cholesky_orthonormalizer(&g).unwrap();
        let w = c.transpose() * &g * &c;
        assert!((w - DMatrix::<f64>::identity(2, 2)).abs().max() < 1e-14);
    }
}
