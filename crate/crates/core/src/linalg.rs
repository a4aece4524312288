//! Thin dense linear-algebra layer over `faer`.
//!
//! Matrices cross this boundary as row-major `f64` slices so the rest of the
//! crate never touches `faer` types directly.

use faer::{linalg::solvers::Solve, Mat, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Full eigendecomposition of a real symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    vectors: Mat<f64>,
}

impl SymmetricEigen {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Component `row` of eigenvector `k`.
    #[inline]
    pub fn component(&self, row: usize, k: usize) -> f64 {
        self.vectors[(row, k)]
    }

    pub fn vector(&self, k: usize) -> Vec<f64> {
        (0..self.dim()).map(|r| self.vectors[(r, k)]).collect()
    }

    /// Coefficients `U^T x` of a complex vector in the eigenbasis.
    pub fn to_eigenbasis(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        (0..n)
            .map(|k| {
                let col = self.vectors.col(k);
                let mut acc = Complex64::new(0.0, 0.0);
                for r in 0..n {
                    acc += x[r] * col[r];
                }
                acc
            })
            .collect()
    }

    /// `U c` for eigenbasis coefficients `c`.
    pub fn from_eigenbasis(&self, c: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (k, &ck) in c.iter().enumerate() {
            let col = self.vectors.col(k);
            for r in 0..n {
                out[r] += ck * col[r];
            }
        }
        out
    }
}

fn to_mat(matrix: &[f64], n: usize) -> Result<Mat<f64>> {
    if matrix.len() != n * n {
        return Err(Error::Dimension(format!(
            "expected {n}x{n} = {} entries, got {}",
            n * n,
            matrix.len()
        )));
    }
    Ok(Mat::from_fn(n, n, |i, j| matrix[i * n + j]))
}

/// Eigendecomposition of a symmetric `n x n` row-major matrix (lower triangle is read).
pub fn symmetric_eigen(matrix: &[f64], n: usize) -> Result<SymmetricEigen> {
    let a = to_mat(matrix, n)?;
    symmetric_eigen_mat(a)
}

/// Eigendecomposition of the symmetric matrix with entries `f(i, j)`, built
/// in place without an intermediate row-major copy.
pub fn symmetric_eigen_from_fn(
    n: usize,
    f: impl Fn(usize, usize) -> f64,
) -> Result<SymmetricEigen> {
    symmetric_eigen_mat(Mat::from_fn(n, n, f))
}

fn symmetric_eigen_mat(a: Mat<f64>) -> Result<SymmetricEigen> {
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::IllConditioned(format!("eigensolver failed: {e:?}")))?;
    let values = evd.S().column_vector().iter().copied().collect();
    Ok(SymmetricEigen {
        values,
        vectors: evd.U().to_owned(),
    })
}

/// Eigenvalues only, ascending.
pub fn symmetric_eigenvalues(matrix: &[f64], n: usize) -> Result<Vec<f64>> {
    let a = to_mat(matrix, n)?;
    a.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::IllConditioned(format!("eigensolver failed: {e:?}")))
}

/// Solves `A x = b` for a square row-major `A` with partial-pivoting LU.
pub fn solve(a: &[f64], n: usize, b: &[f64]) -> Result<Vec<f64>> {
    let m = to_mat(a, n)?;
    if b.len() != n {
        return Err(Error::Dimension(format!(
            "rhs has {} entries, expected {n}",
            b.len()
        )));
    }
    let rhs = Mat::from_fn(n, 1, |i, _| b[i]);
    let x = m.partial_piv_lu().solve(&rhs);
    let out: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::IllConditioned("singular linear system".into()));
    }
    Ok(out)
}

/// `exp(-i t T) e_1` for a real symmetric tridiagonal `T` given by its
/// diagonal and off-diagonal.
pub(crate) fn tridiagonal_expm_first_column(
    diag: &[f64],
    offdiag: &[f64],
    t: f64,
) -> Result<Vec<Complex64>> {
    let m = diag.len();
    let mut dense = vec![0.0; m * m];
    for i in 0..m {
        dense[i * m + i] = diag[i];
        if i + 1 < m {
            dense[i * m + i + 1] = offdiag[i];
            dense[(i + 1) * m + i] = offdiag[i];
        }
    }
    let eig = symmetric_eigen(&dense, m)?;
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    for k in 0..m {
        let w = eig.component(0, k);
        let phase = Complex64::from_polar(1.0, -eig.values[k] * t);
        for (r, o) in out.iter_mut().enumerate() {
            *o += phase * (w * eig.component(r, k));
        }
    }
    Ok(out)
}

pub(crate) fn norm(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_of_diagonal_is_sorted() {
        let m = [3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0];
        let e = symmetric_eigen(&m, 3).unwrap();
        assert_eq!(e.values.len(), 3);
        for (got, want) in e.values.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn pauli_x_eigenvalues() {
        let e = symmetric_eigenvalues(&[0.0, 1.0, 1.0, 0.0], 2).unwrap();
        assert!((e[0] + 1.0).abs() < 1e-14 && (e[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn solve_small_system() {
        let x = solve(&[2.0, 1.0, 1.0, 3.0], 2, &[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14 && (x[1] - 1.4).abs() < 1e-14);
    }

    #[test]
    fn tridiagonal_exp_two_level() {
        // exp(-i t X) e1 = (cos t, -i sin t)
        let v = tridiagonal_expm_first_column(&[0.0, 0.0], &[1.0], 0.7).unwrap();
        assert!((v[0] - Complex64::new(0.7f64.cos(), 0.0)).norm() < 1e-14);
        assert!((v[1] - Complex64::new(0.0, -(0.7f64.sin()))).norm() < 1e-14);
    }
}
