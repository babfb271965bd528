//! Small dense helpers: Kronecker products and guarded SPD inversion.

use nalgebra::{DMatrix, DVector};

use crate::error::{DesignError, Result};

/// Relative eigenvalue floor below which an information matrix is treated as singular.
const SINGULAR_RCOND: f64 = 1e-13;

/// Lexicographic Kronecker product: `(a ⊗ b)[i * n + j] = a[i] * b[j]`.
pub fn kron_vec(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = b.len();
    DVector::from_fn(a.len() * n, |idx, _| a[idx / n] * b[idx % n])
}

pub fn kron_mat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// Inverts a symmetric positive-definite matrix.
///
/// Fails with [`DesignError::SingularDesign`] when the Cholesky factorization
/// breaks down or the matrix is numerically rank deficient; there is no
/// pseudo-inverse fallback.
pub fn spd_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_rank(m)?;
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| singular_direction(m))?;
    let inv = chol.inverse();
    Ok(symmetrize(&inv))
}

/// Solves `m x = rhs` for SPD `m` with the same singularity policy as [`spd_inverse`].
pub fn spd_solve(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    check_rank(m)?;
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| singular_direction(m))?;
    Ok(chol.solve(rhs))
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    m.is_square() && (m - m.transpose()).amax() <= tol * m.amax().max(1.0)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

fn check_rank(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() == 0 || !m.is_square() {
        return Err(DesignError::Config(format!(
            "expected a non-empty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let eig = m.clone().symmetric_eigenvalues();
    let max = eig.iter().copied().fold(0.0_f64, |a, b| a.max(b.abs()));
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    if !(max > 0.0) || min <= SINGULAR_RCOND * max {
        return Err(singular_direction(m));
    }
    Ok(())
}

fn singular_direction(m: &DMatrix<f64>) -> DesignError {
    let eig = m.clone().symmetric_eigen();
    let (idx, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    let mut direction: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
    // sign convention: largest component positive
    if let Some(&big) = direction
        .iter()
        .max_by(|a, b| a.abs().total_cmp(&b.abs()))
    {
        if big < 0.0 {
            direction.iter_mut().for_each(|v| *v = -*v);
        }
    }
    DesignError::SingularDesign { direction }
}
