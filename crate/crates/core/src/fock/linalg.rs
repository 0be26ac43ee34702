use nalgebra::SymmetricEigen;

use super::CMatrix;
use crate::error::{Error, Result};

/// `(H + H†) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// `max |H_ij − conj(H_ji)|`.
pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    let (r, c) = m.shape();
    if r != c {
        return f64::INFINITY;
    }
    let mut worst = 0.0f64;
    for i in 0..r {
        for j in i..c {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Smallest eigenvalue of a Hermitian matrix, symmetrized first.
pub fn min_eigenvalue(m: &CMatrix) -> Result<f64> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidArgument(format!(
            "matrix is not square: {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    if m.nrows() == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    let eig = SymmetricEigen::new(hermitian_part(m));
    Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Smallest eigenvalue with its (unit) eigenvector.
pub fn smallest_eigenpair(m: &CMatrix) -> Result<(f64, nalgebra::DVector<super::C64>)> {
    min_eigenvalue(m)?;
    let eig = SymmetricEigen::new(hermitian_part(m));
    let (idx, val) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    Ok((val, eig.eigenvectors.column(idx).into_owned()))
}
