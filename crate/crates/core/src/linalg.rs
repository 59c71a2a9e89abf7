//! Small dense complex linear algebra on top of nalgebra.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `max_ij |a_ij − b_ij|`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// `‖A†A − I‖_max`.
pub fn isometry_residual(a: &CMatrix) -> f64 {
    let gram = a.adjoint() * a;
    max_abs_diff(&gram, &CMatrix::identity(a.ncols(), a.ncols()))
}

/// Eigen-decomposition of a Hermitian matrix, with the input symmetrized
/// first so rounding asymmetry cannot leak into the result.
pub(crate) fn hermitian_eigen(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let sym = (h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::new(sym);
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// `U f(λ) U†` for a Hermitian `h = U λ U†`.
pub(crate) fn hermitian_function(values: &[f64], vectors: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let n = values.len();
    let mut scaled = vectors.clone();
    for (j, &lambda) in values.iter().enumerate() {
        let fl = f(lambda);
        for i in 0..n {
            scaled[(i, j)] *= fl;
        }
    }
    scaled * vectors.adjoint()
}

/// Determinant of a Hermitian positive-definite matrix, `None` when it is
/// not positive definite.
pub(crate) fn hermitian_pd_det(h: CMatrix) -> Option<f64> {
    // Complex Cholesky takes square roots of negative pivots without
    // complaint, so the pivots `l_ii²` are checked here.
    let chol = h.cholesky()?;
    let l = chol.l_dirty();
    let mut det = 1.0;
    for i in 0..l.nrows() {
        let d = l[(i, i)];
        let pivot = d * d;
        if !(pivot.re > 0.0 && pivot.re.is_finite()) || pivot.im.abs() > 1e-8 * pivot.re {
            return None;
        }
        det *= pivot.re;
    }
    Some(det)
}
