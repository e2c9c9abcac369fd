use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{DenseMatrix, Error};

/// All eigenvalues of a real square matrix, via the real Schur form.
/// Triangular matrices short-circuit to their diagonal; the QR iteration
/// budget is bounded so degenerate inputs fail with an error instead of
/// spinning.
pub fn eigenvalues(m: &DenseMatrix) -> Result<Vec<Complex64>, Error> {
    let n = m.dim();
    if n == 0 {
        return Ok(Vec::new());
    }
    if is_triangular(m) {
        return Ok((0..n).map(|i| Complex64::new(m.get(i, i), 0.0)).collect());
    }
    let dm = DMatrix::from_row_slice(n, n, m.entries());
    let schur = nalgebra::linalg::Schur::try_new(dm, f64::EPSILON, 40 * n + 100)
        .ok_or(Error::NoConvergence)?;
    let vals = schur.complex_eigenvalues();
    Ok(vals.iter().map(|c| Complex64::new(c.re, c.im)).collect())
}

fn is_triangular(m: &DenseMatrix) -> bool {
    let n = m.dim();
    let mut upper = true;
    let mut lower = true;
    for i in 0..n {
        for j in 0..i {
            if m.get(i, j) != 0.0 {
                upper = false;
            }
            if m.get(j, i) != 0.0 {
                lower = false;
            }
        }
    }
    upper || lower
}
