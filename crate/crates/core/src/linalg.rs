//! Small dense linear-algebra helpers shared by the estimators.

use nalgebra::{DMatrix, DVector};

use crate::error::{FggmError, Result};

/// Matrices up to this order go through nalgebra, larger ones through faer.
const SMALL_EIGEN: usize = 48;

/// Symmetric eigendecomposition with eigenvalues in non-increasing order.
/// Only the lower triangle of `m` is read.
pub fn sym_eigen(m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(FggmError::dim("eigendecomposition of a non-square matrix"));
    }
    if n == 0 {
        return Ok((DVector::zeros(0), DMatrix::zeros(0, 0)));
    }
    let (vals, vecs) = if n <= SMALL_EIGEN {
        let sym = DMatrix::from_fn(n, n, |i, j| if i >= j { m[(i, j)] } else { m[(j, i)] });
        let e = sym.symmetric_eigen();
        (e.eigenvalues, e.eigenvectors)
    } else {
        let a = faer::Mat::<f64>::from_fn(n, n, |i, j| if i >= j { m[(i, j)] } else { m[(j, i)] });
        let evd = a
            .self_adjoint_eigen(faer::Side::Lower)
            .map_err(|e| FggmError::Numerical(format!("eigendecomposition failed: {e:?}")))?;
        let s = evd.S().column_vector();
        let u = evd.U();
        let vals = DVector::from_fn(n, |k, _| s[k]);
        let vecs = DMatrix::from_fn(n, n, |i, k| u[(i, k)]);
        (vals, vecs)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    let sorted_vals = DVector::from_fn(n, |k, _| vals[order[k]]);
    let sorted_vecs = DMatrix::from_fn(n, n, |i, k| vecs[(i, order[k])]);
    Ok((sorted_vals, sorted_vecs))
}

pub fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in (j + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// `log det` of a symmetric positive definite matrix via Cholesky.
pub fn log_det_pd(m: &DMatrix<f64>) -> Result<f64> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| FggmError::NotPositiveDefinite("Cholesky factorization failed".into()))?;
    Ok(2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>())
}

pub fn inverse_pd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| FggmError::NotPositiveDefinite("Cholesky factorization failed".into()))?;
    let mut inv = chol.inverse();
    symmetrize(&mut inv);
    Ok(inv)
}

pub fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    m.clone().cholesky().is_some()
}

pub fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `tr(A B)` for square matrices of equal order.
pub fn trace_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.transpose().iter()).map(|(x, y)| x * y).sum()
}
