use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::pattern::{flat_weights, ObservedPattern};
use crate::error::{FggmError, Result};
use crate::fda::Grid;
use crate::linalg;
use crate::moments::CovarianceField;

/// Spectral factorization of one observed-block operator.
///
/// With `D = diag(√w_O)` the weighted block `C^{OO} W` is similar to the
/// symmetric `S = D C^{OO} D = V Λ Vᵀ`, so for every ridge value
/// `(C^{OO} W + α I)^{-1} = D^{-1} V (Λ + α)^{-1} Vᵀ D`. One decomposition
/// therefore serves the whole α grid.
#[derive(Clone, Debug)]
pub struct PatternSpectrum {
    observed: Vec<usize>,
    missing: Vec<usize>,
    sqrt_w_o: DVector<f64>,
    w_m: DVector<f64>,
    values: DVector<f64>,
    vectors: DMatrix<f64>,
    /// `C^{MO} D V`, the missing-block image of the eigenbasis.
    cross: DMatrix<f64>,
}

impl PatternSpectrum {
    /// Factorizes the sub-operator on `observed`, with `missing` as the
    /// reconstruction target. Indices are flattened `h * d + s`.
    pub(crate) fn from_indices(
        kernel: &DMatrix<f64>,
        weights: &[f64],
        observed: Vec<usize>,
        missing: Vec<usize>,
    ) -> Result<Self> {
        if observed.is_empty() {
            return Err(FggmError::EmptyDomain("ridge system without observed points".into()));
        }
        let m_o = observed.len();
        let sqrt_w_o = DVector::from_iterator(m_o, observed.iter().map(|&c| weights[c].sqrt()));
        let w_m = DVector::from_iterator(missing.len(), missing.iter().map(|&c| weights[c]));
        let s = DMatrix::from_fn(m_o, m_o, |a, b| {
            sqrt_w_o[a] * kernel[(observed[a], observed[b])] * sqrt_w_o[b]
        });
        let (mut values, vectors) = linalg::sym_eigen(&s)?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FggmError::Numerical("non-finite eigenvalue in observed block".into()));
        }
        values.iter_mut().for_each(|v| *v = v.max(0.0));
        let k_mo_d = DMatrix::from_fn(missing.len(), m_o, |a, b| {
            kernel[(missing[a], observed[b])] * sqrt_w_o[b]
        });
        let cross = k_mo_d * &vectors;
        Ok(PatternSpectrum {
            observed,
            missing,
            sqrt_w_o,
            w_m,
            values,
            vectors,
            cross,
        })
    }

    pub fn new(cov: &CovarianceField, grid: &Grid, pattern: &ObservedPattern) -> Result<Self> {
        pattern.check_against(cov, grid)?;
        let w = flat_weights(grid, cov.p());
        Self::from_indices(
            cov.kernel(),
            &w,
            pattern.observed().to_vec(),
            pattern.missing().to_vec(),
        )
    }

    pub fn observed(&self) -> &[usize] {
        &self.observed
    }

    pub fn missing(&self) -> &[usize] {
        &self.missing
    }

    /// Eigenvalues of the observed-block operator, non-increasing, ≥ 0.
    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn effective_df(&self, alpha: f64) -> f64 {
        self.values.iter().map(|&l| l / (l + alpha)).sum()
    }

    /// `(C^{OO} W + α I)^{-1} rhs`.
    pub fn solve(&self, alpha: f64, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        let mut y = self.vectors.tr_mul(&scale_rows(rhs, &self.sqrt_w_o));
        self.shrink(alpha, &mut y);
        let mut x = &self.vectors * y;
        for (a, mut row) in x.row_iter_mut().enumerate() {
            row /= self.sqrt_w_o[a];
        }
        x
    }

    fn shrink(&self, alpha: f64, y: &mut DMatrix<f64>) {
        for (k, mut row) in y.row_iter_mut().enumerate() {
            row /= self.values[k] + alpha;
        }
    }

    /// Linear map from centered observed values to the reconstruction on the
    /// missing points: `C^{MO} W (C^{OO} W + α I)^{-1}`.
    pub fn reconstruction_map(&self, alpha: f64) -> DMatrix<f64> {
        let mut g = self.cross.clone();
        for (k, mut col) in g.column_iter_mut().enumerate() {
            col /= self.values[k] + alpha;
        }
        let mut out = g * self.vectors.transpose();
        for (b, mut col) in out.column_iter_mut().enumerate() {
            col *= self.sqrt_w_o[b];
        }
        out
    }

    /// Summed squared reconstruction error on the missing points, one value
    /// per α, for donor columns whose observed and missing parts are given.
    ///
    /// The error is a quadratic form in `d_k = 1 / (λ_k + α)`, so the
    /// donor-dependent pieces are formed once for the whole grid.
    pub fn donor_errors(
        &self,
        donors_o: &DMatrix<f64>,
        donors_m: &DMatrix<f64>,
        alphas: &[f64],
    ) -> Vec<f64> {
        let y = self.vectors.tr_mul(&scale_rows(donors_o, &self.sqrt_w_o));
        let wg = scale_rows(&self.cross, &self.w_m);
        let gram = self.cross.tr_mul(&wg);
        let yy = &y * y.transpose();
        let linear = wg.tr_mul(donors_m).component_mul(&y).column_sum();
        let constant: f64 = donors_m
            .column_iter()
            .map(|c| c.iter().zip(self.w_m.iter()).map(|(v, w)| w * v * v).sum::<f64>())
            .sum();
        let quad = gram.component_mul(&yy);
        alphas
            .iter()
            .map(|&alpha| {
                let dk = self.values.map(|l| 1.0 / (l + alpha));
                let q = dk.dot(&(&quad * &dk));
                (constant - 2.0 * dk.dot(&linear) + q).max(0.0)
            })
            .collect()
    }
}

fn scale_rows(m: &DMatrix<f64>, s: &DVector<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for (a, mut row) in out.row_iter_mut().enumerate() {
        row *= s[a];
    }
    out
}

/// A pattern factorization bound to one ridge value.
#[derive(Clone, Debug)]
pub struct RidgeSolveCache {
    spectrum: Arc<PatternSpectrum>,
    alpha: f64,
}

impl RidgeSolveCache {
    pub fn new(spectrum: Arc<PatternSpectrum>, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(FggmError::InvalidParameter(format!("ridge value {alpha} must be positive")));
        }
        Ok(RidgeSolveCache { spectrum, alpha })
    }

    pub fn for_pattern(
        cov: &CovarianceField,
        grid: &Grid,
        pattern: &ObservedPattern,
        alpha: f64,
    ) -> Result<Self> {
        Self::new(Arc::new(PatternSpectrum::new(cov, grid, pattern)?), alpha)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn spectrum(&self) -> &PatternSpectrum {
        &self.spectrum
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(Arc::clone(&self.spectrum), alpha)
    }

    /// Ratio of the extreme shifted eigenvalues.
    pub fn condition_estimate(&self) -> f64 {
        let v = self.spectrum.values();
        (v[0] + self.alpha) / (v[v.len() - 1] + self.alpha)
    }
}

/// Regularized coefficients `B = (C^{OO} + α I)^{-1} R`.
pub fn solve_b(cache: &RidgeSolveCache, r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let s = cache.spectrum();
    if r.nrows() != s.observed().len() {
        return Err(FggmError::dim(format!(
            "right-hand side has {} rows, observed block {}",
            r.nrows(),
            s.observed().len()
        )));
    }
    let b = s.solve(cache.alpha(), r);
    if b.iter().any(|v| !v.is_finite()) {
        return Err(FggmError::Factorization {
            alpha: cache.alpha(),
            condition: cache.condition_estimate(),
        });
    }
    Ok(b)
}

/// `df(α) = Σ_k λ_k / (λ_k + α)` over the observed-block spectrum.
pub fn effective_df(cache: &RidgeSolveCache) -> f64 {
    cache.spectrum().effective_df(cache.alpha())
}
