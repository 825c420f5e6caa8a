use nalgebra::DMatrix;

use crate::error::{FggmError, Result};
use crate::fda::{DomainMask, Grid};
use crate::moments::{CovarianceField, EigenSystem};

/// Observed and missing index sets of one multivariate observation,
/// flattened as `h * d + s`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ObservedPattern {
    masks: Vec<DomainMask>,
    observed: Vec<usize>,
    missing: Vec<usize>,
}

impl ObservedPattern {
    pub fn new(masks: &[DomainMask]) -> Result<Self> {
        let d = masks
            .first()
            .map(DomainMask::len)
            .ok_or_else(|| FggmError::dim("pattern needs at least one variable"))?;
        if masks.iter().any(|m| m.len() != d) {
            return Err(FggmError::dim("pattern masks have different lengths"));
        }
        let mut observed = Vec::new();
        let mut missing = Vec::new();
        for (h, mask) in masks.iter().enumerate() {
            for k in 0..d {
                if mask.is_observed(k) {
                    observed.push(h * d + k);
                } else {
                    missing.push(h * d + k);
                }
            }
        }
        if observed.is_empty() {
            return Err(FggmError::EmptyDomain("pattern has no observed point".into()));
        }
        Ok(ObservedPattern {
            masks: masks.to_vec(),
            observed,
            missing,
        })
    }

    pub fn p(&self) -> usize {
        self.masks.len()
    }

    pub fn d(&self) -> usize {
        self.masks[0].len()
    }

    pub fn masks(&self) -> &[DomainMask] {
        &self.masks
    }

    pub fn observed(&self) -> &[usize] {
        &self.observed
    }

    pub fn missing(&self) -> &[usize] {
        &self.missing
    }

    pub fn m_o(&self) -> usize {
        self.observed.len()
    }

    pub fn m_m(&self) -> usize {
        self.missing.len()
    }

    pub fn is_complete(&self) -> bool {
        self.missing.is_empty()
    }

    /// Flattened observed indices of variable `j` alone.
    pub fn observed_of(&self, j: usize) -> Vec<usize> {
        let d = self.d();
        self.masks[j].observed_indices().into_iter().map(|k| j * d + k).collect()
    }

    /// Flattened missing indices of variable `j` alone.
    pub fn missing_of(&self, j: usize) -> Vec<usize> {
        let d = self.d();
        self.masks[j].missing_indices().into_iter().map(|k| j * d + k).collect()
    }

    pub(crate) fn check_against(&self, cov: &CovarianceField, grid: &Grid) -> Result<()> {
        if self.p() != cov.p() || self.d() != cov.d() || self.d() != grid.len() {
            return Err(FggmError::dim(format!(
                "pattern is {}x{}, covariance {}x{}, grid {}",
                self.p(),
                self.d(),
                cov.p(),
                cov.d(),
                grid.len()
            )));
        }
        Ok(())
    }
}

/// Quadrature weight of every flattened index `h * d + s`.
pub(crate) fn flat_weights(grid: &Grid, p: usize) -> Vec<f64> {
    let w = grid.weights();
    (0..p).flat_map(|_| w.iter().copied()).collect()
}

/// The observed-block operator `C^{OO}` as a matrix: kernel entries on
/// `O x O`, each column scaled by the quadrature weight of its point.
pub fn build_observed_block(
    cov: &CovarianceField,
    grid: &Grid,
    pattern: &ObservedPattern,
) -> Result<DMatrix<f64>> {
    pattern.check_against(cov, grid)?;
    let w = flat_weights(grid, cov.p());
    let o = pattern.observed();
    let k = cov.kernel();
    Ok(DMatrix::from_fn(o.len(), o.len(), |a, b| k[(o[a], o[b])] * w[o[b]]))
}

/// Right-hand side `R_l`: column `j` is `C_{hj}^{O_h M_j}` applied to the
/// restriction of `φ_l` to `M_j`, stacked over `h`.
pub fn build_r(
    cov: &CovarianceField,
    grid: &Grid,
    pattern: &ObservedPattern,
    eig: &EigenSystem,
    l: usize,
) -> Result<DMatrix<f64>> {
    pattern.check_against(cov, grid)?;
    if l >= eig.n_components() {
        return Err(FggmError::InvalidParameter(format!(
            "layer {l} outside the {} retained components",
            eig.n_components()
        )));
    }
    let targets: Vec<(usize, Vec<usize>)> =
        (0..cov.p()).map(|j| (j, pattern.missing_of(j))).collect();
    Ok(rhs_matrix(cov.kernel(), grid, pattern.observed(), &targets, eig, &[l]))
}

/// Stacked right-hand sides for the given target variables and layers.
/// Column order is target-major: `(target, layer)`.
pub(crate) fn rhs_matrix(
    kernel: &DMatrix<f64>,
    grid: &Grid,
    observed: &[usize],
    targets: &[(usize, Vec<usize>)],
    eig: &EigenSystem,
    layers: &[usize],
) -> DMatrix<f64> {
    let d = grid.len();
    let w = grid.weights();
    let mut r = DMatrix::zeros(observed.len(), targets.len() * layers.len());
    for (ti, (_, miss)) in targets.iter().enumerate() {
        for (li, &l) in layers.iter().enumerate() {
            let phi = eig.function(l);
            let coef: Vec<(usize, f64)> = miss.iter().map(|&c| (c, w[c % d] * phi[c % d])).collect();
            let col = ti * layers.len() + li;
            for (a, &o) in observed.iter().enumerate() {
                r[(a, col)] = coef.iter().map(|&(c, f)| kernel[(o, c)] * f).sum();
            }
        }
    }
    r
}
