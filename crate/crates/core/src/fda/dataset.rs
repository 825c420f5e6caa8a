use super::{DomainMask, Grid};
use crate::error::{FggmError, Result};

/// `n` multivariate observations of `p` curves each, evaluated on a common
/// grid of `d` points.
///
/// Values at missing grid points are stored as `NaN`; every estimator reads
/// the masks to decide what is observed. Equality compares values bitwise,
/// so two datasets with the same masks and observations are equal.
#[derive(Clone, Debug)]
pub struct FunctionalDataset {
    n: usize,
    p: usize,
    grid: Grid,
    values: Vec<f64>,
    masks: Vec<DomainMask>,
}

impl PartialEq for FunctionalDataset {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.p == other.p
            && self.grid == other.grid
            && self.masks == other.masks
            && self.values.iter().zip(&other.values).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl FunctionalDataset {
    /// Builds a dataset from row-major values (`[i][j][k]`) and one mask per
    /// `(i, j)` curve. Missing points are overwritten with `NaN`.
    pub fn new(
        grid: Grid,
        n: usize,
        p: usize,
        mut values: Vec<f64>,
        masks: Vec<DomainMask>,
    ) -> Result<Self> {
        let d = grid.len();
        if n == 0 || p == 0 {
            return Err(FggmError::InvalidParameter(
                "dataset needs n >= 1 and p >= 1".into(),
            ));
        }
        if values.len() != n * p * d {
            return Err(FggmError::dim(format!(
                "expected {} values for n={n}, p={p}, d={d}, got {}",
                n * p * d,
                values.len()
            )));
        }
        if masks.len() != n * p {
            return Err(FggmError::dim(format!(
                "expected {} masks, got {}",
                n * p,
                masks.len()
            )));
        }
        for (c, mask) in masks.iter().enumerate() {
            if mask.len() != d {
                return Err(FggmError::dim(format!(
                    "mask of curve ({}, {}) has {} points, grid has {d}",
                    c / p,
                    c % p,
                    mask.len()
                )));
            }
            for k in 0..d {
                let v = &mut values[c * d + k];
                if !mask.is_observed(k) {
                    *v = f64::NAN;
                } else if !v.is_finite() {
                    return Err(FggmError::InvalidParameter(format!(
                        "non-finite observed value at sample {}, variable {}, grid index {k}",
                        c / p,
                        c % p
                    )));
                }
            }
        }
        Ok(FunctionalDataset {
            n,
            p,
            grid,
            values,
            masks,
        })
    }

    pub fn complete(grid: Grid, n: usize, p: usize, values: Vec<f64>) -> Result<Self> {
        let masks = vec![DomainMask::full(grid.len()); n * p];
        Self::new(grid, n, p, values, masks)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn d(&self) -> usize {
        self.grid.len()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn masks(&self) -> &[DomainMask] {
        &self.masks
    }

    pub fn curve(&self, i: usize, j: usize) -> &[f64] {
        let d = self.d();
        let start = (i * self.p + j) * d;
        &self.values[start..start + d]
    }

    pub fn mask(&self, i: usize, j: usize) -> &DomainMask {
        &self.masks[i * self.p + j]
    }

    pub fn row_masks(&self, i: usize) -> &[DomainMask] {
        &self.masks[i * self.p..(i + 1) * self.p]
    }

    pub fn is_complete_row(&self, i: usize) -> bool {
        self.row_masks(i).iter().all(DomainMask::is_full)
    }

    /// Indices of the observations whose `p` curves are all fully observed.
    pub fn complete_rows(&self) -> Vec<usize> {
        (0..self.n).filter(|&i| self.is_complete_row(i)).collect()
    }

    pub fn is_fully_observed(&self) -> bool {
        self.masks.iter().all(DomainMask::is_full)
    }

    /// Re-applies a new set of masks; previously missing values stay `NaN`.
    pub fn with_masks(&self, masks: Vec<DomainMask>) -> Result<Self> {
        Self::new(self.grid.clone(), self.n, self.p, self.values.clone(), masks)
    }

    /// Fraction of univariate curves that are partially observed.
    pub fn partial_fraction(&self) -> f64 {
        let partial = self.masks.iter().filter(|m| !m.is_full()).count();
        partial as f64 / self.masks.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_values_become_nan() {
        let grid = Grid::new(4).unwrap();
        let masks = vec![
            DomainMask::new(vec![true, false, true, true]).unwrap(),
            DomainMask::full(4),
        ];
        let data = FunctionalDataset::new(grid, 1, 2, vec![1.0; 8], masks).unwrap();
        assert!(data.curve(0, 0)[1].is_nan());
        assert_eq!(data.curve(0, 1), &[1.0; 4]);
        assert!(!data.is_complete_row(0));
        assert!(data.complete_rows().is_empty());
    }

    #[test]
    fn shape_errors_are_reported() {
        let grid = Grid::new(4).unwrap();
        assert!(FunctionalDataset::complete(grid.clone(), 2, 2, vec![0.0; 15]).is_err());
        let masks = vec![DomainMask::full(4); 3];
        assert!(FunctionalDataset::new(grid, 2, 2, vec![0.0; 16], masks).is_err());
    }

    #[test]
    fn non_finite_observed_value_rejected() {
        let grid = Grid::new(3).unwrap();
        let err = FunctionalDataset::complete(grid, 1, 1, vec![0.0, f64::NAN, 1.0]).unwrap_err();
        assert!(matches!(err, FggmError::InvalidParameter(_)));
    }
}
