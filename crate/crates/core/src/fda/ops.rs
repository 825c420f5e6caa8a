//! Quadrature inner products on the grid and restriction to subdomains.

use super::{DomainMask, Grid};
use crate::error::{FggmError, Result};

/// A grid function restricted to the observed points of a mask, together
/// with the quadrature weights of those points.
#[derive(Clone, Debug, PartialEq)]
pub struct Restricted {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Restricted {
    pub fn norm_sq(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| w * v * v)
            .sum()
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Trapezoid approximation of `∫_S f g`, where `S` is the observed part of
/// `mask` or the whole interval when no mask is given.
pub fn inner_product(grid: &Grid, f: &[f64], g: &[f64], mask: Option<&DomainMask>) -> Result<f64> {
    grid.check_len(f, "f")?;
    grid.check_len(g, "g")?;
    match mask {
        None => Ok(grid
            .weights()
            .iter()
            .zip(f.iter().zip(g))
            .map(|(w, (a, b))| w * a * b)
            .sum()),
        Some(m) => {
            if m.len() != grid.len() {
                return Err(FggmError::dim(format!(
                    "mask has {} points, grid has {}",
                    m.len(),
                    grid.len()
                )));
            }
            Ok(grid
                .weights()
                .iter()
                .enumerate()
                .filter(|(k, _)| m.is_observed(*k))
                .map(|(k, w)| w * f[k] * g[k])
                .sum())
        }
    }
}

/// Inner product on the p-fold product space: the sum of the coordinate
/// inner products, each restricted to its own mask when masks are given.
pub fn vector_inner_product<F, G>(
    grid: &Grid,
    f: &[F],
    g: &[G],
    masks: Option<&[DomainMask]>,
) -> Result<f64>
where
    F: AsRef<[f64]>,
    G: AsRef<[f64]>,
{
    if f.len() != g.len() {
        return Err(FggmError::dim(format!(
            "vector functions have {} and {} coordinates",
            f.len(),
            g.len()
        )));
    }
    if let Some(m) = masks {
        if m.len() != f.len() {
            return Err(FggmError::dim(format!(
                "{} masks for {} coordinates",
                m.len(),
                f.len()
            )));
        }
    }
    let mut total = 0.0;
    for j in 0..f.len() {
        let mask = masks.map(|m| &m[j]);
        total += inner_product(grid, f[j].as_ref(), g[j].as_ref(), mask)?;
    }
    Ok(total)
}

/// Restricts `f` to the observed domain of `mask`.
pub fn restrict(grid: &Grid, f: &[f64], mask: &DomainMask) -> Result<Restricted> {
    grid.check_len(f, "f")?;
    if mask.len() != grid.len() {
        return Err(FggmError::dim("mask and grid lengths differ"));
    }
    let indices = mask.observed_indices();
    if indices.is_empty() {
        return Err(FggmError::EmptyDomain("restriction to empty mask".into()));
    }
    let values = indices.iter().map(|&k| f[k]).collect();
    let weights = indices.iter().map(|&k| grid.weights()[k]).collect();
    Ok(Restricted {
        indices,
        values,
        weights,
    })
}
