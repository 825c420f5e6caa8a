//! Functional principal component scores: the observed-domain part, the
//! imputed missing-domain part and the layerwise sample covariances.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FggmError, Result};
use crate::fda::FunctionalDataset;
use crate::moments::{EigenSystem, MeanField};

/// Dense `n x p x L` array indexed `[i][j][l]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreArray {
    n: usize,
    p: usize,
    l: usize,
    values: Vec<f64>,
}

impl ScoreArray {
    pub fn zeros(n: usize, p: usize, l: usize) -> Self {
        ScoreArray {
            n,
            p,
            l,
            values: vec![0.0; n * p * l],
        }
    }

    pub fn from_vec(n: usize, p: usize, l: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * p * l {
            return Err(FggmError::dim(format!(
                "{} score values for shape {n}x{p}x{l}",
                values.len()
            )));
        }
        Ok(ScoreArray { n, p, l, values })
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.n, self.p, self.l)
    }

    pub fn get(&self, i: usize, j: usize, l: usize) -> f64 {
        self.values[(i * self.p + j) * self.l + l]
    }

    pub fn set(&mut self, i: usize, j: usize, l: usize, v: f64) {
        self.values[(i * self.p + j) * self.l + l] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Sample `i` as a `p x L` matrix.
    pub fn sample(&self, i: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.p, self.l, |j, l| self.get(i, j, l))
    }

    pub fn set_sample(&mut self, i: usize, m: &DMatrix<f64>) {
        for j in 0..self.p {
            for l in 0..self.l {
                self.set(i, j, l, m[(j, l)]);
            }
        }
    }

    /// Layer `l` as an `n x p` matrix.
    pub fn layer(&self, l: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.p, |i, j| self.get(i, j, l))
    }
}

/// Completed scores `ξ̂ = ξ̂^o + μ̂^{m|o}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreSet {
    xi_obs: ScoreArray,
    mu_miss: ScoreArray,
    xi_hat: ScoreArray,
}

impl ScoreSet {
    pub fn new(xi_obs: ScoreArray, mu_miss: ScoreArray) -> Result<Self> {
        if xi_obs.shape() != mu_miss.shape() {
            return Err(FggmError::dim(format!(
                "observed scores {:?} and imputed scores {:?} differ in shape",
                xi_obs.shape(),
                mu_miss.shape()
            )));
        }
        let sum = xi_obs
            .values
            .iter()
            .zip(&mu_miss.values)
            .map(|(a, b)| a + b)
            .collect();
        let (n, p, l) = xi_obs.shape();
        let xi_hat = ScoreArray::from_vec(n, p, l, sum)?;
        Ok(ScoreSet {
            xi_obs,
            mu_miss,
            xi_hat,
        })
    }

    pub fn xi_obs(&self) -> &ScoreArray {
        &self.xi_obs
    }

    pub fn mu_miss(&self) -> &ScoreArray {
        &self.mu_miss
    }

    pub fn xi_hat(&self) -> &ScoreArray {
        &self.xi_hat
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        self.xi_hat.shape()
    }
}

/// `ξ̂^o_{ijl}`: quadrature inner product of the centered observed fragment
/// with `φ̂_l` over the observed domain.
pub fn observed_scores(
    data: &FunctionalDataset,
    eig: &EigenSystem,
    mean: &MeanField,
) -> Result<ScoreArray> {
    let (n, p, d) = (data.n(), data.p(), data.d());
    if mean.p() != p || mean.d() != d || eig.function(0).len() != d {
        return Err(FggmError::dim("mean field or eigen system does not match the dataset"));
    }
    let layers = eig.n_components();
    let w = data.grid().weights();
    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            (0..p).flat_map(move |j| {
                let x = data.curve(i, j);
                let mask = data.mask(i, j);
                let mu = mean.curve(j);
                (0..layers).map(move |l| {
                    let phi = eig.function(l);
                    (0..d)
                        .filter(|&k| mask.is_observed(k))
                        .map(|k| w[k] * (x[k] - mu[k]) * phi[k])
                        .sum::<f64>()
                })
            })
        })
        .collect();
    ScoreArray::from_vec(n, p, layers, values)
}

/// `S_l = n^{-1} Σ_i ξ̂_{il} ξ̂_{il}ᵀ` for each layer.
pub fn sample_covariances(scores: &ScoreSet) -> Vec<DMatrix<f64>> {
    let xi = scores.xi_hat();
    let (n, _, layers) = xi.shape();
    (0..layers)
        .map(|l| {
            let m = xi.layer(l);
            let mut s = m.tr_mul(&m) / n as f64;
            crate::linalg::symmetrize(&mut s);
            s
        })
        .collect()
}
