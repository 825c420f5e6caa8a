//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use fggm::fda::{DomainMask, Grid};
use fggm::moments::{CovarianceField, EigenSystem};
use fggm::simgen::fourier_basis;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// A finite-dimensional partially separable model: `X_j = Σ_l ξ_jl φ_l`
/// with `ξ_·l ~ N(0, Σ_l)` and a Fourier basis.
pub struct SeparableModel {
    pub grid: Grid,
    pub p: usize,
    pub basis: Vec<Vec<f64>>,
    pub sigmas: Vec<DMatrix<f64>>,
}

impl SeparableModel {
    pub fn random(p: usize, layers: usize, d: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = Grid::new(d).unwrap();
        let basis = fourier_basis(&grid, layers);
        let sigmas = (0..layers)
            .map(|l| {
                let a = DMatrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal));
                let scale = 3.0 / (l + 1) as f64;
                (&a * a.transpose() / p as f64 + DMatrix::identity(p, p) * 0.5) * scale
            })
            .collect();
        SeparableModel { grid, p, basis, sigmas }
    }

    pub fn d(&self) -> usize {
        self.grid.len()
    }

    pub fn layers(&self) -> usize {
        self.sigmas.len()
    }

    /// Population kernel `C_hk(s, t) = Σ_l Σ_l[h, k] φ_l(s) φ_l(t)`.
    pub fn covariance(&self) -> CovarianceField {
        let (p, d) = (self.p, self.d());
        let kernel = DMatrix::from_fn(p * d, p * d, |a, b| {
            let (h, s, k, t) = (a / d, a % d, b / d, b % d);
            (0..self.layers())
                .map(|l| self.sigmas[l][(h, k)] * self.basis[l][s] * self.basis[l][t])
                .sum()
        });
        CovarianceField::from_kernel(p, d, kernel).unwrap()
    }

    pub fn eigensystem(&self) -> EigenSystem {
        let values = self.sigmas.iter().map(|s| s.trace() / self.p as f64).collect();
        EigenSystem::from_parts(self.basis.clone(), values).unwrap()
    }

    /// Joint covariance of the stacked scores `z_{j L + l} = ξ_jl`.
    pub fn score_covariance(&self) -> DMatrix<f64> {
        let (p, big_l) = (self.p, self.layers());
        DMatrix::from_fn(p * big_l, p * big_l, |a, b| {
            let (h, l, k, m) = (a / big_l, a % big_l, b / big_l, b % big_l);
            if l == m {
                self.sigmas[l][(h, k)]
            } else {
                0.0
            }
        })
    }

    pub fn draw_scores(&self, rng: &mut impl Rng) -> DVector<f64> {
        let c = self.score_covariance().cholesky().unwrap();
        let z = DVector::from_fn(c.l().nrows(), |_, _| rng.sample::<f64, _>(StandardNormal));
        c.l() * z
    }

    /// Curves flattened as `j d + k`.
    pub fn curves(&self, z: &DVector<f64>) -> Vec<f64> {
        let (p, d, big_l) = (self.p, self.d(), self.layers());
        (0..p * d)
            .map(|c| (0..big_l).map(|l| z[(c / d) * big_l + l] * self.basis[l][c % d]).sum())
            .collect()
    }

    /// `E[ξ^m | X^O]` from the partitioned Gaussian: with `x^O = A z` and
    /// `ξ^m = G z`, the mean is `G Σ_z Aᵀ (A Σ_z Aᵀ)⁺ x^O`.
    pub fn conditional_missing_scores(&self, masks: &[DomainMask], x: &[f64]) -> DMatrix<f64> {
        let (p, d, big_l) = (self.p, self.d(), self.layers());
        let obs: Vec<usize> = (0..p * d).filter(|&c| masks[c / d].is_observed(c % d)).collect();
        let a = DMatrix::from_fn(obs.len(), p * big_l, |r, col| {
            let (j, k) = (obs[r] / d, obs[r] % d);
            if col / big_l == j {
                self.basis[col % big_l][k]
            } else {
                0.0
            }
        });
        let w = self.grid.weights();
        let g = DMatrix::from_fn(p * big_l, p * big_l, |r, col| {
            let (j, l, jj, m) = (r / big_l, r % big_l, col / big_l, col % big_l);
            if j != jj {
                return 0.0;
            }
            (0..d)
                .filter(|&k| !masks[j].is_observed(k))
                .map(|k| w[k] * self.basis[l][k] * self.basis[m][k])
                .sum()
        });
        let sz = self.score_covariance();
        let xo = DVector::from_iterator(obs.len(), obs.iter().map(|&c| x[c]));
        let cov_oo = &a * &sz * a.transpose();
        let eps = 1e-10 * cov_oo.norm();
        let pinv = cov_oo.pseudo_inverse(eps).unwrap();
        let mean = g * sz * a.transpose() * pinv * xo;
        DMatrix::from_fn(p, big_l, |j, l| mean[j * big_l + l])
    }
}

/// `Σ_l {tr(S_l Θ_l) − log det Θ_l} + γ1 Σ_{h≠k} {γ2 Σ_l |θ_hkl| + (1 − γ2) ‖θ_hk·‖}`,
/// or `None` when some layer is not positive definite.
pub fn jgl_objective(s: &[DMatrix<f64>], t: &[DMatrix<f64>], g1: f64, g2: f64) -> Option<f64> {
    let p = s[0].nrows();
    let mut f = 0.0;
    for (sl, tl) in s.iter().zip(t) {
        let chol = tl.clone().cholesky()?;
        let logdet: f64 = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        f += (sl * tl).trace() - logdet;
    }
    for h in 0..p {
        for k in 0..p {
            if h != k {
                let l1: f64 = t.iter().map(|m| m[(h, k)].abs()).sum();
                let l2: f64 = t.iter().map(|m| m[(h, k)].powi(2)).sum::<f64>().sqrt();
                f += g1 * (g2 * l1 + (1.0 - g2) * l2);
            }
        }
    }
    Some(f)
}

fn prox(z: &[DMatrix<f64>], step: f64, g1: f64, g2: f64) -> Vec<DMatrix<f64>> {
    let p = z[0].nrows();
    let mut out = z.to_vec();
    for h in 0..p {
        for k in (h + 1)..p {
            let soft: Vec<f64> = z
                .iter()
                .map(|m| {
                    let v = m[(h, k)];
                    v.signum() * (v.abs() - step * g1 * g2).max(0.0)
                })
                .collect();
            let norm = soft.iter().map(|v| v * v).sum::<f64>().sqrt();
            let keep = if norm > 0.0 { (1.0 - step * g1 * (1.0 - g2) / norm).max(0.0) } else { 0.0 };
            for (m, v) in out.iter_mut().zip(&soft) {
                m[(h, k)] = v * keep;
                m[(k, h)] = v * keep;
            }
        }
    }
    out
}

/// Proximal gradient with backtracking, started from the diagonal
/// solution, until successive iterates differ by less than `tol`.
pub fn jgl_proximal_gradient(s: &[DMatrix<f64>], g1: f64, g2: f64, tol: f64, max_iter: usize) -> Vec<DMatrix<f64>> {
    let smooth = |t: &[DMatrix<f64>]| -> Option<f64> {
        let mut f = 0.0;
        for (sl, tl) in s.iter().zip(t) {
            let chol = tl.clone().cholesky()?;
            f += (sl * tl).trace() - 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        }
        Some(f)
    };
    let mut theta: Vec<DMatrix<f64>> = s
        .iter()
        .map(|m| DMatrix::from_diagonal(&m.diagonal().map(|v| 1.0 / v)))
        .collect();
    let mut step: f64 = 1.0;
    for _ in 0..max_iter {
        let f0 = smooth(&theta).unwrap();
        let grad: Vec<DMatrix<f64>> = s
            .iter()
            .zip(&theta)
            .map(|(sl, tl)| sl - tl.clone().try_inverse().unwrap())
            .collect();
        step = (step * 2.0).min(1e3);
        let next = loop {
            let z: Vec<DMatrix<f64>> = theta.iter().zip(&grad).map(|(t, g)| t - g * step).collect();
            let cand = prox(&z, step, g1, g2);
            if let Some(f1) = smooth(&cand) {
                let diff: Vec<DMatrix<f64>> = cand.iter().zip(&theta).map(|(a, b)| a - b).collect();
                let lin: f64 = grad.iter().zip(&diff).map(|(g, d)| g.dot(d)).sum();
                let quad: f64 = diff.iter().map(|d| d.norm_squared()).sum::<f64>() / (2.0 * step);
                if f1 <= f0 + lin + quad + 1e-15 {
                    break cand;
                }
            }
            step /= 2.0;
            assert!(step > 1e-20, "line search failed");
        };
        let change: f64 = next.iter().zip(&theta).map(|(a, b)| (a - b).norm_squared()).sum::<f64>().sqrt();
        theta = next;
        if change < tol {
            break;
        }
    }
    theta
}

/// Random sample covariances of `L` layers from `n` Gaussian draws.
pub fn random_sample_covariances(p: usize, layers: usize, n: usize, seed: u64) -> Vec<DMatrix<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..layers)
        .map(|_| {
            let a = DMatrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal));
            let mix = &a * a.transpose() / p as f64 + DMatrix::identity(p, p);
            let chol = mix.cholesky().unwrap();
            let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal)) * chol.l().transpose();
            x.transpose() * &x / n as f64
        })
        .collect()
}
