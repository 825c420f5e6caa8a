//! Joint graphical lasso over `L` layers with the sparse-group penalty
//!
//! `P({Θ}) = γ1 { γ2 Σ_l Σ_{h≠k} |θ_hkl| + (1 − γ2) Σ_{h≠k} ‖θ_hk·‖₂ }`,
//!
//! solved by ADMM on `Σ_l { −log det Θ_l + tr(S_l Θ_l) } + P`, plus
//! maximum-likelihood refitting on a fixed support.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{FggmError, Result};
use crate::linalg;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub gamma1: f64,
    pub gamma2: f64,
}

impl PenaltySpec {
    pub fn new(gamma1: f64, gamma2: f64) -> Result<Self> {
        let pen = PenaltySpec { gamma1, gamma2 };
        pen.validate()?;
        Ok(pen)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma1 >= 0.0 && self.gamma1.is_finite()) {
            return Err(FggmError::InvalidParameter(format!("gamma1 = {} must be >= 0", self.gamma1)));
        }
        if !(0.0..=1.0).contains(&self.gamma2) {
            return Err(FggmError::InvalidParameter(format!("gamma2 = {} outside [0, 1]", self.gamma2)));
        }
        Ok(())
    }

    /// Penalty value for a stack of layers (diagonals excluded).
    pub fn value(&self, thetas: &[DMatrix<f64>]) -> f64 {
        let p = thetas.first().map_or(0, DMatrix::nrows);
        let mut l1 = 0.0;
        let mut group = 0.0;
        for h in 0..p {
            for k in 0..p {
                if h == k {
                    continue;
                }
                let mut sq = 0.0;
                for t in thetas {
                    l1 += t[(h, k)].abs();
                    sq += t[(h, k)] * t[(h, k)];
                }
                group += sq.sqrt();
            }
        }
        self.gamma1 * (self.gamma2 * l1 + (1.0 - self.gamma2) * group)
    }
}

/// Unordered variable pair `(h, k)` with `h < k`.
pub type Edge = (usize, usize);

/// `L` precision matrices and the edge sets read off their exact zeros.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrecisionEnsemble {
    thetas: Vec<DMatrix<f64>>,
}

impl PrecisionEnsemble {
    pub fn new(thetas: Vec<DMatrix<f64>>) -> Result<Self> {
        let p = thetas
            .first()
            .map(DMatrix::nrows)
            .ok_or_else(|| FggmError::dim("ensemble needs at least one layer"))?;
        if thetas.iter().any(|t| t.nrows() != p || t.ncols() != p) {
            return Err(FggmError::dim("ensemble layers must be square and of equal order"));
        }
        Ok(PrecisionEnsemble { thetas })
    }

    pub fn layers(&self) -> &[DMatrix<f64>] {
        &self.thetas
    }

    pub fn n_layers(&self) -> usize {
        self.thetas.len()
    }

    pub fn p(&self) -> usize {
        self.thetas[0].nrows()
    }

    /// `E_l = {(h, k): h < k, θ_hkl ≠ 0}`.
    pub fn edge_set(&self, l: usize) -> BTreeSet<Edge> {
        let t = &self.thetas[l];
        let p = self.p();
        (0..p)
            .flat_map(|h| ((h + 1)..p).map(move |k| (h, k)))
            .filter(|&(h, k)| t[(h, k)] != 0.0 || t[(k, h)] != 0.0)
            .collect()
    }

    pub fn edge_sets(&self) -> Vec<BTreeSet<Edge>> {
        (0..self.n_layers()).map(|l| self.edge_set(l)).collect()
    }

    pub fn union_edges(&self) -> BTreeSet<Edge> {
        self.edge_sets().into_iter().flatten().collect()
    }

    pub fn edge_counts(&self) -> Vec<usize> {
        self.edge_sets().iter().map(BTreeSet::len).collect()
    }

    pub fn is_positive_definite(&self) -> bool {
        self.thetas.iter().all(linalg::is_positive_definite)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmmOptions {
    pub rho: f64,
    pub max_iter: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Rescale `ρ` by 2 when one residual exceeds the other tenfold.
    pub adaptive: bool,
}

impl Default for AdmmOptions {
    fn default() -> Self {
        AdmmOptions {
            rho: 1.0,
            max_iter: 2000,
            abs_tol: 1e-5,
            rel_tol: 1e-5,
            adaptive: true,
        }
    }
}

/// ADMM iterates at termination.
#[derive(Clone, Debug)]
pub struct JglSolution {
    /// Positive definite iterate from the log-det step.
    pub theta: Vec<DMatrix<f64>>,
    /// Exactly sparse iterate from the proximal step.
    pub sparse: PrecisionEnsemble,
    /// Scaled dual variable, kept for warm starts.
    pub dual: Vec<DMatrix<f64>>,
    pub rho: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub converged: bool,
}

impl JglSolution {
    pub fn ensure_converged(&self) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(FggmError::NonConvergence {
                iterations: self.iterations,
                primal: self.primal_residual,
                dual: self.dual_residual,
            })
        }
    }

    /// The sparse iterate when it is positive definite, the log-det iterate
    /// otherwise.
    pub fn estimate(&self) -> &[DMatrix<f64>] {
        if self.sparse.is_positive_definite() {
            self.sparse.layers()
        } else {
            &self.theta
        }
    }
}

/// `Σ_l { −log det Θ_l + tr(S_l Θ_l) } + P(Θ)`, the minimized objective.
pub fn penalized_objective(s: &[DMatrix<f64>], thetas: &[DMatrix<f64>], pen: &PenaltySpec) -> Result<f64> {
    let mut f = pen.value(thetas);
    for (sl, tl) in s.iter().zip(thetas) {
        f += linalg::trace_product(sl, tl) - linalg::log_det_pd(tl)?;
    }
    Ok(f)
}

/// Proximal map of `τ P`: per off-diagonal entry, soft-threshold at
/// `τ γ1 γ2`, then shrink the `L`-vector of each pair as a group at
/// `τ γ1 (1 − γ2)`. Diagonals pass through.
pub fn prox_sparse_group(z: &[DMatrix<f64>], tau: f64, pen: &PenaltySpec) -> Vec<DMatrix<f64>> {
    let mut out: Vec<DMatrix<f64>> = z.to_vec();
    if pen.gamma1 == 0.0 {
        return out;
    }
    let p = z.first().map_or(0, DMatrix::nrows);
    let t1 = tau * pen.gamma1 * pen.gamma2;
    let t2 = tau * pen.gamma1 * (1.0 - pen.gamma2);
    let mut v = vec![0.0; z.len()];
    for h in 0..p {
        for k in (h + 1)..p {
            let mut sq = 0.0;
            for (l, zl) in z.iter().enumerate() {
                let a = 0.5 * (zl[(h, k)] + zl[(k, h)]);
                v[l] = soft(a, t1);
                sq += v[l] * v[l];
            }
            let norm = sq.sqrt();
            let scale = if norm > t2 { 1.0 - t2 / norm } else { 0.0 };
            for (l, ol) in out.iter_mut().enumerate() {
                let val = if scale == 0.0 { 0.0 } else { v[l] * scale };
                ol[(h, k)] = val;
                ol[(k, h)] = val;
            }
        }
    }
    out
}

fn soft(a: f64, t: f64) -> f64 {
    if a > t {
        a - t
    } else if a < -t {
        a + t
    } else {
        0.0
    }
}

/// Smallest `γ1` at which the all-diagonal solution satisfies the
/// optimality conditions, so every off-diagonal entry is zero.
pub fn gamma1_max(s: &[DMatrix<f64>], gamma2: f64) -> f64 {
    let p = s.first().map_or(0, DMatrix::nrows);
    let mut best: f64 = 0.0;
    for h in 0..p {
        for k in (h + 1)..p {
            let v: Vec<f64> = s.iter().map(|sl| sl[(h, k)]).collect();
            best = best.max(pair_threshold(&v, gamma2));
        }
    }
    best
}

/// Smallest `g ≥ 0` with `‖soft(v, g γ2)‖₂ ≤ g (1 − γ2)`.
fn pair_threshold(v: &[f64], gamma2: f64) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return 0.0;
    }
    if gamma2 == 0.0 {
        return norm;
    }
    let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if gamma2 == 1.0 {
        return vmax;
    }
    let holds = |g: f64| {
        let sn = v.iter().map(|&x| soft(x, g * gamma2).powi(2)).sum::<f64>().sqrt();
        sn <= g * (1.0 - gamma2)
    };
    let mut lo = 0.0;
    let mut hi = norm.min(vmax / gamma2);
    while !holds(hi) {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    hi
}

fn diagonal_solution(s: &[DMatrix<f64>]) -> Result<Vec<DMatrix<f64>>> {
    s.iter()
        .map(|sl| {
            let p = sl.nrows();
            let mut t = DMatrix::zeros(p, p);
            for h in 0..p {
                let v = sl[(h, h)];
                if !(v > 0.0) {
                    return Err(FggmError::NotPositiveDefinite(format!(
                        "sample variance {v} at diagonal entry {h}"
                    )));
                }
                t[(h, h)] = 1.0 / v;
            }
            Ok(t)
        })
        .collect()
}

fn check_inputs(s: &[DMatrix<f64>]) -> Result<usize> {
    let p = s
        .first()
        .map(DMatrix::nrows)
        .ok_or_else(|| FggmError::dim("no sample covariance layers"))?;
    if s.iter().any(|m| m.nrows() != p || m.ncols() != p) {
        return Err(FggmError::dim("sample covariances must be square and of equal order"));
    }
    Ok(p)
}

/// Starting point for a solve, typically the previous path solution.
#[derive(Clone, Debug)]
pub struct WarmStart {
    pub sparse: Vec<DMatrix<f64>>,
    pub dual: Vec<DMatrix<f64>>,
    pub rho: f64,
}

impl From<&JglSolution> for WarmStart {
    fn from(sol: &JglSolution) -> Self {
        WarmStart {
            sparse: sol.sparse.layers().to_vec(),
            dual: sol.dual.clone(),
            rho: sol.rho,
        }
    }
}

pub fn solve_jgl(s: &[DMatrix<f64>], pen: &PenaltySpec, opts: &AdmmOptions) -> Result<JglSolution> {
    solve_jgl_warm(s, pen, opts, None)
}

/// ADMM for the joint graphical lasso.
///
/// At or above [`gamma1_max`] the diagonal closed form `θ_hh = 1 / S_hh` is
/// returned directly.
pub fn solve_jgl_warm(
    s: &[DMatrix<f64>],
    pen: &PenaltySpec,
    opts: &AdmmOptions,
    warm: Option<&WarmStart>,
) -> Result<JglSolution> {
    pen.validate()?;
    let p = check_inputs(s)?;
    if p == 1 || (pen.gamma1 > 0.0 && pen.gamma1 >= gamma1_max(s, pen.gamma2)) {
        let theta = diagonal_solution(s)?;
        return Ok(JglSolution {
            sparse: PrecisionEnsemble::new(theta.clone())?,
            dual: vec![DMatrix::zeros(p, p); s.len()],
            theta,
            rho: opts.rho,
            iterations: 0,
            primal_residual: 0.0,
            dual_residual: 0.0,
            converged: true,
        });
    }
    let penalty = pen.to_owned();
    admm(s, opts, warm, |z, tau| prox_sparse_group(z, tau, &penalty))
}

/// Generic consensus ADMM with `Θ`-step `ρΘ − Θ^{-1} = ρ(Z − U) − S` and a
/// caller-supplied `Z`-step.
fn admm<F>(
    s: &[DMatrix<f64>],
    opts: &AdmmOptions,
    warm: Option<&WarmStart>,
    prox: F,
) -> Result<JglSolution>
where
    F: Fn(&[DMatrix<f64>], f64) -> Vec<DMatrix<f64>>,
{
    let p = s[0].nrows();
    let layers = s.len();
    let (mut z, mut u, mut rho) = match warm {
        Some(w) if w.sparse.len() == layers && w.dual.len() == layers => {
            (w.sparse.clone(), w.dual.clone(), w.rho)
        }
        _ => (
            diagonal_start(s),
            vec![DMatrix::zeros(p, p); layers],
            opts.rho,
        ),
    };
    let mut theta = z.clone();
    let scale = ((layers * p * p) as f64).sqrt();
    let (mut r_norm, mut s_norm) = (f64::INFINITY, f64::INFINITY);
    for it in 1..=opts.max_iter {
        for l in 0..layers {
            let rhs = (&z[l] - &u[l]) * rho - &s[l];
            theta[l] = logdet_step(&rhs, rho)?;
        }
        let v: Vec<DMatrix<f64>> = theta.iter().zip(&u).map(|(t, ul)| t + ul).collect();
        let z_new = prox(&v, 1.0 / rho);
        let mut r2 = 0.0;
        let mut s2 = 0.0;
        let (mut tn, mut zn, mut un) = (0.0, 0.0, 0.0);
        for l in 0..layers {
            let diff = &theta[l] - &z_new[l];
            r2 += diff.norm_squared();
            s2 += (&z_new[l] - &z[l]).norm_squared();
            u[l] += &diff;
            tn += theta[l].norm_squared();
            zn += z_new[l].norm_squared();
            un += u[l].norm_squared();
        }
        z = z_new;
        r_norm = r2.sqrt();
        s_norm = rho * s2.sqrt();
        let eps_pri = scale * opts.abs_tol + opts.rel_tol * tn.sqrt().max(zn.sqrt());
        let eps_dual = scale * opts.abs_tol + opts.rel_tol * rho * un.sqrt();
        if r_norm <= eps_pri && s_norm <= eps_dual {
            return finish(theta, z, u, rho, it, r_norm, s_norm, true);
        }
        if opts.adaptive {
            if r_norm > 10.0 * s_norm {
                rho *= 2.0;
                u.iter_mut().for_each(|m| *m /= 2.0);
            } else if s_norm > 10.0 * r_norm {
                rho /= 2.0;
                u.iter_mut().for_each(|m| *m *= 2.0);
            }
        }
    }
    finish(theta, z, u, rho, opts.max_iter, r_norm, s_norm, false)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    theta: Vec<DMatrix<f64>>,
    z: Vec<DMatrix<f64>>,
    dual: Vec<DMatrix<f64>>,
    rho: f64,
    iterations: usize,
    primal_residual: f64,
    dual_residual: f64,
    converged: bool,
) -> Result<JglSolution> {
    if !converged {
        log::warn!(
            "ADMM stopped after {iterations} iterations (primal {primal_residual:e}, dual {dual_residual:e})"
        );
    }
    Ok(JglSolution {
        theta,
        sparse: PrecisionEnsemble::new(z)?,
        dual,
        rho,
        iterations,
        primal_residual,
        dual_residual,
        converged,
    })
}

fn diagonal_start(s: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
    s.iter()
        .map(|sl| {
            let p = sl.nrows();
            DMatrix::from_fn(p, p, |i, j| {
                if i == j && sl[(i, i)] > 0.0 {
                    1.0 / sl[(i, i)]
                } else if i == j {
                    1.0
                } else {
                    0.0
                }
            })
        })
        .collect()
}

/// Solves `ρΘ − Θ^{-1} = A` for symmetric `A` through its eigenvalues.
fn logdet_step(a: &DMatrix<f64>, rho: f64) -> Result<DMatrix<f64>> {
    let (vals, vecs) = linalg::sym_eigen(a)?;
    let mapped = vals.map(|e| (e + (e * e + 4.0 * rho).sqrt()) / (2.0 * rho));
    let mut scaled = vecs.clone();
    for (k, mut col) in scaled.column_iter_mut().enumerate() {
        col *= mapped[k];
    }
    let mut t = scaled * vecs.transpose();
    linalg::symmetrize(&mut t);
    Ok(t)
}

/// Maximum-likelihood precision per layer with zeros forced off `support`.
///
/// Runs the same ADMM with per-entry penalties: zero on the support and the
/// diagonal, `1e6 · max|S|` elsewhere, then zeroes the off-support entries.
pub fn refit_mle(
    s: &[DMatrix<f64>],
    support: &[BTreeSet<Edge>],
    opts: &AdmmOptions,
) -> Result<PrecisionEnsemble> {
    let p = check_inputs(s)?;
    if support.len() != s.len() {
        return Err(FggmError::dim(format!(
            "{} supports for {} layers",
            support.len(),
            s.len()
        )));
    }
    let all_pairs = p * (p - 1) / 2;
    let mut thetas = Vec::with_capacity(s.len());
    for (sl, sup) in s.iter().zip(support) {
        if sup.iter().any(|&(h, k)| h >= k || k >= p) {
            return Err(FggmError::InvalidParameter("support edges must satisfy h < k < p".into()));
        }
        let theta = if sup.is_empty() {
            diagonal_solution(std::slice::from_ref(sl))?.remove(0)
        } else if sup.len() == all_pairs && linalg::is_positive_definite(sl) {
            linalg::inverse_pd(sl)?
        } else {
            refit_layer(sl, sup, opts)?
        };
        thetas.push(theta);
    }
    PrecisionEnsemble::new(thetas)
}

fn refit_layer(s: &DMatrix<f64>, support: &BTreeSet<Edge>, opts: &AdmmOptions) -> Result<DMatrix<f64>> {
    let p = s.nrows();
    let big = 1e6 * s.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let weight = DMatrix::from_fn(p, p, |i, j| {
        let e = (i.min(j), i.max(j));
        if i == j || support.contains(&e) {
            0.0
        } else {
            big
        }
    });
    let prox = |z: &[DMatrix<f64>], tau: f64| {
        z.iter()
            .map(|m| {
                let mut out = m.clone();
                for j in 0..p {
                    for i in 0..p {
                        let w = weight[(i, j)];
                        if w > 0.0 {
                            out[(i, j)] = soft(m[(i, j)], tau * w);
                        }
                    }
                }
                out
            })
            .collect()
    };
    let sol = admm(std::slice::from_ref(s), opts, None, prox)?;
    sol.ensure_converged()?;
    let z = &sol.sparse.layers()[0];
    if linalg::is_positive_definite(z) {
        return Ok(z.clone());
    }
    let mut t = sol.theta[0].clone();
    for j in 0..p {
        for i in 0..p {
            if weight[(i, j)] > 0.0 {
                t[(i, j)] = 0.0;
            }
        }
    }
    if !linalg::is_positive_definite(&t) {
        return Err(FggmError::NotPositiveDefinite("refitted precision matrix".into()));
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd(p: usize, seed: usize) -> DMatrix<f64> {
        let a = DMatrix::from_fn(p, p + 3, |i, j| (((i + 1) * (j + 3) * (seed + 7)) % 19) as f64 / 19.0 - 0.5);
        &a * a.transpose() / (p + 3) as f64 + DMatrix::identity(p, p) * 0.1
    }

    #[test]
    fn prox_with_zero_penalty_is_identity() {
        let z = vec![spd(4, 1), spd(4, 2)];
        assert_eq!(prox_sparse_group(&z, 0.7, &PenaltySpec::new(0.0, 0.5).unwrap()), z);
    }

    #[test]
    fn prox_group_shrinkage_examples() {
        let mk = |a: f64, b: f64| {
            vec![
                DMatrix::from_row_slice(2, 2, &[1.0, a, a, 1.0]),
                DMatrix::from_row_slice(2, 2, &[2.0, b, b, 2.0]),
            ]
        };
        let pen = PenaltySpec::new(5.0, 0.0).unwrap();
        let out = prox_sparse_group(&mk(3.0, 4.0), 1.0, &pen);
        assert_eq!((out[0][(0, 1)], out[1][(0, 1)]), (0.0, 0.0));
        assert_eq!((out[0][(0, 0)], out[1][(1, 1)]), (1.0, 2.0));
        let out = prox_sparse_group(&mk(3.0, 4.0), 0.5, &pen);
        assert!((out[0][(0, 1)] - 1.5).abs() < 1e-15);
        assert!((out[1][(1, 0)] - 2.0).abs() < 1e-15);
        // below threshold: killed exactly
        let out = prox_sparse_group(&mk(0.1, -0.2), 1.0, &PenaltySpec::new(0.3, 0.0).unwrap());
        assert!(out.iter().all(|m| m[(0, 1)] == 0.0 && m[(1, 0)] == 0.0));
    }

    #[test]
    fn gamma1_max_examples() {
        let diag = vec![DMatrix::from_diagonal_element(3, 3, 2.0)];
        assert_eq!(gamma1_max(&diag, 0.0), 0.0);
        let s = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, -0.7, 0.2, 1.0, 0.1, -0.7, 0.1, 1.0]);
        assert!((gamma1_max(std::slice::from_ref(&s), 0.0) - 0.7).abs() < 1e-15);
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 1.0]);
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.4, 0.4, 1.0]);
        assert!((gamma1_max(&[a, b], 0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gamma1_max_general_gamma2_meets_kkt_boundary() {
        let s = vec![spd(5, 3), spd(5, 4), spd(5, 5)];
        for g2 in [0.2, 0.5, 0.9, 1.0] {
            let g = gamma1_max(&s, g2);
            let sol = solve_jgl(&s, &PenaltySpec::new(g, g2).unwrap(), &AdmmOptions::default()).unwrap();
            assert!(sol.sparse.union_edges().is_empty());
            // slightly below the bound at least one pair violates the condition
            let below = g * (1.0 - 1e-6);
            let any = (0..5).any(|h| {
                ((h + 1)..5).any(|k| {
                    let v: Vec<f64> = s.iter().map(|m| m[(h, k)]).collect();
                    let sn = v.iter().map(|&x| soft(x, below * g2).powi(2)).sum::<f64>().sqrt();
                    sn > below * (1.0 - g2)
                })
            });
            assert!(any, "gamma2 = {g2}");
        }
    }

    #[test]
    fn unpenalized_single_layer_is_inverse() {
        let s = spd(5, 9);
        let sol = solve_jgl(std::slice::from_ref(&s), &PenaltySpec::new(0.0, 0.0).unwrap(), &AdmmOptions::default())
            .unwrap();
        assert!(sol.converged);
        let inv = linalg::inverse_pd(&s).unwrap();
        let rel = linalg::frobenius(&(&sol.sparse.layers()[0] - &inv)) / linalg::frobenius(&inv);
        assert!(rel < 1e-4, "{rel}");
    }

    #[test]
    fn above_gamma1_max_gives_diagonal_inverse() {
        let s = vec![spd(4, 2), spd(4, 6)];
        let g = gamma1_max(&s, 0.0) * 1.5;
        let sol = solve_jgl(&s, &PenaltySpec::new(g, 0.0).unwrap(), &AdmmOptions::default()).unwrap();
        for (t, sl) in sol.sparse.layers().iter().zip(&s) {
            for h in 0..4 {
                assert!((t[(h, h)] - 1.0 / sl[(h, h)]).abs() < 1e-12);
            }
        }
        assert_eq!(sol.sparse.edge_counts(), vec![0, 0]);
    }

    #[test]
    fn refit_with_empty_and_full_support() {
        let s = vec![spd(4, 11)];
        let empty = refit_mle(&s, &[BTreeSet::new()], &AdmmOptions::default()).unwrap();
        for h in 0..4 {
            assert!((empty.layers()[0][(h, h)] - 1.0 / s[0][(h, h)]).abs() < 1e-14);
        }
        assert!(empty.union_edges().is_empty());
        let full: BTreeSet<Edge> = (0..4).flat_map(|h| ((h + 1)..4).map(move |k| (h, k))).collect();
        let fit = refit_mle(&s, &[full], &AdmmOptions::default()).unwrap();
        let inv = linalg::inverse_pd(&s[0]).unwrap();
        assert!((&fit.layers()[0] - inv).abs().max() < 1e-10);
    }

    #[test]
    fn refit_respects_partial_support_and_stationarity() {
        let s = spd(5, 13);
        let support: BTreeSet<Edge> = [(0, 1), (1, 2), (3, 4)].into_iter().collect();
        let opts = AdmmOptions {
            abs_tol: 1e-9,
            rel_tol: 1e-9,
            max_iter: 20_000,
            ..AdmmOptions::default()
        };
        let fit = refit_mle(std::slice::from_ref(&s), std::slice::from_ref(&support), &opts).unwrap();
        let t = &fit.layers()[0];
        assert_eq!(fit.edge_set(0), support);
        // the fitted covariance matches S on the diagonal and on the support
        let sigma = linalg::inverse_pd(t).unwrap();
        for h in 0..5 {
            assert!((sigma[(h, h)] - s[(h, h)]).abs() < 1e-6);
        }
        for &(h, k) in &support {
            assert!((sigma[(h, k)] - s[(h, k)]).abs() < 1e-6);
        }
    }

    #[test]
    fn edge_sets_and_union() {
        let mut a = DMatrix::identity(3, 3);
        a[(0, 2)] = 0.1;
        a[(2, 0)] = 0.1;
        let mut b = DMatrix::identity(3, 3);
        b[(1, 2)] = -0.2;
        b[(2, 1)] = -0.2;
        let e = PrecisionEnsemble::new(vec![a, b]).unwrap();
        assert_eq!(e.edge_counts(), vec![1, 1]);
        assert_eq!(e.union_edges().into_iter().collect::<Vec<_>>(), vec![(0, 2), (1, 2)]);
    }
}
