//! End-to-end fitting: basis estimation, score imputation, the joint
//! graphical lasso path over `γ1`, refitting and eBIC selection.

use std::collections::BTreeSet;

use log::{debug, warn};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FggmError, Result};
use crate::fda::FunctionalDataset;
use crate::jgl::{
    gamma1_max, refit_mle, solve_jgl_warm, AdmmOptions, Edge, JglSolution, PenaltySpec, PrecisionEnsemble,
    WarmStart,
};
use crate::linalg;
use crate::moments::{
    build_h, eigendecompose_h, estimate_covariance, select_l, CovarianceField, EigenSystem, Standardization,
};
use crate::reconstruct::{AlphaChoice, AlphaSelection, ImputationMethod, Imputer};
use crate::scores::{observed_scores, sample_covariances, ScoreArray, ScoreSet};

/// Imputation method as exposed to users.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Multivariate ridge imputation using cross-covariances.
    #[default]
    Proposed,
    /// Univariate imputation, one variable at a time.
    Kraus,
}

impl Method {
    pub fn imputation(self) -> ImputationMethod {
        match self {
            Method::Proposed => ImputationMethod::Multivariate,
            Method::Kraus => ImputationMethod::Univariate,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::Kraus => "kraus",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = FggmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "proposed" => Ok(Method::Proposed),
            "kraus" => Ok(Method::Kraus),
            other => Err(FggmError::Config(format!("unknown method {other:?} (expected proposed or kraus)"))),
        }
    }
}

/// What the EM loop re-estimates between iterations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Refresh {
    /// Covariance and eigensystem from the fragments, estimated once.
    #[default]
    Fixed,
    /// Covariance and eigensystem re-estimated from the completed curves
    /// after every iteration, with `L` held fixed.
    PerIteration,
}

impl std::str::FromStr for Refresh {
    type Err = FggmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(Refresh::Fixed),
            "per-iteration" => Ok(Refresh::PerIteration),
            other => Err(FggmError::Config(format!(
                "unknown covariance refresh {other:?} (expected fixed or per-iteration)"
            ))),
        }
    }
}

/// Covariance kernel handed to the imputer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelModel {
    /// The pairwise-complete estimate as is.
    #[default]
    Pairwise,
    /// The estimate projected on the retained eigenfunctions,
    /// `Σ_l σ_lhk φ_l(s) φ_l(t)`, positive semidefinite of rank `≤ p L`.
    PartiallySeparable,
}

impl std::str::FromStr for KernelModel {
    type Err = FggmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pairwise" => Ok(KernelModel::Pairwise),
            "partially-separable" => Ok(KernelModel::PartiallySeparable),
            other => Err(FggmError::Config(format!(
                "unknown kernel model {other:?} (expected pairwise or partially-separable)"
            ))),
        }
    }
}

/// Scaling of `Q` before it enters the eBIC.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QScale {
    /// `Σ_l {log det Θ_l − tr(S_l Θ_l)}` as is.
    #[default]
    Literal,
    /// Multiplied by `n / 2`, the Gaussian log-likelihood up to a constant.
    Likelihood,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Gamma1Grid {
    /// `size` equally spaced values from 0 to `γ1_max` of the first
    /// iteration's sample covariances.
    Equispaced { size: usize },
    Explicit(Vec<f64>),
}

impl Default for Gamma1Grid {
    fn default() -> Self {
        Gamma1Grid::Equispaced { size: 21 }
    }
}

impl Gamma1Grid {
    fn resolve(&self, gmax: f64) -> Result<Vec<f64>> {
        match self {
            Gamma1Grid::Equispaced { size } => {
                if *size < 2 {
                    return Err(FggmError::InvalidParameter("gamma1 grid needs at least two values".into()));
                }
                Ok((0..*size).map(|k| gmax * k as f64 / (*size - 1) as f64).collect())
            }
            Gamma1Grid::Explicit(v) => {
                if v.is_empty() || v.iter().any(|g| !g.is_finite() || *g < 0.0) {
                    return Err(FggmError::InvalidParameter(
                        "explicit gamma1 grid must be non-empty, finite and non-negative".into(),
                    ));
                }
                Ok(v.clone())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Share of `H`'s spectrum the retained components must explain.
    pub variance_threshold: f64,
    /// Fixed number of components, overriding the threshold.
    pub n_components: Option<usize>,
    pub gamma2: f64,
    pub gamma1_grid: Gamma1Grid,
    pub em_tol: f64,
    pub max_em_iter: usize,
    pub alpha: AlphaSelection,
    pub gamma_ebic: f64,
    pub method: Method,
    pub refresh: Refresh,
    pub kernel: KernelModel,
    pub q_scale: QScale,
    /// Center and scale every curve pointwise before fitting.
    pub standardize: bool,
    pub admm: AdmmOptions,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            variance_threshold: 0.9999,
            n_components: None,
            gamma2: 0.0,
            gamma1_grid: Gamma1Grid::default(),
            em_tol: 1e-4,
            max_em_iter: 25,
            alpha: AlphaSelection::default(),
            gamma_ebic: 0.5,
            method: Method::Proposed,
            refresh: Refresh::Fixed,
            kernel: KernelModel::Pairwise,
            q_scale: QScale::Literal,
            standardize: false,
            admm: AdmmOptions::default(),
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(FggmError::InvalidParameter(m.into()));
        if !(self.variance_threshold > 0.0 && self.variance_threshold <= 1.0) {
            return bad("variance threshold must lie in (0, 1]");
        }
        if self.n_components == Some(0) {
            return bad("n_components must be positive");
        }
        if !(0.0..=1.0).contains(&self.gamma2) {
            return bad("gamma2 must lie in [0, 1]");
        }
        if !(self.em_tol > 0.0) || self.max_em_iter == 0 {
            return bad("EM tolerance and iteration cap must be positive");
        }
        if !(self.gamma_ebic >= 0.0) {
            return bad("eBIC exponent must be non-negative");
        }
        if !(self.admm.abs_tol > 0.0 && self.admm.rel_tol > 0.0 && self.admm.rho > 0.0) {
            return bad("ADMM tolerances and rho must be positive");
        }
        match &self.alpha {
            AlphaSelection::Fixed(a) if !(*a > 0.0) => return bad("fixed alpha must be positive"),
            AlphaSelection::Gcv(g) if g.count < 2 || !(g.low > 0.0 && g.high > g.low) => {
                return bad("alpha grid needs at least two values with 0 < low < high")
            }
            _ => {}
        }
        if let Gamma1Grid::Equispaced { size } = self.gamma1_grid {
            if size < 2 {
                return bad("gamma1 grid needs at least two values");
            }
        }
        Ok(())
    }
}

/// `Q = Σ_l {log det Θ_l − tr(S_l Θ_l)}`.
pub fn q_function(thetas: &[DMatrix<f64>], s: &[DMatrix<f64>]) -> Result<f64> {
    if thetas.len() != s.len() {
        return Err(FggmError::dim("precision and covariance lists differ in length"));
    }
    let mut q = 0.0;
    for (l, (t, s)) in thetas.iter().zip(s).enumerate() {
        if t.shape() != s.shape() {
            return Err(FggmError::dim("precision and covariance differ in shape"));
        }
        let logdet = linalg::log_det_pd(t)
            .map_err(|_| FggmError::NotPositiveDefinite(format!("precision of layer {l}")))?;
        q += logdet - (s * t).trace();
    }
    Ok(q)
}

/// `−2Q + Σ_l |E_l| (ln n + 4γ ln p)`.
pub fn ebic(q: f64, edge_counts: &[usize], n: usize, p: usize, gamma_ebic: f64) -> f64 {
    let per_edge = (n as f64).ln() + 4.0 * gamma_ebic * (p as f64).ln();
    -2.0 * q + edge_counts.iter().map(|&c| c as f64 * per_edge).sum::<f64>()
}

/// One point of the regularization path.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PathEntry {
    pub gamma1: f64,
    /// Exactly sparse ADMM iterate.
    pub penalized: PrecisionEnsemble,
    /// Unpenalized refit on the penalized support, when it succeeded.
    pub refitted: Option<PrecisionEnsemble>,
    pub q: f64,
    pub ebic: f64,
    pub edge_counts: Vec<usize>,
    pub admm_iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub converged: bool,
}

impl PathEntry {
    pub fn union_edges(&self) -> BTreeSet<Edge> {
        self.penalized.union_edges()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Diagnostics {
    pub em_iterations: usize,
    /// Relative change of the path estimates after each iteration from the
    /// second on.
    pub em_changes: Vec<f64>,
    pub em_converged: bool,
    pub n_components: usize,
    pub explained: Vec<f64>,
    pub undefined_covariance_entries: usize,
    pub alpha_choices: Vec<AlphaChoice>,
    pub nonconverged_solves: usize,
    pub failed_refits: usize,
}

#[derive(Clone, Debug)]
pub struct FitResult {
    pub path: Vec<PathEntry>,
    pub selected: usize,
    pub eigensystem: EigenSystem,
    pub scores: ScoreSet,
    pub sample_covariances: Vec<DMatrix<f64>>,
    /// Completed curves on the scale of the input data.
    pub reconstructed: FunctionalDataset,
    pub diagnostics: Diagnostics,
}

impl FitResult {
    pub fn selected_entry(&self) -> &PathEntry {
        &self.path[self.selected]
    }

    pub fn selected_edges(&self) -> BTreeSet<Edge> {
        self.selected_entry().union_edges()
    }
}

/// Index of the smallest eBIC, ties going to the larger `γ1`.
pub fn select_by_ebic(path: &[PathEntry]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, e) in path.iter().enumerate() {
        if !e.ebic.is_finite() {
            continue;
        }
        best = match best {
            None => Some(k),
            Some(b) => {
                let cur = &path[b];
                if e.ebic < cur.ebic || (e.ebic == cur.ebic && e.gamma1 > cur.gamma1) {
                    Some(k)
                } else {
                    Some(b)
                }
            }
        };
    }
    best
}

/// Outcome of one EM iteration.
#[derive(Clone, Debug)]
pub struct EmStep {
    pub iteration: usize,
    /// `None` on the first iteration.
    pub change: Option<f64>,
    pub converged: bool,
}

/// The EM loop, exposed one iteration at a time.
pub struct EmEngine {
    cfg: FitConfig,
    data: FunctionalDataset,
    scaling: Option<Standardization>,
    cov: CovarianceField,
    eig: EigenSystem,
    imputer: Imputer,
    grid: Option<Vec<f64>>,
    scores: Option<ScoreSet>,
    s: Option<Vec<DMatrix<f64>>>,
    solutions: Option<Vec<JglSolution>>,
    iteration: usize,
    changes: Vec<f64>,
    converged: bool,
}

impl EmEngine {
    /// Moment estimation, eigensystem, `L` and the per-pattern imputers.
    pub fn new(data: &FunctionalDataset, cfg: FitConfig) -> Result<Self> {
        cfg.validate()?;
        let (scaling, data) = if cfg.standardize {
            let st = Standardization::estimate(data)?;
            let z = st.apply(data)?;
            (Some(st), z)
        } else {
            (None, data.clone())
        };
        let cov = estimate_covariance(&data)?;
        let full = eigendecompose_h(&build_h(&cov)?, data.grid())?;
        let l = match cfg.n_components {
            Some(l) => l,
            None => select_l(&full, cfg.variance_threshold)?,
        };
        let eig = full.with_components(l)?;
        debug!("retaining {l} components");
        let cov = shape_kernel(cov, &eig, &data, cfg.kernel)?;
        let imputer = Imputer::build(&data, &cov, &eig, cfg.method.imputation(), cfg.alpha)?;
        Ok(EmEngine {
            cfg,
            data,
            scaling,
            cov,
            eig,
            imputer,
            grid: None,
            scores: None,
            s: None,
            solutions: None,
            iteration: 0,
            changes: Vec::new(),
            converged: false,
        })
    }

    pub fn config(&self) -> &FitConfig {
        &self.cfg
    }

    pub fn eigensystem(&self) -> &EigenSystem {
        &self.eig
    }

    pub fn covariance(&self) -> &CovarianceField {
        &self.cov
    }

    pub fn imputer(&self) -> &Imputer {
        &self.imputer
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn is_converged(&self) -> bool {
        self.converged
    }

    pub fn scores(&self) -> Option<&ScoreSet> {
        self.scores.as_ref()
    }

    pub fn sample_covariances(&self) -> Option<&[DMatrix<f64>]> {
        self.s.as_deref()
    }

    pub fn gamma1_values(&self) -> Option<&[f64]> {
        self.grid.as_deref()
    }

    pub fn solutions(&self) -> Option<&[JglSolution]> {
        self.solutions.as_deref()
    }

    fn complete_scores(&self) -> Result<(ScoreSet, Vec<f64>)> {
        let (n, p, d) = (self.data.n(), self.data.p(), self.data.d());
        let mean = self.cov.mean();
        let xi_obs = observed_scores(&self.data, &self.eig, mean)?;
        let layers = self.eig.n_components();
        let rows: Vec<_> = (0..n)
            .into_par_iter()
            .map(|i| self.imputer.impute_row(&self.data, mean, i))
            .collect();
        let mut mu = ScoreArray::zeros(n, p, layers);
        let mut recon = Vec::with_capacity(n * p * d);
        for (i, r) in rows.into_iter().enumerate() {
            mu.set_sample(i, &r.mu_m_given_o);
            recon.extend(r.reconstructed);
        }
        Ok((ScoreSet::new(xi_obs, mu)?, recon))
    }

    /// Solves the whole path from the largest `γ1` down, each solve starting
    /// from its neighbour's solution. Results keep the grid's order.
    fn solve_path(&self, s: &[DMatrix<f64>], grid: &[f64]) -> Result<Vec<JglSolution>> {
        let mut order: Vec<usize> = (0..grid.len()).collect();
        order.sort_by(|&a, &b| grid[b].total_cmp(&grid[a]));
        let mut out: Vec<Option<JglSolution>> = vec![None; grid.len()];
        let mut warm: Option<WarmStart> = None;
        for k in order {
            let pen = PenaltySpec::new(grid[k], self.cfg.gamma2)?;
            let sol = solve_jgl_warm(s, &pen, &self.cfg.admm, warm.as_ref())?;
            if !sol.converged {
                warn!(
                    "ADMM did not converge at gamma1 = {:.4e} (primal {:.2e}, dual {:.2e})",
                    grid[k], sol.primal_residual, sol.dual_residual
                );
            }
            warm = Some(WarmStart::from(&sol));
            out[k] = Some(sol);
        }
        Ok(out.into_iter().map(|s| s.expect("every grid point solved")).collect())
    }

    /// One pass: impute, form `S_l`, solve the path and measure the change
    /// against the previous pass.
    pub fn step(&mut self) -> Result<EmStep> {
        self.iteration += 1;
        let (scores, recon) = self.complete_scores()?;
        let s = sample_covariances(&scores);
        let grid = match &self.grid {
            Some(g) => g.clone(),
            None => {
                let g = self.cfg.gamma1_grid.resolve(gamma1_max(&s, self.cfg.gamma2))?;
                self.grid = Some(g.clone());
                g
            }
        };
        let solutions = match (&self.s, &self.solutions) {
            (Some(prev), Some(sol)) if *prev == s => sol.clone(),
            _ => self.solve_path(&s, &grid)?,
        };
        let change = self.solutions.as_ref().map(|prev| path_change(prev, &solutions));
        if let Some(c) = change {
            self.changes.push(c);
            self.converged = c < self.cfg.em_tol;
        }
        self.scores = Some(scores);
        self.s = Some(s);
        self.solutions = Some(solutions);
        if self.cfg.refresh == Refresh::PerIteration && !self.converged {
            self.refresh(recon)?;
        }
        Ok(EmStep {
            iteration: self.iteration,
            change,
            converged: self.converged,
        })
    }

    fn refresh(&mut self, recon: Vec<f64>) -> Result<()> {
        let (n, p) = (self.data.n(), self.data.p());
        let complete = FunctionalDataset::complete(self.data.grid().clone(), n, p, recon)?;
        let cov = estimate_covariance(&complete)?;
        let eig = eigendecompose_h(&build_h(&cov)?, self.data.grid())?.with_components(self.eig.n_components())?;
        let cov = shape_kernel(cov, &eig, &self.data, self.cfg.kernel)?;
        self.imputer = Imputer::build(&self.data, &cov, &eig, self.cfg.method.imputation(), self.cfg.alpha)?;
        self.cov = cov;
        self.eig = eig;
        Ok(())
    }

    /// Runs passes until the change drops below the tolerance or the
    /// iteration cap is hit.
    pub fn run(&mut self) -> Result<()> {
        while !self.converged && self.iteration < self.cfg.max_em_iter {
            let st = self.step()?;
            debug!("EM iteration {}: change {:?}", st.iteration, st.change);
        }
        if !self.converged {
            warn!("EM stopped after {} iterations without converging", self.iteration);
        }
        Ok(())
    }

    /// Refits every path point, scores it by eBIC and reconstructs curves.
    pub fn finish(self) -> Result<FitResult> {
        let (scores, s, solutions, grid) = match (self.scores, self.s, self.solutions, self.grid) {
            (Some(a), Some(b), Some(c), Some(d)) => (a, b, c, d),
            _ => return Err(FggmError::InvalidParameter("finish called before any EM iteration".into())),
        };
        let (n, p) = (self.data.n(), self.data.p());
        let cfg = &self.cfg;
        let entries: Vec<(PathEntry, bool)> = solutions
            .par_iter()
            .zip(grid.par_iter())
            .map(|(sol, &gamma1)| -> Result<(PathEntry, bool)> {
                let support = sol.sparse.edge_sets();
                let refitted = match refit_mle(&s, &support, &cfg.admm) {
                    Ok(r) => Some(r),
                    Err(e) => {
                        warn!("refit failed at gamma1 = {gamma1:.4e}: {e}");
                        None
                    }
                };
                let thetas = refitted.as_ref().map(|r| r.layers()).unwrap_or_else(|| sol.estimate());
                let raw_q = q_function(thetas, &s).unwrap_or(f64::NEG_INFINITY);
                let q = match cfg.q_scale {
                    QScale::Literal => raw_q,
                    QScale::Likelihood => raw_q * n as f64 / 2.0,
                };
                let edge_counts = sol.sparse.edge_counts();
                let failed = refitted.is_none();
                Ok((
                    PathEntry {
                        gamma1,
                        penalized: sol.sparse.clone(),
                        refitted,
                        q,
                        ebic: ebic(q, &edge_counts, n, p, cfg.gamma_ebic),
                        edge_counts,
                        admm_iterations: sol.iterations,
                        primal_residual: sol.primal_residual,
                        dual_residual: sol.dual_residual,
                        converged: sol.converged,
                    },
                    failed,
                ))
            })
            .collect::<Result<_>>()?;
        let failed_refits = entries.iter().filter(|e| e.1).count();
        let path: Vec<PathEntry> = entries.into_iter().map(|e| e.0).collect();
        let selected = select_by_ebic(&path)
            .ok_or_else(|| FggmError::Numerical("no path point has a finite eBIC".into()))?;

        // the imputer is Θ-free, so the selected model does not change the
        // reconstruction
        let recon: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| self.imputer.impute_row(&self.data, self.cov.mean(), i).reconstructed)
            .collect::<Vec<_>>()
            .concat();
        let completed = FunctionalDataset::complete(self.data.grid().clone(), n, p, recon)?;
        let reconstructed = match &self.scaling {
            Some(st) => st.invert(&completed)?,
            None => completed,
        };
        let diagnostics = Diagnostics {
            em_iterations: self.iteration,
            em_changes: self.changes,
            em_converged: self.converged,
            n_components: self.eig.n_components(),
            explained: self.eig.explained().to_vec(),
            undefined_covariance_entries: self.cov.n_undefined(),
            alpha_choices: self.imputer.alpha_choices(),
            nonconverged_solves: path.iter().filter(|e| !e.converged).count(),
            failed_refits,
        };
        Ok(FitResult {
            path,
            selected,
            eigensystem: self.eig,
            scores,
            sample_covariances: s,
            reconstructed,
            diagnostics,
        })
    }
}

fn shape_kernel(
    cov: CovarianceField,
    eig: &EigenSystem,
    data: &FunctionalDataset,
    model: KernelModel,
) -> Result<CovarianceField> {
    match model {
        KernelModel::Pairwise => Ok(cov),
        KernelModel::PartiallySeparable => cov.partially_separable(eig, data.grid()),
    }
}

/// `Σ ‖Z^{t} − Z^{t−1}‖_F / Σ ‖Z^{t−1}‖_F` over every layer and path point.
fn path_change(prev: &[JglSolution], cur: &[JglSolution]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, b) in prev.iter().zip(cur) {
        for (x, y) in a.sparse.layers().iter().zip(b.sparse.layers()) {
            num += linalg::frobenius(&(y - x));
            den += linalg::frobenius(x);
        }
    }
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Runs the full EM fit.
pub fn fit(data: &FunctionalDataset, cfg: &FitConfig) -> Result<FitResult> {
    let mut engine = EmEngine::new(data, cfg.clone())?;
    engine.run()?;
    engine.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simgen::{inject_missingness, synthesize, GraphSpec, MissingnessSpec, Structure, SynthesisSpec};

    #[test]
    fn q_examples() {
        let eye = vec![DMatrix::<f64>::identity(15, 15); 3];
        assert!((q_function(&eye, &eye).unwrap() + 45.0).abs() < 1e-12);
        let s: Vec<DMatrix<f64>> = vec![
            DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]),
            DMatrix::from_row_slice(2, 2, &[1.5, -0.2, -0.2, 0.7]),
        ];
        let inv: Vec<_> = s.iter().map(|m| m.clone().try_inverse().unwrap()).collect();
        let expected: f64 = s.iter().map(|m| -m.determinant().ln() - 2.0_f64).sum();
        assert!((q_function(&inv, &s).unwrap() - expected).abs() < 1e-12);
        let c: f64 = 3.7;
        let s2: Vec<_> = s.iter().map(|m| m * c).collect();
        let inv2: Vec<_> = inv.iter().map(|m| m / c).collect();
        let diff = q_function(&inv2, &s2).unwrap() - q_function(&inv, &s).unwrap();
        assert!((diff - 2.0 * (-2.0 * c.ln())).abs() < 1e-12);
        let bad = vec![DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])];
        assert!(matches!(
            q_function(&bad, &s[..1]),
            Err(FggmError::NotPositiveDefinite(_))
        ));
    }

    #[test]
    fn ebic_examples() {
        assert_eq!(ebic(-7.5, &[0, 0, 0], 100, 15, 0.5), 15.0);
        let v = ebic(-10.0, &[2, 2, 2], 100, 15, 0.5);
        let expected = 20.0 + 3.0 * (2.0 * 100f64.ln() + 4.0 * 0.5 * 2.0 * 15f64.ln());
        assert!((v - expected).abs() < 1e-9);
        assert!((v - 80.13).abs() < 0.01);
        let step = ebic(-10.0, &[2, 3, 2], 100, 15, 0.5) - v;
        assert!((step - (100f64.ln() + 2.0 * 15f64.ln())).abs() < 1e-12);
    }

    fn entry(gamma1: f64, ebic: f64) -> PathEntry {
        PathEntry {
            gamma1,
            penalized: PrecisionEnsemble::new(vec![DMatrix::identity(2, 2)]).unwrap(),
            refitted: None,
            q: 0.0,
            ebic,
            edge_counts: vec![0],
            admm_iterations: 0,
            primal_residual: 0.0,
            dual_residual: 0.0,
            converged: true,
        }
    }

    #[test]
    fn ebic_ties_go_to_larger_gamma1() {
        let path = vec![entry(0.0, 3.0), entry(0.2, 1.0), entry(0.1, 1.0), entry(0.3, 2.0)];
        assert_eq!(select_by_ebic(&path), Some(1));
        let path = vec![entry(0.3, 1.0), entry(0.0, f64::NAN), entry(0.4, 1.0)];
        assert_eq!(select_by_ebic(&path), Some(2));
    }

    fn small_problem(missing: bool) -> FunctionalDataset {
        let graph = GraphSpec::new(Structure::SmallWorld, 6);
        let spec = SynthesisSpec::new(graph, 60, 20, 3);
        let (data, _) = synthesize(&spec, 11).unwrap();
        if missing {
            inject_missingness(&data, &MissingnessSpec::new(0.5, 0.3), 12).unwrap()
        } else {
            data
        }
    }

    fn quick_config() -> FitConfig {
        FitConfig {
            n_components: Some(3),
            gamma1_grid: Gamma1Grid::Equispaced { size: 6 },
            ..FitConfig::default()
        }
    }

    #[test]
    fn complete_data_is_a_fixed_point() {
        let data = small_problem(false);
        let res = fit(&data, &quick_config()).unwrap();
        assert_eq!(res.diagnostics.em_iterations, 2);
        assert!(res.diagnostics.em_converged);
        assert!(res.scores.mu_miss().values().iter().all(|&v| v == 0.0));
        assert_eq!(res.reconstructed.values(), data.values());
    }

    #[test]
    fn path_has_diagonal_top_and_selected_argmin() {
        let data = small_problem(true);
        let res = fit(&data, &quick_config()).unwrap();
        let top = res.path.last().unwrap();
        assert!(top.edge_counts.iter().all(|&c| c == 0));
        let best = res.path.iter().map(|e| e.ebic).fold(f64::INFINITY, f64::min);
        assert_eq!(res.selected_entry().ebic, best);
        assert!(res.reconstructed.is_fully_observed());
        for i in 0..data.n() {
            for j in 0..data.p() {
                let m = data.mask(i, j);
                for k in m.observed_indices() {
                    assert_eq!(res.reconstructed.curve(i, j)[k], data.curve(i, j)[k]);
                }
            }
        }
    }

    #[test]
    fn selection_ignores_grid_order() {
        let data = small_problem(true);
        let base = fit(&data, &quick_config()).unwrap();
        let mut grid: Vec<f64> = base.path.iter().map(|e| e.gamma1).collect();
        grid.reverse();
        grid.swap(1, 3);
        let cfg = FitConfig {
            gamma1_grid: Gamma1Grid::Explicit(grid),
            ..quick_config()
        };
        let shuffled = fit(&data, &cfg).unwrap();
        assert_eq!(base.selected_entry().gamma1, shuffled.selected_entry().gamma1);
    }

    #[test]
    fn per_iteration_refresh_runs() {
        let data = small_problem(true);
        let cfg = FitConfig {
            refresh: Refresh::PerIteration,
            max_em_iter: 4,
            ..quick_config()
        };
        let res = fit(&data, &cfg).unwrap();
        assert!(res.diagnostics.em_iterations >= 2);
        assert_eq!(res.diagnostics.em_changes.len(), res.diagnostics.em_iterations - 1);
    }

    #[test]
    fn separable_kernel_fits() {
        let data = small_problem(true);
        let cfg = FitConfig {
            kernel: KernelModel::PartiallySeparable,
            ..quick_config()
        };
        let res = fit(&data, &cfg).unwrap();
        assert!(res.reconstructed.is_fully_observed());
    }

    #[test]
    fn standardized_fit_reports_original_scale() {
        let data = small_problem(true);
        let cfg = FitConfig {
            standardize: true,
            ..quick_config()
        };
        let res = fit(&data, &cfg).unwrap();
        let m = data.mask(0, 0);
        for k in m.observed_indices() {
            assert!((res.reconstructed.curve(0, 0)[k] - data.curve(0, 0)[k]).abs() < 1e-10);
        }
    }
}
