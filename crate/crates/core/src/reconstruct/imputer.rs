use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gcv::{donor_parts, select_from_donors, AlphaGrid, GcvSelection};
use super::pattern::{flat_weights, rhs_matrix, ObservedPattern};
use super::ridge::PatternSpectrum;
use crate::error::{FggmError, Result};
use crate::fda::{FunctionalDataset, Grid};
use crate::moments::{CovarianceField, EigenSystem};

/// Which covariance information the imputation may use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImputationMethod {
    /// All cross-covariance blocks: missing fragments of one variable are
    /// predicted from the observed fragments of every variable.
    Multivariate,
    /// Each variable on its own, cross blocks ignored.
    Univariate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaSelection {
    Gcv(AlphaGrid),
    Fixed(f64),
}

impl Default for AlphaSelection {
    fn default() -> Self {
        AlphaSelection::Gcv(AlphaGrid::default())
    }
}

/// Frozen linear maps for one observation pattern (or, for the univariate
/// method, one variable of a pattern) at its selected ridge value.
#[derive(Clone, Debug)]
pub struct PatternImputer {
    variable: Option<usize>,
    observed: Vec<usize>,
    missing: Vec<usize>,
    targets: Vec<usize>,
    n_layers: usize,
    alpha: f64,
    df: f64,
    gcv: Option<GcvSelection>,
    /// Rows `(target, layer)`: centered observed values to imputed scores.
    score_map: DMatrix<f64>,
    /// Centered observed values to centered missing values.
    recon_map: DMatrix<f64>,
}

impl PatternImputer {
    #[allow(clippy::too_many_arguments)]
    fn build(
        spectrum: &PatternSpectrum,
        alpha: f64,
        kernel: &DMatrix<f64>,
        grid: &Grid,
        targets: Vec<(usize, Vec<usize>)>,
        eig: &EigenSystem,
        variable: Option<usize>,
        gcv: Option<GcvSelection>,
    ) -> Self {
        let layers: Vec<usize> = (0..eig.n_components()).collect();
        let observed = spectrum.observed().to_vec();
        let r = rhs_matrix(kernel, grid, &observed, &targets, eig, &layers);
        let d = grid.len();
        let mut wb = spectrum.solve(alpha, &r);
        for (a, mut row) in wb.row_iter_mut().enumerate() {
            row *= grid.weights()[observed[a] % d];
        }
        PatternImputer {
            variable,
            missing: spectrum.missing().to_vec(),
            observed,
            targets: targets.iter().map(|(j, _)| *j).collect(),
            n_layers: layers.len(),
            alpha,
            df: spectrum.effective_df(alpha),
            gcv,
            score_map: wb.transpose(),
            recon_map: spectrum.reconstruction_map(alpha),
        }
    }

    /// The variable this imputer serves under the univariate method.
    pub fn variable(&self) -> Option<usize> {
        self.variable
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn df(&self) -> f64 {
        self.df
    }

    pub fn gcv(&self) -> Option<&GcvSelection> {
        self.gcv.as_ref()
    }

    /// Adds imputed scores into `mu` (p x L) and writes the centered
    /// reconstruction of the missing points into `recon` (length p d).
    fn apply(&self, centered: &[f64], mu: &mut DMatrix<f64>, recon: &mut [f64]) {
        let x = DVector::from_iterator(self.observed.len(), self.observed.iter().map(|&c| centered[c]));
        let scores = &self.score_map * &x;
        for (ti, &j) in self.targets.iter().enumerate() {
            for l in 0..self.n_layers {
                mu[(j, l)] += scores[ti * self.n_layers + l];
            }
        }
        let fill = &self.recon_map * &x;
        for (a, &c) in self.missing.iter().enumerate() {
            recon[c] = fill[a];
        }
    }
}

/// Imputation output for one multivariate observation.
#[derive(Clone, Debug, PartialEq)]
pub struct ImputationResult {
    /// Imputed missing-score parts, `p x L`.
    pub mu_m_given_o: DMatrix<f64>,
    /// Completed curves flattened as `j * d + k`: observed values copied
    /// through, missing values reconstructed with the mean added back.
    pub reconstructed: Vec<f64>,
    /// Ridge values used: one for the multivariate method, one per
    /// partially observed variable for the univariate method.
    pub alpha_used: Vec<f64>,
    pub df: Vec<f64>,
}

/// Ridge choice reported for one pattern unit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaChoice {
    pub rows: Vec<usize>,
    pub variable: Option<usize>,
    pub alpha: f64,
    pub df: f64,
}

/// Per-pattern imputers for a whole dataset.
///
/// Rows sharing an observation pattern share one factorization and one
/// ridge value. Nothing here depends on a precision matrix.
#[derive(Clone, Debug)]
pub struct Imputer {
    method: ImputationMethod,
    p: usize,
    d: usize,
    n_layers: usize,
    row_unit: Vec<Option<usize>>,
    units: Vec<(Vec<usize>, Vec<PatternImputer>)>,
}

impl Imputer {
    pub fn build(
        data: &FunctionalDataset,
        cov: &CovarianceField,
        eig: &EigenSystem,
        method: ImputationMethod,
        selection: AlphaSelection,
    ) -> Result<Self> {
        let (n, p, d) = (data.n(), data.p(), data.d());
        if cov.p() != p || cov.d() != d {
            return Err(FggmError::dim("covariance field does not match the dataset"));
        }
        if eig.function(0).len() != d {
            return Err(FggmError::dim("eigen system does not match the grid"));
        }
        cov.mean().require_defined()?;

        let mut index: HashMap<&[crate::fda::DomainMask], usize> = HashMap::new();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut row_unit = vec![None; n];
        for (i, unit) in row_unit.iter_mut().enumerate() {
            if data.is_complete_row(i) {
                continue;
            }
            let key = data.row_masks(i);
            let u = *index.entry(key).or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
            groups[u].push(i);
            *unit = Some(u);
        }

        let alphas = match selection {
            AlphaSelection::Gcv(grid) => Some(grid.values(eig.values()[0])?),
            AlphaSelection::Fixed(a) if a > 0.0 && a.is_finite() => None,
            AlphaSelection::Fixed(a) => {
                return Err(FggmError::InvalidParameter(format!("ridge value {a} must be positive")))
            }
        };
        let complete = data.complete_rows();
        if method == ImputationMethod::Multivariate
            && alphas.is_some()
            && !groups.is_empty()
            && complete.is_empty()
        {
            return Err(FggmError::NoCompleteCurves);
        }
        let weights = flat_weights(data.grid(), p);
        let kernel = cov.kernel();
        let grid = data.grid();
        let ctx = UnitContext {
            data,
            cov,
            eig,
            kernel,
            weights: &weights,
            grid,
            alphas: alphas.as_deref(),
            fixed: match selection {
                AlphaSelection::Fixed(a) => a,
                AlphaSelection::Gcv(_) => f64::NAN,
            },
        };

        let units = groups
            .into_par_iter()
            .map(|rows| {
                let pattern = ObservedPattern::new(data.row_masks(rows[0]))?;
                let imputers = match method {
                    ImputationMethod::Multivariate => {
                        let targets: Vec<(usize, Vec<usize>)> = (0..p)
                            .map(|j| (j, pattern.missing_of(j)))
                            .filter(|(_, m)| !m.is_empty())
                            .collect();
                        let donors = &complete;
                        vec![ctx.unit(
                            pattern.observed().to_vec(),
                            pattern.missing().to_vec(),
                            targets,
                            donors,
                            None,
                        )?]
                    }
                    ImputationMethod::Univariate => (0..p)
                        .filter(|&j| !pattern.masks()[j].is_full())
                        .map(|j| {
                            let donors: Vec<usize> =
                                (0..n).filter(|&i| data.mask(i, j).is_full()).collect();
                            if ctx.alphas.is_some() && donors.is_empty() {
                                return Err(FggmError::NoCompleteCurves);
                            }
                            let miss = pattern.missing_of(j);
                            ctx.unit(
                                pattern.observed_of(j),
                                miss.clone(),
                                vec![(j, miss)],
                                &donors,
                                Some(j),
                            )
                        })
                        .collect::<Result<Vec<_>>>()?,
                };
                Ok((rows, imputers))
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(Imputer {
            method,
            p,
            d,
            n_layers: eig.n_components(),
            row_unit,
            units,
        })
    }

    pub fn method(&self) -> ImputationMethod {
        self.method
    }

    pub fn n_patterns(&self) -> usize {
        self.units.len()
    }

    pub fn alpha_choices(&self) -> Vec<AlphaChoice> {
        self.units
            .iter()
            .flat_map(|(rows, imps)| {
                imps.iter().map(move |imp| AlphaChoice {
                    rows: rows.clone(),
                    variable: imp.variable(),
                    alpha: imp.alpha(),
                    df: imp.df(),
                })
            })
            .collect()
    }

    pub fn pattern_imputers(&self, i: usize) -> &[PatternImputer] {
        match self.row_unit[i] {
            Some(u) => &self.units[u].1,
            None => &[],
        }
    }

    /// Imputes row `i` of `data`, which must be the dataset the imputer was
    /// built for (same masks). `mean` is the per-variable mean field.
    pub fn impute_row(
        &self,
        data: &FunctionalDataset,
        mean: &crate::moments::MeanField,
        i: usize,
    ) -> ImputationResult {
        let (p, d) = (self.p, self.d);
        let raw = &data.values()[i * p * d..(i + 1) * p * d];
        let centered: Vec<f64> = (0..p * d).map(|c| raw[c] - mean.curve(c / d)[c % d]).collect();
        let mut mu = DMatrix::zeros(p, self.n_layers);
        let mut recon = vec![0.0; p * d];
        let imps = self.pattern_imputers(i);
        for imp in imps {
            imp.apply(&centered, &mut mu, &mut recon);
        }
        let reconstructed = (0..p * d)
            .map(|c| {
                if data.mask(i, c / d).is_observed(c % d) {
                    raw[c]
                } else {
                    recon[c] + mean.curve(c / d)[c % d]
                }
            })
            .collect();
        ImputationResult {
            mu_m_given_o: mu,
            reconstructed,
            alpha_used: imps.iter().map(PatternImputer::alpha).collect(),
            df: imps.iter().map(PatternImputer::df).collect(),
        }
    }
}

struct UnitContext<'a> {
    data: &'a FunctionalDataset,
    cov: &'a CovarianceField,
    eig: &'a EigenSystem,
    kernel: &'a DMatrix<f64>,
    weights: &'a [f64],
    grid: &'a Grid,
    alphas: Option<&'a [f64]>,
    fixed: f64,
}

impl UnitContext<'_> {
    fn unit(
        &self,
        observed: Vec<usize>,
        missing: Vec<usize>,
        targets: Vec<(usize, Vec<usize>)>,
        donors: &[usize],
        variable: Option<usize>,
    ) -> Result<PatternImputer> {
        let spectrum = PatternSpectrum::from_indices(self.kernel, self.weights, observed, missing)?;
        let (alpha, gcv) = match self.alphas {
            Some(alphas) => {
                let (o, m) =
                    donor_parts(self.data, self.cov, donors, spectrum.observed(), spectrum.missing());
                let sel = select_from_donors(&spectrum, &o, &m, alphas)?;
                (sel.alpha, Some(sel))
            }
            None => (self.fixed, None),
        };
        Ok(PatternImputer::build(
            &spectrum, alpha, self.kernel, self.grid, targets, self.eig, variable, gcv,
        ))
    }
}

fn single_unit(
    cov: &CovarianceField,
    grid: &Grid,
    pattern: &ObservedPattern,
    eig: Option<&EigenSystem>,
    alpha: f64,
    method: ImputationMethod,
) -> Result<Vec<PatternImputer>> {
    pattern.check_against(cov, grid)?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(FggmError::InvalidParameter(format!("ridge value {alpha} must be positive")));
    }
    let p = cov.p();
    let weights = flat_weights(grid, p);
    let placeholder;
    let eig = match eig {
        Some(e) => e,
        None => {
            placeholder = EigenSystem::from_parts(vec![vec![0.0; grid.len()]], vec![1.0])?;
            &placeholder
        }
    };
    let units: Vec<(Vec<usize>, Vec<usize>, Vec<(usize, Vec<usize>)>, Option<usize>)> = match method {
        ImputationMethod::Multivariate => vec![(
            pattern.observed().to_vec(),
            pattern.missing().to_vec(),
            (0..p).map(|j| (j, pattern.missing_of(j))).filter(|(_, m)| !m.is_empty()).collect(),
            None,
        )],
        ImputationMethod::Univariate => (0..p)
            .filter(|&j| !pattern.masks()[j].is_full())
            .map(|j| (pattern.observed_of(j), pattern.missing_of(j), vec![(j, pattern.missing_of(j))], Some(j)))
            .collect(),
    };
    units
        .into_iter()
        .filter(|(_, m, _, _)| !m.is_empty())
        .map(|(o, m, t, v)| {
            let spectrum = PatternSpectrum::from_indices(cov.kernel(), &weights, o, m)?;
            Ok(PatternImputer::build(
                &spectrum,
                alpha,
                cov.kernel(),
                grid,
                t,
                eig,
                v,
                None,
            ))
        })
        .collect()
}

fn check_row(row: &[f64], cov: &CovarianceField) -> Result<()> {
    if row.len() != cov.p() * cov.d() {
        return Err(FggmError::dim(format!(
            "row has {} values, expected {}",
            row.len(),
            cov.p() * cov.d()
        )));
    }
    Ok(())
}

/// Imputed missing-score parts `μ^{m|o}` (p x L) of one observation.
/// `centered` holds the row minus the per-variable means, flattened as
/// `j * d + k`; only observed entries are read.
pub fn impute_scores(
    centered: &[f64],
    pattern: &ObservedPattern,
    cov: &CovarianceField,
    grid: &Grid,
    eig: &EigenSystem,
    alpha: f64,
) -> Result<DMatrix<f64>> {
    check_row(centered, cov)?;
    let mut mu = DMatrix::zeros(cov.p(), eig.n_components());
    let mut scratch = vec![0.0; centered.len()];
    for imp in single_unit(cov, grid, pattern, Some(eig), alpha, ImputationMethod::Multivariate)? {
        imp.apply(centered, &mut mu, &mut scratch);
    }
    Ok(mu)
}

/// Completes one observation: observed points copied through, missing
/// points predicted from the observed fragments plus the mean of `cov`.
pub fn reconstruct_curves(
    row: &[f64],
    pattern: &ObservedPattern,
    cov: &CovarianceField,
    grid: &Grid,
    alpha: f64,
) -> Result<Vec<f64>> {
    complete_row(row, pattern, cov, grid, None, alpha, ImputationMethod::Multivariate)
        .map(|r| r.reconstructed)
}

/// Univariate baseline: each variable imputed from its own fragment only,
/// with the same basis as the multivariate imputer.
pub fn kraus_univariate_impute(
    row: &[f64],
    pattern: &ObservedPattern,
    cov: &CovarianceField,
    grid: &Grid,
    eig: &EigenSystem,
    alpha: f64,
) -> Result<ImputationResult> {
    complete_row(row, pattern, cov, grid, Some(eig), alpha, ImputationMethod::Univariate)
}

fn complete_row(
    row: &[f64],
    pattern: &ObservedPattern,
    cov: &CovarianceField,
    grid: &Grid,
    eig: Option<&EigenSystem>,
    alpha: f64,
    method: ImputationMethod,
) -> Result<ImputationResult> {
    check_row(row, cov)?;
    let (p, d) = (cov.p(), cov.d());
    let mean = cov.mean();
    let centered: Vec<f64> = (0..p * d).map(|c| row[c] - mean.curve(c / d)[c % d]).collect();
    let imps = single_unit(cov, grid, pattern, eig, alpha, method)?;
    let layers = eig.map_or(1, EigenSystem::n_components);
    let mut mu = DMatrix::zeros(p, layers);
    let mut recon = vec![0.0; p * d];
    for imp in &imps {
        imp.apply(&centered, &mut mu, &mut recon);
    }
    let reconstructed = (0..p * d)
        .map(|c| {
            if pattern.masks()[c / d].is_observed(c % d) {
                row[c]
            } else {
                recon[c] + mean.curve(c / d)[c % d]
            }
        })
        .collect();
    Ok(ImputationResult {
        mu_m_given_o: if eig.is_some() { mu } else { DMatrix::zeros(p, 0) },
        reconstructed,
        alpha_used: imps.iter().map(|i| i.alpha()).collect(),
        df: imps.iter().map(|i| i.df()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fda::{inner_product, DomainMask};
    use std::f64::consts::PI;

    fn fourier(grid: &Grid, l: usize) -> Vec<f64> {
        grid.points()
            .iter()
            .map(|&t| match l {
                0 => 1.0,
                _ if l % 2 == 1 => 2f64.sqrt() * (2.0 * PI * ((l + 1) / 2) as f64 * t).sin(),
                _ => 2f64.sqrt() * (2.0 * PI * (l / 2) as f64 * t).cos(),
            })
            .collect()
    }

    /// Kernel of `X_j = Σ_l ξ_jl φ_l` with `Cov(ξ_l) = sigma[l]`.
    fn separable_kernel(grid: &Grid, sigma: &[DMatrix<f64>]) -> DMatrix<f64> {
        let p = sigma[0].nrows();
        let d = grid.len();
        let phi: Vec<Vec<f64>> = (0..sigma.len()).map(|l| fourier(grid, l)).collect();
        DMatrix::from_fn(p * d, p * d, |a, b| {
            let (h, s, k, t) = (a / d, a % d, b / d, b % d);
            (0..sigma.len()).map(|l| sigma[l][(h, k)] * phi[l][s] * phi[l][t]).sum()
        })
    }

    fn example() -> (Grid, CovarianceField, EigenSystem) {
        let d = 30;
        let grid = Grid::new(d).unwrap();
        let s1 = DMatrix::from_row_slice(2, 2, &[1.0, 0.6, 0.6, 1.0]);
        let s2 = DMatrix::from_row_slice(2, 2, &[0.5, -0.2, -0.2, 0.4]);
        let k = separable_kernel(&grid, &[s1, s2]);
        let cov = CovarianceField::from_kernel(2, d, k).unwrap();
        let eig = EigenSystem::from_parts(vec![fourier(&grid, 0), fourier(&grid, 1)], vec![1.0, 0.45])
            .unwrap();
        (grid, cov, eig)
    }

    fn row(grid: &Grid, coefs: &[[f64; 2]; 2]) -> Vec<f64> {
        let phi = [fourier(grid, 0), fourier(grid, 1)];
        (0..2)
            .flat_map(|j| (0..grid.len()).map(move |k| (j, k)))
            .map(|(j, k)| coefs[j][0] * phi[0][k] + coefs[j][1] * phi[1][k])
            .collect()
    }

    #[test]
    fn complete_observation_needs_no_imputation() {
        let (grid, cov, eig) = example();
        let d = grid.len();
        let pattern = ObservedPattern::new(&[DomainMask::full(d), DomainMask::full(d)]).unwrap();
        let x = row(&grid, &[[0.3, -1.0], [0.7, 0.2]]);
        let mu = impute_scores(&x, &pattern, &cov, &grid, &eig, 1e-3).unwrap();
        assert!(mu.iter().all(|&v| v == 0.0));
        assert_eq!(reconstruct_curves(&x, &pattern, &cov, &grid, 1e-3).unwrap(), x);
    }

    #[test]
    fn zero_fragment_imputes_zero_and_mean() {
        let (grid, cov, eig) = example();
        let d = grid.len();
        let masks = [DomainMask::with_gap(d, 4, 10).unwrap(), DomainMask::with_gap(d, 15, 12).unwrap()];
        let pattern = ObservedPattern::new(&masks).unwrap();
        let x = vec![0.0; 2 * d];
        let mu = impute_scores(&x, &pattern, &cov, &grid, &eig, 1e-4).unwrap();
        assert!(mu.iter().all(|&v| v == 0.0));
        let rec = reconstruct_curves(&x, &pattern, &cov, &grid, 1e-4).unwrap();
        assert!(rec.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn scores_are_projections_of_reconstruction() {
        let (grid, cov, eig) = example();
        let d = grid.len();
        let masks = [DomainMask::with_gap(d, 2, 9).unwrap(), DomainMask::with_gap(d, 18, 8).unwrap()];
        let pattern = ObservedPattern::new(&masks).unwrap();
        let x = row(&grid, &[[0.4, 1.1], [-0.9, 0.5]]);
        for alpha in [1e-6, 1e-3, 0.1] {
            let mu = impute_scores(&x, &pattern, &cov, &grid, &eig, alpha).unwrap();
            let rec = reconstruct_curves(&x, &pattern, &cov, &grid, alpha).unwrap();
            for (j, mask) in masks.iter().enumerate() {
                let missing = DomainMask::new(mask.as_slice().iter().map(|o| !o).collect()).unwrap();
                for l in 0..2 {
                    let proj =
                        inner_product(&grid, eig.function(l), &rec[j * d..(j + 1) * d], Some(&missing))
                            .unwrap();
                    assert!((mu[(j, l)] - proj).abs() < 1e-8, "alpha {alpha}: {} vs {proj}", mu[(j, l)]);
                }
            }
        }
    }

    #[test]
    fn rank_one_process_is_recovered_on_missing_half() {
        let d = 40;
        let grid = Grid::new(d).unwrap();
        let phi = fourier(&grid, 1);
        let k = DMatrix::from_fn(d, d, |s, t| phi[s] * phi[t]);
        let cov = CovarianceField::from_kernel(1, d, k).unwrap();
        let mask = DomainMask::new(grid.points().iter().map(|&t| t < 0.5).collect()).unwrap();
        let pattern = ObservedPattern::new(std::slice::from_ref(&mask)).unwrap();
        let xi = 1.7;
        let x: Vec<f64> = phi.iter().map(|v| xi * v).collect();
        let rec = reconstruct_curves(&x, &pattern, &cov, &grid, 1e-10).unwrap();
        for k in mask.missing_indices() {
            assert!((rec[k] - x[k]).abs() < 1e-6);
        }
    }

    #[test]
    fn univariate_matches_multivariate_for_one_variable() {
        let d = 25;
        let grid = Grid::new(d).unwrap();
        let s = DMatrix::from_element(1, 1, 1.0);
        let s2 = DMatrix::from_element(1, 1, 0.3);
        let cov = CovarianceField::from_kernel(1, d, separable_kernel(&grid, &[s, s2])).unwrap();
        let eig = EigenSystem::from_parts(vec![fourier(&grid, 0), fourier(&grid, 1)], vec![1.0, 0.3])
            .unwrap();
        let pattern = ObservedPattern::new(&[DomainMask::with_gap(d, 8, 7).unwrap()]).unwrap();
        let x: Vec<f64> = grid.points().iter().map(|&t| 0.5 + (2.0 * PI * t).sin()).collect();
        let uni = kraus_univariate_impute(&x, &pattern, &cov, &grid, &eig, 1e-3).unwrap();
        let multi = impute_scores(&x, &pattern, &cov, &grid, &eig, 1e-3).unwrap();
        assert!((uni.mu_m_given_o - multi).abs().max() < 1e-12);
        let rec = reconstruct_curves(&x, &pattern, &cov, &grid, 1e-3).unwrap();
        assert_eq!(uni.reconstructed, rec);
    }

    #[test]
    fn univariate_ignores_cross_information() {
        let (grid, cov, eig) = example();
        let d = grid.len();
        let masks = [DomainMask::with_gap(d, 5, 12).unwrap(), DomainMask::full(d)];
        let pattern = ObservedPattern::new(&masks).unwrap();
        let mut x = row(&grid, &[[0.2, 0.9], [1.0, -0.4]]);
        let base = kraus_univariate_impute(&x, &pattern, &cov, &grid, &eig, 1e-3).unwrap();
        for v in &mut x[d..] {
            *v += 3.0;
        }
        let shifted = kraus_univariate_impute(&x, &pattern, &cov, &grid, &eig, 1e-3).unwrap();
        assert_eq!(base.mu_m_given_o, shifted.mu_m_given_o);
        assert_eq!(base.alpha_used.len(), 1);
    }
}
