//! Missing-aware first and second moments of multivariate functional data,
//! the averaged covariance operator and its quadrature eigensystem.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{FggmError, Result};
use crate::fda::{FunctionalDataset, Grid};
use crate::linalg;

/// Per-variable mean functions on the grid.
///
/// A grid point that no sample observes for variable `j` is left undefined
/// (value 0, flag `false`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanField {
    p: usize,
    d: usize,
    values: Vec<f64>,
    defined: Vec<bool>,
}

impl MeanField {
    pub fn zeros(p: usize, d: usize) -> Self {
        MeanField {
            p,
            d,
            values: vec![0.0; p * d],
            defined: vec![true; p * d],
        }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn curve(&self, j: usize) -> &[f64] {
        &self.values[j * self.d..(j + 1) * self.d]
    }

    pub fn is_defined(&self, j: usize, k: usize) -> bool {
        self.defined[j * self.d + k]
    }

    pub fn undefined_points(&self) -> Vec<(usize, usize)> {
        (0..self.p * self.d)
            .filter(|&c| !self.defined[c])
            .map(|c| (c / self.d, c % self.d))
            .collect()
    }

    /// Fails with the first never-observed point, if any.
    pub fn require_defined(&self) -> Result<()> {
        match self.undefined_points().first() {
            Some(&(variable, grid_index)) => Err(FggmError::UndefinedPoint {
                variable,
                grid_index,
            }),
            None => Ok(()),
        }
    }
}

/// Pointwise mean over the samples observing each grid point.
pub fn estimate_mean(data: &FunctionalDataset) -> MeanField {
    let (n, p, d) = (data.n(), data.p(), data.d());
    let mut sums = vec![0.0; p * d];
    let mut counts = vec![0usize; p * d];
    for i in 0..n {
        for j in 0..p {
            let mask = data.mask(i, j);
            let x = data.curve(i, j);
            for k in 0..d {
                if mask.is_observed(k) {
                    sums[j * d + k] += x[k];
                    counts[j * d + k] += 1;
                }
            }
        }
    }
    let defined: Vec<bool> = counts.iter().map(|&c| c > 0).collect();
    let values = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    MeanField {
        p,
        d,
        values,
        defined,
    }
}

/// Cross-covariance kernels `C_hk(s, t)` for all variable pairs, stored as
/// one `(p d) x (p d)` matrix indexed by `h * d + s`.
#[derive(Clone, Debug)]
pub struct CovarianceField {
    p: usize,
    d: usize,
    kernel: DMatrix<f64>,
    availability: Vec<u32>,
    mean: MeanField,
    undefined: usize,
}

impl CovarianceField {
    /// Wraps a known kernel (every entry defined, availability unknown).
    pub fn from_kernel(p: usize, d: usize, kernel: DMatrix<f64>) -> Result<Self> {
        if kernel.nrows() != p * d || kernel.ncols() != p * d {
            return Err(FggmError::dim(format!(
                "kernel is {}x{}, expected {}x{}",
                kernel.nrows(),
                kernel.ncols(),
                p * d,
                p * d
            )));
        }
        Ok(CovarianceField {
            p,
            d,
            kernel,
            availability: Vec::new(),
            mean: MeanField::zeros(p, d),
            undefined: 0,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn kernel(&self) -> &DMatrix<f64> {
        &self.kernel
    }

    pub fn mean(&self) -> &MeanField {
        &self.mean
    }

    pub fn entry(&self, h: usize, k: usize, s: usize, t: usize) -> f64 {
        self.kernel[(h * self.d + s, k * self.d + t)]
    }

    pub fn block(&self, h: usize, k: usize) -> DMatrix<f64> {
        self.kernel
            .view((h * self.d, k * self.d), (self.d, self.d))
            .into_owned()
    }

    /// Number of samples co-observing `(h, s)` and `(k, t)`; `None` when the
    /// field was built from a known kernel.
    pub fn availability(&self, h: usize, k: usize, s: usize, t: usize) -> Option<u32> {
        if self.availability.is_empty() {
            return None;
        }
        let pd = self.p * self.d;
        Some(self.availability[(h * self.d + s) + (k * self.d + t) * pd])
    }

    pub fn is_defined(&self, h: usize, k: usize, s: usize, t: usize) -> bool {
        self.availability(h, k, s, t).is_none_or(|c| c > 0)
    }

    /// Entries never co-observed by any sample; they hold 0.
    pub fn n_undefined(&self) -> usize {
        self.undefined
    }

    /// Copy with every cross block `C_hk`, `h != k`, set to zero.
    pub fn block_diagonal(&self) -> CovarianceField {
        let mut out = self.clone();
        let d = self.d;
        for h in 0..self.p {
            for k in 0..self.p {
                if h != k {
                    out.kernel.view_mut((h * d, k * d), (d, d)).fill(0.0);
                }
            }
        }
        out
    }

    /// Field rebuilt from its projections on a basis:
    /// `C̃_hk(s, t) = Σ_l σ_lhk φ_l(s) φ_l(t)` with `σ_lhk = ⟨C_hk φ_l, φ_l⟩`.
    ///
    /// Each layer's `p x p` matrix `[σ_lhk]` has its negative eigenvalues
    /// clipped, so the result is positive semidefinite of rank at most
    /// `p L`.
    pub fn partially_separable(&self, eig: &EigenSystem, grid: &Grid) -> Result<CovarianceField> {
        let (p, d) = (self.p, self.d);
        if grid.len() != d || eig.function(0).len() != d {
            return Err(FggmError::dim("basis or grid does not match the covariance field"));
        }
        let layers = eig.n_components();
        let w = grid.weights();
        let phi = DMatrix::from_fn(d, layers, |k, l| eig.function(l)[k]);
        let phi_w = DMatrix::from_fn(d, layers, |k, l| w[k] * eig.function(l)[k]);
        let mut sigmas = vec![DMatrix::zeros(p, p); layers];
        for h in 0..p {
            for k in 0..p {
                let proj = phi_w.transpose() * self.block(h, k) * &phi_w;
                for (l, s) in sigmas.iter_mut().enumerate() {
                    s[(h, k)] = proj[(l, l)];
                }
            }
        }
        let mut kernel = DMatrix::zeros(p * d, p * d);
        for (l, s) in sigmas.iter_mut().enumerate() {
            linalg::symmetrize(s);
            let (vals, vecs) = linalg::sym_eigen(s)?;
            let clipped = &vecs * DMatrix::from_diagonal(&vals.map(|v| v.max(0.0))) * vecs.transpose();
            let outer = phi.column(l) * phi.column(l).transpose();
            kernel += clipped.kronecker(&outer);
        }
        let mut out = self.clone();
        out.kernel = kernel;
        Ok(out)
    }
}

/// Pairwise-complete estimator of all cross-covariance functions.
///
/// For each `(h, s, k, t)` only samples observing both `X_h(s)` and
/// `X_k(t)` contribute, and the two centering means are computed over that
/// same set of samples. The divisor is the number of such samples.
pub fn estimate_covariance(data: &FunctionalDataset) -> Result<CovarianceField> {
    let (n, p, d) = (data.n(), data.p(), data.d());
    if n < 2 {
        return Err(FggmError::InvalidParameter(
            "covariance estimation needs at least 2 samples".into(),
        ));
    }
    let mean = estimate_mean(data);
    let pd = p * d;
    // Centering by the per-variable mean first leaves the pairwise estimator
    // unchanged and keeps the one-pass products well conditioned.
    let mut y = DMatrix::<f64>::zeros(n, pd);
    let mut ind = DMatrix::<f64>::zeros(n, pd);
    for i in 0..n {
        for j in 0..p {
            let mask = data.mask(i, j);
            let x = data.curve(i, j);
            let mu = mean.curve(j);
            for k in 0..d {
                if mask.is_observed(k) {
                    y[(i, j * d + k)] = x[k] - mu[k];
                    ind[(i, j * d + k)] = 1.0;
                }
            }
        }
    }
    let counts = ind.transpose() * &ind;
    let cross = y.transpose() * &y;
    let first_sums = y.transpose() * &ind;

    let mut kernel = DMatrix::<f64>::zeros(pd, pd);
    let mut availability = vec![0u32; pd * pd];
    let mut undefined = 0usize;
    for b in 0..pd {
        for a in 0..pd {
            let c = counts[(a, b)];
            availability[a + b * pd] = c as u32;
            if c > 0.0 {
                let m1 = first_sums[(a, b)] / c;
                let m2 = first_sums[(b, a)] / c;
                kernel[(a, b)] = cross[(a, b)] / c - m1 * m2;
            } else {
                undefined += 1;
            }
        }
    }
    if undefined > 0 {
        log::warn!("{undefined} covariance entries are never co-observed; filled with 0");
    }
    linalg::symmetrize(&mut kernel);
    Ok(CovarianceField {
        p,
        d,
        kernel,
        availability,
        mean,
        undefined,
    })
}

/// Pointwise centering and scaling of each variable, estimated from the
/// observed values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    mean: MeanField,
    sd: Vec<f64>,
}

impl Standardization {
    pub fn estimate(data: &FunctionalDataset) -> Result<Self> {
        let (n, p, d) = (data.n(), data.p(), data.d());
        let mean = estimate_mean(data);
        mean.require_defined()?;
        let mut sd = vec![0.0; p * d];
        for j in 0..p {
            let mu = mean.curve(j);
            let mut ss = vec![0.0; d];
            let mut cnt = vec![0usize; d];
            let mut scale: f64 = 0.0;
            for i in 0..n {
                let mask = data.mask(i, j);
                let x = data.curve(i, j);
                for k in 0..d {
                    if mask.is_observed(k) {
                        let r = x[k] - mu[k];
                        ss[k] += r * r;
                        cnt[k] += 1;
                        scale = scale.max(x[k].abs());
                    }
                }
            }
            for k in 0..d {
                let var = ss[k] / cnt[k] as f64;
                if var == 0.0 || var <= (1e-12 * scale).powi(2) {
                    return Err(FggmError::DegenerateVariance {
                        variable: j,
                        grid_index: k,
                    });
                }
                sd[j * d + k] = var.sqrt();
            }
        }
        Ok(Standardization { mean, sd })
    }

    pub fn mean(&self) -> &MeanField {
        &self.mean
    }

    /// Pointwise standard deviations flattened as `j * d + k`.
    pub fn sd(&self) -> &[f64] {
        &self.sd
    }

    pub fn apply(&self, data: &FunctionalDataset) -> Result<FunctionalDataset> {
        self.map(data, |x, mu, sd| (x - mu) / sd)
    }

    pub fn invert(&self, data: &FunctionalDataset) -> Result<FunctionalDataset> {
        self.map(data, |z, mu, sd| z * sd + mu)
    }

    fn map(&self, data: &FunctionalDataset, f: impl Fn(f64, f64, f64) -> f64) -> Result<FunctionalDataset> {
        let (n, p, d) = (data.n(), data.p(), data.d());
        if self.mean.p() != p || self.mean.d() != d {
            return Err(FggmError::dim("standardization does not match the dataset"));
        }
        let mut values = data.values().to_vec();
        for i in 0..n {
            for j in 0..p {
                let mask = data.mask(i, j);
                let mu = self.mean.curve(j);
                for k in 0..d {
                    if mask.is_observed(k) {
                        let v = &mut values[(i * p + j) * d + k];
                        *v = f(*v, mu[k], self.sd[j * d + k]);
                    }
                }
            }
        }
        FunctionalDataset::new(data.grid().clone(), n, p, values, data.masks().to_vec())
    }
}

/// Centers each curve by its variable's mean function and scales by the
/// pointwise standard deviation, using only observed values.
pub fn standardize(data: &FunctionalDataset) -> Result<FunctionalDataset> {
    Standardization::estimate(data)?.apply(data)
}

/// Kernel of the averaged operator `H = p^{-1} sum_h C_hh`.
pub fn build_h(cov: &CovarianceField) -> Result<DMatrix<f64>> {
    let (p, d) = (cov.p(), cov.d());
    let mut h = DMatrix::<f64>::zeros(d, d);
    for j in 0..p {
        for s in 0..d {
            for t in 0..d {
                if !cov.is_defined(j, j, s, t) {
                    return Err(FggmError::UndefinedPoint {
                        variable: j,
                        grid_index: s,
                    });
                }
            }
        }
        h += cov.block(j, j);
    }
    Ok(h / p as f64)
}

/// Eigenfunctions and eigenvalues of a discretized covariance operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenSystem {
    functions: Vec<Vec<f64>>,
    values: Vec<f64>,
    explained: Vec<f64>,
    n_components: usize,
}

impl EigenSystem {
    /// Builds a system from known orthonormal functions, e.g. a synthesis
    /// basis. All functions are retained.
    pub fn from_parts(functions: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        if functions.len() != values.len() || functions.is_empty() {
            return Err(FggmError::dim("eigen system needs one value per function"));
        }
        let explained = cumulative_fractions(&values);
        let n_components = functions.len();
        Ok(EigenSystem {
            functions,
            values,
            explained,
            n_components,
        })
    }

    pub fn function(&self, l: usize) -> &[f64] {
        &self.functions[l]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Cumulative explained-variance fractions; `explained()[m]` covers the
    /// first `m + 1` components.
    pub fn explained(&self) -> &[f64] {
        &self.explained
    }

    /// Number of components in use (the truncation level `L`).
    pub fn n_components(&self) -> usize {
        self.n_components
    }

    pub fn max_components(&self) -> usize {
        self.functions.len()
    }

    pub fn with_components(mut self, l: usize) -> Result<Self> {
        if l == 0 || l > self.functions.len() {
            return Err(FggmError::InvalidParameter(format!(
                "truncation level {l} outside 1..={}",
                self.functions.len()
            )));
        }
        self.n_components = l;
        Ok(self)
    }
}

fn cumulative_fractions(values: &[f64]) -> Vec<f64> {
    let mut partial = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for v in values {
        acc += v;
        partial.push(acc);
    }
    let total = acc;
    partial
        .into_iter()
        .map(|s| if total > 0.0 { s / total } else { 0.0 })
        .collect()
}

/// Solves `∫ H(s, t) φ(t) dt = λ φ(s)` under trapezoid quadrature.
///
/// Eigenpairs of `W^{1/2} H W^{1/2}` are mapped back by `φ = W^{-1/2} v`, so
/// the returned functions are orthonormal in the quadrature inner product.
/// Negative eigenvalues are clipped to zero and each function's first
/// non-negligible value is made positive.
pub fn eigendecompose_h(h: &DMatrix<f64>, grid: &Grid) -> Result<EigenSystem> {
    let d = grid.len();
    if h.nrows() != d || h.ncols() != d {
        return Err(FggmError::dim(format!(
            "kernel is {}x{}, grid has {d} points",
            h.nrows(),
            h.ncols()
        )));
    }
    let asym = linalg::max_asymmetry(h);
    if asym > 1e-8 {
        return Err(FggmError::NotSymmetric(asym));
    }
    let sqrt_w: Vec<f64> = grid.weights().iter().map(|w| w.sqrt()).collect();
    let scaled = DMatrix::from_fn(d, d, |s, t| sqrt_w[s] * h[(s, t)] * sqrt_w[t]);
    let (vals, vecs) = linalg::sym_eigen(&scaled)?;

    let mut functions = Vec::with_capacity(d);
    let mut values = Vec::with_capacity(d);
    for l in 0..d {
        let mut phi: Vec<f64> = (0..d).map(|s| vecs[(s, l)] / sqrt_w[s]).collect();
        let peak = phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if let Some(first) = phi.iter().find(|v| v.abs() > 1e-10 * peak) {
            if *first < 0.0 {
                phi.iter_mut().for_each(|v| *v = -*v);
            }
        }
        functions.push(phi);
        values.push(vals[l].max(0.0));
    }
    let explained = cumulative_fractions(&values);
    Ok(EigenSystem {
        functions,
        values,
        explained,
        n_components: d,
    })
}

/// Smallest `L` whose leading eigenvalues explain at least `threshold` of
/// the total variance.
pub fn select_l(eig: &EigenSystem, threshold: f64) -> Result<usize> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(FggmError::InvalidParameter(format!(
            "variance threshold {threshold} outside (0, 1]"
        )));
    }
    let total: f64 = eig.values().iter().sum();
    if total <= 0.0 {
        return Err(FggmError::DegenerateSpectrum);
    }
    let explained = eig.explained();
    Ok(explained
        .iter()
        .position(|&f| f >= threshold)
        .map_or(explained.len(), |m| m + 1))
}
