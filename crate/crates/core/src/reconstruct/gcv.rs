use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::pattern::ObservedPattern;
use super::ridge::PatternSpectrum;
use crate::error::{FggmError, Result};
use crate::fda::{FunctionalDataset, Grid};
use crate::moments::CovarianceField;

/// Log-spaced ridge candidates `[low, high] · scale`, ascending.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaGrid {
    pub count: usize,
    pub low: f64,
    pub high: f64,
}

impl Default for AlphaGrid {
    fn default() -> Self {
        AlphaGrid {
            count: 20,
            low: 1e-6,
            high: 1e1,
        }
    }
}

impl AlphaGrid {
    pub fn values(&self, scale: f64) -> Result<Vec<f64>> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(FggmError::DegenerateSpectrum);
        }
        if self.count == 0 || !(self.low > 0.0 && self.high >= self.low) {
            return Err(FggmError::InvalidParameter(format!(
                "alpha grid needs count >= 1 and 0 < low <= high, got {self:?}"
            )));
        }
        if self.count == 1 {
            return Ok(vec![self.low * scale]);
        }
        let (a, b) = (self.low.ln(), self.high.ln());
        let step = (b - a) / (self.count - 1) as f64;
        Ok((0..self.count)
            .map(|i| (a + step * i as f64).exp() * scale)
            .collect())
    }
}

/// Outcome of ridge selection for one pattern.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GcvSelection {
    pub alpha: f64,
    pub df: f64,
    /// `(α, gcv)` per candidate; `None` marks candidates skipped because
    /// `df(α) ≥ |𝕆|`.
    pub scores: Vec<(f64, Option<f64>)>,
}

/// GCV over donor curves already split into observed and missing parts.
pub(crate) fn select_from_donors(
    spectrum: &PatternSpectrum,
    donors_o: &DMatrix<f64>,
    donors_m: &DMatrix<f64>,
    alphas: &[f64],
) -> Result<GcvSelection> {
    let n_donors = donors_o.ncols();
    if n_donors == 0 {
        return Err(FggmError::NoCompleteCurves);
    }
    if alphas.is_empty() {
        return Err(FggmError::InvalidParameter("empty alpha grid".into()));
    }
    let errors = spectrum.donor_errors(donors_o, donors_m, alphas);
    let mut scores = Vec::with_capacity(alphas.len());
    let mut best: Option<(f64, f64, f64)> = None;
    for (&alpha, &err) in alphas.iter().zip(&errors) {
        let df = spectrum.effective_df(alpha);
        let ratio = df / n_donors as f64;
        if ratio >= 1.0 {
            scores.push((alpha, None));
            continue;
        }
        let gcv = err / (1.0 - ratio).powi(2);
        scores.push((alpha, Some(gcv)));
        let replace = match best {
            None => true,
            Some((ba, _, bg)) => gcv < bg || (gcv == bg && alpha > ba),
        };
        if replace {
            best = Some((alpha, df, gcv));
        }
    }
    let (alpha, df, _) = best.ok_or_else(|| {
        FggmError::InvalidParameter(format!(
            "every ridge candidate has df >= {n_donors} complete curves"
        ))
    })?;
    Ok(GcvSelection { alpha, df, scores })
}

/// Chooses the ridge value for `pattern` by masking every completely
/// observed sample with that pattern and scoring its reconstruction.
pub fn select_alpha_gcv(
    data: &FunctionalDataset,
    cov: &CovarianceField,
    grid: &Grid,
    pattern: &ObservedPattern,
    alphas: &[f64],
) -> Result<GcvSelection> {
    let complete = data.complete_rows();
    if complete.is_empty() {
        return Err(FggmError::NoCompleteCurves);
    }
    let spectrum = PatternSpectrum::new(cov, grid, pattern)?;
    let (o, m) = donor_parts(data, cov, &complete, spectrum.observed(), spectrum.missing());
    select_from_donors(&spectrum, &o, &m, alphas)
}

/// Centered donor values at the given flattened indices, one column per row.
pub(crate) fn donor_parts(
    data: &FunctionalDataset,
    cov: &CovarianceField,
    rows: &[usize],
    observed: &[usize],
    missing: &[usize],
) -> (DMatrix<f64>, DMatrix<f64>) {
    let (p, d) = (data.p(), data.d());
    let mean = cov.mean();
    let value = |i: usize, c: usize| {
        let (j, k) = (c / d, c % d);
        data.values()[i * p * d + c] - mean.curve(j)[k]
    };
    let o = DMatrix::from_fn(observed.len(), rows.len(), |a, r| value(rows[r], observed[a]));
    let m = DMatrix::from_fn(missing.len(), rows.len(), |a, r| value(rows[r], missing[a]));
    (o, m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_spans_seven_decades() {
        let g = AlphaGrid::default().values(2.0).unwrap();
        assert_eq!(g.len(), 20);
        assert!((g[0] - 2e-6).abs() < 1e-18);
        assert!((g[19] - 20.0).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert!(AlphaGrid::default().values(0.0).is_err());
    }

    #[test]
    fn single_candidate_is_returned() {
        let d = 8;
        let kernel = DMatrix::from_fn(d, d, |i, j| (-((i as f64 - j as f64) / 3.0).powi(2)).exp());
        let w = Grid::new(d).unwrap().weights().to_vec();
        let s = PatternSpectrum::from_indices(&kernel, &w, (0..5).collect(), (5..8).collect()).unwrap();
        let o = DMatrix::from_fn(5, 30, |i, j| ((i + j) as f64).sin());
        let m = DMatrix::from_fn(3, 30, |i, j| ((i * j) as f64).cos());
        let sel = select_from_donors(&s, &o, &m, &[0.3]).unwrap();
        assert_eq!(sel.alpha, 0.3);
    }

    #[test]
    fn exact_ties_go_to_larger_alpha() {
        // zero kernel: reconstruction is 0 and df is 0 for every alpha
        let d = 6;
        let kernel = DMatrix::zeros(d, d);
        let w = Grid::new(d).unwrap().weights().to_vec();
        let s = PatternSpectrum::from_indices(&kernel, &w, (0..3).collect(), (3..6).collect()).unwrap();
        let o = DMatrix::from_element(3, 4, 1.0);
        let m = DMatrix::from_element(3, 4, 2.0);
        let sel = select_from_donors(&s, &o, &m, &[0.1, 1.0, 10.0]).unwrap();
        assert_eq!(sel.alpha, 10.0);
    }

    #[test]
    fn no_donors_is_an_error() {
        let d = 4;
        let kernel = DMatrix::identity(d, d);
        let w = Grid::new(d).unwrap().weights().to_vec();
        let s = PatternSpectrum::from_indices(&kernel, &w, vec![0, 1], vec![2, 3]).unwrap();
        let err = select_from_donors(&s, &DMatrix::zeros(2, 0), &DMatrix::zeros(2, 0), &[1.0]);
        assert!(matches!(err, Err(FggmError::NoCompleteCurves)));
    }
}
