//! Precision-matrix error, edge-recovery ROC area along a penalty path, and
//! curve-reconstruction error.

use std::collections::BTreeSet;

use nalgebra::DMatrix;

use crate::error::{FggmError, Result};
use crate::fda::FunctionalDataset;
use crate::jgl::Edge;
use crate::linalg;
use crate::simgen::Adjacency;

/// `L^{-1} Σ_l ‖Θ_l − Θ̂_l‖_F`.
pub fn mse_theta(truth: &[DMatrix<f64>], est: &[DMatrix<f64>]) -> Result<f64> {
    if truth.len() != est.len() || truth.is_empty() {
        return Err(FggmError::dim(format!(
            "{} true layers against {} estimated",
            truth.len(),
            est.len()
        )));
    }
    let mut total = 0.0;
    for (t, e) in truth.iter().zip(est) {
        if t.shape() != e.shape() {
            return Err(FggmError::dim("precision layers differ in shape"));
        }
        total += linalg::frobenius(&(t - e));
    }
    Ok(total / truth.len() as f64)
}

/// `(false positive rate, true positive rate)` of one estimated edge set.
pub fn roc_point(truth: &Adjacency, est: &BTreeSet<Edge>) -> Result<(f64, f64)> {
    let p = truth.p();
    let pairs = p * (p - 1) / 2;
    let positives = truth.n_edges();
    let negatives = pairs - positives;
    if positives == 0 {
        return Err(FggmError::UndefinedMetric("true graph has no edges; sensitivity undefined".into()));
    }
    if negatives == 0 {
        return Err(FggmError::UndefinedMetric("true graph is complete; specificity undefined".into()));
    }
    if est.iter().any(|&(a, b)| a >= b || b >= p) {
        return Err(FggmError::InvalidParameter("estimated edges must satisfy h < k < p".into()));
    }
    let tp = est.iter().filter(|&&(a, b)| truth.contains(a, b)).count();
    let fp = est.len() - tp;
    Ok((fp as f64 / negatives as f64, tp as f64 / positives as f64))
}

/// Area under the ROC curve traced by the estimated edge sets of a path,
/// closed with `(0, 0)` and `(1, 1)` and integrated by the trapezoid rule
/// after sorting by false positive rate, then true positive rate.
pub fn roc_auc(truth: &Adjacency, path: &[BTreeSet<Edge>]) -> Result<f64> {
    let mut pts = vec![(0.0, 0.0), (1.0, 1.0)];
    for est in path {
        pts.push(roc_point(truth, est)?);
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    Ok(pts
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum())
}

/// `p^{-1} Σ_j n^{-1} Σ_i ‖X_ij − X̂_ij‖²` over the whole domain. With
/// observed points copied through, only the missing windows contribute.
pub fn mse_x(truth: &FunctionalDataset, recon: &FunctionalDataset) -> Result<f64> {
    if truth.n() != recon.n() || truth.p() != recon.p() || truth.d() != recon.d() {
        return Err(FggmError::dim("true and reconstructed datasets differ in shape"));
    }
    if !truth.is_fully_observed() || !recon.is_fully_observed() {
        return Err(FggmError::InvalidParameter(
            "curve error needs complete true and reconstructed curves".into(),
        ));
    }
    let w = truth.grid().weights();
    let (n, p) = (truth.n(), truth.p());
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..p {
            let (x, y) = (truth.curve(i, j), recon.curve(i, j));
            total += w.iter().zip(x.iter().zip(y)).map(|(w, (a, b))| w * (a - b) * (a - b)).sum::<f64>();
        }
    }
    Ok(total / (n * p) as f64)
}
