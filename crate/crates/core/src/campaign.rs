//! Monte Carlo comparison of imputation methods over a grid of missingness
//! settings.
//!
//! Replication `r` draws its complete data with seed `master ^ r`; every
//! missingness cell then masks that same draw with its own derived seed,
//! so cells and methods are paired within a replication.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FggmError, Result};
use crate::fda::FunctionalDataset;
use crate::jgl::Edge;
use crate::metrics::{mse_theta, mse_x, roc_auc, roc_point};
use crate::pipeline::{fit, FitConfig, FitResult, Method};
use crate::simgen::{inject_missingness, Adjacency, synthesize, GroundTruth, MissingnessSpec, SelectionUnit, SynthesisSpec};

/// One `(π_w, π_po)` setting.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub pi_w: f64,
    pub pi_po: f64,
}

impl Cell {
    pub fn new(pi_w: f64, pi_po: f64) -> Self {
        Cell { pi_w, pi_po }
    }

    /// The nine combinations of 0.25, 0.5 and 0.75, `π_w` varying slowest.
    pub fn standard_grid() -> Vec<Cell> {
        let levels = [0.25, 0.5, 0.75];
        levels
            .iter()
            .flat_map(|&w| levels.iter().map(move |&po| Cell::new(w, po)))
            .collect()
    }
}

/// Data seed of replication `rep`.
pub fn replication_seed(master: u64, rep: usize) -> u64 {
    master ^ rep as u64
}

/// Mask seed of a replication and cell, decorrelated from the data seed.
pub fn mask_seed(master: u64, rep: usize, cell: usize) -> u64 {
    splitmix64(replication_seed(master, rep) ^ splitmix64(cell as u64 + 1))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignSpec {
    pub synthesis: SynthesisSpec,
    pub cells: Vec<Cell>,
    pub unit: SelectionUnit,
    pub reps: usize,
    pub master_seed: u64,
    pub methods: Vec<Method>,
    pub fit: FitConfig,
}

/// Metrics of one fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Reconstruction error of the completed curves.
    pub mse_x: f64,
    /// Smallest precision error along the path.
    pub mse_theta_min: f64,
    pub auc: f64,
    /// Edge recovery of the eBIC-selected model.
    pub sensitivity: f64,
    pub specificity: f64,
}

/// Scores a fit against the truth it was simulated from.
pub fn evaluate_fit(res: &FitResult, truth: &GroundTruth) -> Result<Evaluation> {
    let thetas: Vec<&[DMatrix<f64>]> = res.path.iter().map(|e| e.penalized.layers()).collect();
    let edges: Vec<_> = res.path.iter().map(|e| e.union_edges()).collect();
    evaluate_path(
        &truth.adjacency,
        &truth.thetas,
        &truth.complete,
        &thetas,
        &edges,
        &res.selected_edges(),
        &res.reconstructed,
    )
}

/// Scores a penalty path given as precision layers and edge sets per path
/// point. Edge metrics are NaN when the true graph makes them undefined
/// (no edges, or every edge).
pub fn evaluate_path(
    adjacency: &Adjacency,
    thetas: &[DMatrix<f64>],
    complete: &FunctionalDataset,
    path_thetas: &[&[DMatrix<f64>]],
    path_edges: &[BTreeSet<Edge>],
    selected: &BTreeSet<Edge>,
    reconstructed: &FunctionalDataset,
) -> Result<Evaluation> {
    let mut best = f64::INFINITY;
    for t in path_thetas {
        best = best.min(mse_theta(thetas, t)?);
    }
    let undefined = |r: Result<f64>| match r {
        Err(FggmError::UndefinedMetric(_)) => Ok(f64::NAN),
        other => other,
    };
    let auc = undefined(roc_auc(adjacency, path_edges))?;
    let (fpr, tpr) = match roc_point(adjacency, selected) {
        Err(FggmError::UndefinedMetric(_)) => (f64::NAN, f64::NAN),
        other => other?,
    };
    Ok(Evaluation {
        mse_x: mse_x(complete, reconstructed)?,
        mse_theta_min: best,
        auc,
        sensitivity: tpr,
        specificity: 1.0 - fpr,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub rep: usize,
    pub cell: usize,
    pub pi_w: f64,
    pub pi_po: f64,
    pub method: Method,
    pub metrics: Evaluation,
    pub selected_gamma1: f64,
    pub em_iterations: usize,
}

/// Median and quartiles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

impl Spread {
    pub fn of(values: &[f64]) -> Spread {
        Spread {
            q1: quantile(values, 0.25),
            median: quantile(values, 0.5),
            q3: quantile(values, 0.75),
        }
    }
}

/// Linear-interpolation sample quantile; NaN for an empty slice.
pub fn quantile(values: &[f64], prob: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = prob * (v.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: usize,
    pub pi_w: f64,
    pub pi_po: f64,
    pub method: Method,
    pub reps: usize,
    pub mse_x: Spread,
    pub mse_theta_min: Spread,
    pub auc: Spread,
}

/// Groups records by `(cell, method)` in order of first appearance.
pub fn summarize(records: &[Record]) -> Vec<CellSummary> {
    let mut keys: Vec<(usize, Method)> = Vec::new();
    for r in records {
        if !keys.contains(&(r.cell, r.method)) {
            keys.push((r.cell, r.method));
        }
    }
    keys.into_iter()
        .map(|(cell, method)| {
            let rs: Vec<&Record> = records.iter().filter(|r| r.cell == cell && r.method == method).collect();
            let col = |f: fn(&Evaluation) -> f64| rs.iter().map(|r| f(&r.metrics)).collect::<Vec<_>>();
            CellSummary {
                cell,
                pi_w: rs[0].pi_w,
                pi_po: rs[0].pi_po,
                method,
                reps: rs.len(),
                mse_x: Spread::of(&col(|m| m.mse_x)),
                mse_theta_min: Spread::of(&col(|m| m.mse_theta_min)),
                auc: Spread::of(&col(|m| m.auc)),
            }
        })
        .collect()
}

/// Masked dataset of one replication and cell, with its truth.
pub fn simulate_cell(
    spec: &CampaignSpec,
    rep: usize,
    cell: usize,
) -> Result<(FunctionalDataset, GroundTruth)> {
    let (_, truth) = synthesize(&spec.synthesis, replication_seed(spec.master_seed, rep))?;
    let data = mask_replication(spec, &truth, rep, cell)?;
    Ok((data, truth))
}

/// Masks the complete curves of a replication for one cell.
pub fn mask_replication(spec: &CampaignSpec, truth: &GroundTruth, rep: usize, cell: usize) -> Result<FunctionalDataset> {
    let c = spec.cells[cell];
    let ms = MissingnessSpec {
        pi_po: c.pi_po,
        pi_w: c.pi_w,
        unit: spec.unit,
    };
    inject_missingness(&truth.complete, &ms, mask_seed(spec.master_seed, rep, cell))
}

fn run_replication(spec: &CampaignSpec, rep: usize) -> Result<Vec<Record>> {
    let (_, truth) = synthesize(&spec.synthesis, replication_seed(spec.master_seed, rep))?;
    let mut out = Vec::new();
    for (ci, c) in spec.cells.iter().enumerate() {
        let data = mask_replication(spec, &truth, rep, ci)?;
        for &method in &spec.methods {
            let cfg = FitConfig {
                method,
                ..spec.fit.clone()
            };
            let res = fit(&data, &cfg)?;
            out.push(Record {
                rep,
                cell: ci,
                pi_w: c.pi_w,
                pi_po: c.pi_po,
                method,
                metrics: evaluate_fit(&res, &truth)?,
                selected_gamma1: res.selected_entry().gamma1,
                em_iterations: res.diagnostics.em_iterations,
            });
        }
    }
    Ok(out)
}

/// Runs every replication on the current rayon pool. Records come back
/// ordered by replication, cell and method whatever the scheduling.
pub fn run(spec: &CampaignSpec) -> Result<Vec<Record>> {
    let per_rep: Vec<Vec<Record>> = (0..spec.reps)
        .into_par_iter()
        .map(|rep| run_replication(spec, rep))
        .collect::<Result<_>>()?;
    Ok(per_rep.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::Gamma1Grid;
    use crate::simgen::{GraphSpec, Structure};

    #[test]
    fn quantiles_interpolate() {
        let v = [4.0, 1.0, 3.0, 2.0, 5.0];
        assert_eq!(quantile(&v, 0.5), 3.0);
        assert_eq!(quantile(&v, 0.25), 2.0);
        assert_eq!(quantile(&[1.0, 2.0], 0.5), 1.5);
        assert!(quantile(&[], 0.5).is_nan());
    }

    #[test]
    fn seeds_are_distinct_across_cells() {
        let seeds: Vec<u64> = (0..9).map(|c| mask_seed(7, 3, c)).collect();
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 9);
        assert_eq!(replication_seed(7, 3), 4);
    }

    #[test]
    fn tiny_campaign_is_paired_and_deterministic() {
        let spec = CampaignSpec {
            synthesis: SynthesisSpec::new(GraphSpec::new(Structure::SmallWorld, 5), 40, 16, 3),
            cells: vec![Cell::new(0.25, 0.25), Cell::new(0.5, 0.5)],
            unit: SelectionUnit::Observation,
            reps: 2,
            master_seed: 5,
            methods: vec![Method::Proposed, Method::Kraus],
            fit: FitConfig {
                n_components: Some(3),
                gamma1_grid: Gamma1Grid::Equispaced { size: 5 },
                ..FitConfig::default()
            },
        };
        let a = run(&spec).unwrap();
        assert_eq!(a.len(), 8);
        assert_eq!(a, run(&spec).unwrap());
        let summary = summarize(&a);
        assert_eq!(summary.len(), 4);
        assert!(summary.iter().all(|s| s.reps == 2));
        for r in &a {
            assert!(r.metrics.mse_x >= 0.0 && (0.0..=1.0).contains(&r.metrics.auc));
        }
    }
}
