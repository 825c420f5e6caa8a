//! Synthetic partially separable functional data: graph structures, layered
//! precision matrices, Gaussian scores on a Fourier basis, and removal of
//! consecutive grid windows.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{FggmError, Result};
use crate::fda::{DomainMask, FunctionalDataset, Grid};
use crate::jgl::Edge;
use crate::linalg;
use crate::moments::{build_h, eigendecompose_h, estimate_covariance, select_l};
use crate::scores::ScoreArray;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Structure {
    Star,
    Banded,
    SmallWorld,
}

impl std::str::FromStr for Structure {
    type Err = FggmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "star" => Ok(Structure::Star),
            "banded" => Ok(Structure::Banded),
            "small-world" => Ok(Structure::SmallWorld),
            other => Err(FggmError::Config(format!(
                "unknown structure {other:?} (expected star, banded or small-world)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub structure: Structure,
    pub p: usize,
    /// Star: variables per hub-and-spoke group.
    pub group_size: usize,
    /// Banded: links `(j, j + b)` for `b = 1..=band_width`.
    pub band_width: usize,
    /// Small-world: ring neighbours on each side.
    pub neighbors: usize,
    /// Small-world: rewiring probability.
    pub rewire: f64,
    pub seed: u64,
}

impl GraphSpec {
    pub fn new(structure: Structure, p: usize) -> Self {
        GraphSpec {
            structure,
            p,
            group_size: 5,
            band_width: 1,
            neighbors: 1,
            rewire: 0.1,
            seed: 0,
        }
    }
}

/// Undirected simple graph on `p` vertices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Adjacency {
    p: usize,
    edges: BTreeSet<Edge>,
}

impl Adjacency {
    pub fn from_edges(p: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b || a >= p || b >= p {
                return Err(FggmError::InvalidParameter(format!("invalid edge ({a}, {b}) for p = {p}")));
            }
            set.insert((a.min(b), a.max(b)));
        }
        Ok(Adjacency { p, edges: set })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.p];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.p, self.p);
        for &(a, b) in &self.edges {
            m[(a, b)] = 1.0;
            m[(b, a)] = 1.0;
        }
        m
    }
}

pub fn make_adjacency(spec: &GraphSpec) -> Result<Adjacency> {
    let p = spec.p;
    if p < 2 {
        return Err(FggmError::InvalidParameter("graphs need p >= 2".into()));
    }
    match spec.structure {
        Structure::Star => {
            let g = spec.group_size;
            if g < 2 || p % g != 0 {
                return Err(FggmError::InvalidParameter(format!(
                    "star structure needs p divisible by the group size {g}, got p = {p}"
                )));
            }
            let edges = (0..p / g).flat_map(|b| (1..g).map(move |m| (b * g, b * g + m)));
            Adjacency::from_edges(p, edges)
        }
        Structure::Banded => {
            if spec.band_width == 0 {
                return Err(FggmError::InvalidParameter("band width must be >= 1".into()));
            }
            let w = spec.band_width;
            let edges = (0..p).flat_map(|j| (1..=w).filter(move |b| j + b < p).map(move |b| (j, j + b)));
            Adjacency::from_edges(p, edges)
        }
        Structure::SmallWorld => watts_strogatz(p, spec.neighbors, spec.rewire, spec.seed),
    }
}

/// Ring lattice with `k` neighbours per side; each lattice edge `(u, u + j)`
/// is rewired with probability `beta` to `(u, w)` for a uniformly drawn `w`
/// that creates neither a loop nor a duplicate.
fn watts_strogatz(p: usize, k: usize, beta: f64, seed: u64) -> Result<Adjacency> {
    if k == 0 || 2 * k >= p {
        return Err(FggmError::InvalidParameter(format!(
            "small-world needs 1 <= k < p/2, got k = {k}, p = {p}"
        )));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(FggmError::InvalidParameter(format!("rewiring probability {beta} outside [0, 1]")));
    }
    let mut adj = vec![vec![false; p]; p];
    for u in 0..p {
        for j in 1..=k {
            let v = (u + j) % p;
            adj[u][v] = true;
            adj[v][u] = true;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for j in 1..=k {
        for u in 0..p {
            let v = (u + j) % p;
            if !adj[u][v] || rng.random::<f64>() >= beta {
                continue;
            }
            let candidates: Vec<usize> = (0..p).filter(|&w| w != u && !adj[u][w]).collect();
            if candidates.is_empty() {
                continue;
            }
            let w = candidates[rng.random_range(0..candidates.len())];
            adj[u][v] = false;
            adj[v][u] = false;
            adj[u][w] = true;
            adj[w][u] = true;
        }
    }
    let edges = (0..p).flat_map(|a| ((a + 1)..p).map(move |b| (a, b)));
    let edges: Vec<Edge> = edges.filter(|&(a, b)| adj[a][b]).collect();
    Adjacency::from_edges(p, edges)
}

/// Layer scaling `a_l = 3 · l^{-1.8}` for the 1-based layer index `l`.
pub fn decay_factor(l: usize) -> f64 {
    3.0 * (l as f64).powf(-1.8)
}

/// Base precision: `value` on edges, diagonal `|λ_min(off)| + 1`, then scaled
/// to unit diagonal.
pub fn base_precision(adj: &Adjacency, value: f64) -> Result<DMatrix<f64>> {
    let off = adj.matrix() * value;
    let (vals, _) = linalg::sym_eigen(&off)?;
    let diag = vals[vals.len() - 1].abs() + 1.0;
    let mut theta = off / diag;
    theta.fill_diagonal(1.0);
    Ok(theta)
}

/// `Θ_l = Θ̃ / a_l` and `Σ_l = Θ_l^{-1}` for `l = 1..=layers`.
pub fn make_precisions(
    adj: &Adjacency,
    layers: usize,
    value: f64,
) -> Result<(Vec<DMatrix<f64>>, Vec<DMatrix<f64>>)> {
    let base = base_precision(adj, value)?;
    let thetas: Vec<DMatrix<f64>> = (1..=layers).map(|l| &base / decay_factor(l)).collect();
    let sigmas = thetas
        .iter()
        .map(linalg::inverse_pd)
        .collect::<Result<Vec<_>>>()?;
    Ok((thetas, sigmas))
}

/// Orthonormal Fourier system `1, √2 sin 2πt, √2 cos 2πt, √2 sin 4πt, …`.
pub fn fourier_basis(grid: &Grid, count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|l| {
            let freq = 2.0 * PI * ((l + 1) / 2) as f64;
            grid.points()
                .iter()
                .map(|&t| match l {
                    0 => 1.0,
                    _ if l % 2 == 1 => 2f64.sqrt() * (freq * t).sin(),
                    _ => 2f64.sqrt() * (freq * t).cos(),
                })
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesisSpec {
    pub graph: GraphSpec,
    pub n: usize,
    pub d: usize,
    pub layers: usize,
    /// Off-diagonal value of the base precision on graph edges.
    pub edge_value: f64,
    /// Explained-variance level of the principal component refinement;
    /// `None` keeps the raw Fourier synthesis.
    pub fpca_threshold: Option<f64>,
}

impl SynthesisSpec {
    pub fn new(graph: GraphSpec, n: usize, d: usize, layers: usize) -> Self {
        SynthesisSpec {
            graph,
            n,
            d,
            layers,
            edge_value: 0.45,
            fpca_threshold: Some(0.9999),
        }
    }
}

/// Everything used to generate a dataset.
#[derive(Clone, Debug)]
pub struct GroundTruth {
    pub adjacency: Adjacency,
    pub thetas: Vec<DMatrix<f64>>,
    pub sigmas: Vec<DMatrix<f64>>,
    /// Sampled scores `ξ_{ijl}`.
    pub scores: ScoreArray,
    /// Fully observed curves.
    pub complete: FunctionalDataset,
    pub basis: Vec<Vec<f64>>,
}

/// Draws `n` observations `X_ij = Σ_l ξ_ijl φ_l` with `ξ_il ~ N(0, Σ_l)`.
pub fn synthesize(spec: &SynthesisSpec, seed: u64) -> Result<(FunctionalDataset, GroundTruth)> {
    let (n, d, layers) = (spec.n, spec.d, spec.layers);
    let p = spec.graph.p;
    if n == 0 || layers == 0 {
        return Err(FggmError::InvalidParameter("synthesis needs n >= 1 and L >= 1".into()));
    }
    let grid = Grid::new(d)?;
    if 2 * (layers / 2) >= d - 1 {
        return Err(FggmError::InvalidParameter(format!(
            "{layers} Fourier functions are not resolved by {d} grid points"
        )));
    }
    let adjacency = make_adjacency(&spec.graph)?;
    let (thetas, sigmas) = make_precisions(&adjacency, layers, spec.edge_value)?;
    let factors: Vec<DMatrix<f64>> = sigmas
        .iter()
        .map(|s| {
            s.clone()
                .cholesky()
                .map(|c| c.l())
                .ok_or_else(|| FggmError::NotPositiveDefinite("layer covariance".into()))
        })
        .collect::<Result<_>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scores = ScoreArray::zeros(n, p, layers);
    for i in 0..n {
        for (l, chol) in factors.iter().enumerate() {
            let z = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
            let xi = chol * z;
            for j in 0..p {
                scores.set(i, j, l, xi[j]);
            }
        }
    }
    let basis = fourier_basis(&grid, layers);
    let mut values = vec![0.0; n * p * d];
    for i in 0..n {
        for j in 0..p {
            let out = &mut values[(i * p + j) * d..(i * p + j + 1) * d];
            for (l, phi) in basis.iter().enumerate() {
                let xi = scores.get(i, j, l);
                for (o, f) in out.iter_mut().zip(phi) {
                    *o += xi * f;
                }
            }
        }
    }
    let mut complete = FunctionalDataset::complete(grid, n, p, values)?;
    if let Some(threshold) = spec.fpca_threshold {
        if n >= 2 {
            complete = fpca_refine(&complete, threshold)?;
        }
    }
    let truth = GroundTruth {
        adjacency,
        thetas,
        sigmas,
        scores,
        complete: complete.clone(),
        basis,
    };
    Ok((complete, truth))
}

/// Projects complete curves onto the leading empirical eigenfunctions that
/// explain `threshold` of the variance, keeping the mean.
fn fpca_refine(data: &FunctionalDataset, threshold: f64) -> Result<FunctionalDataset> {
    let cov = estimate_covariance(data)?;
    let h = build_h(&cov)?;
    let eig = eigendecompose_h(&h, data.grid())?;
    let total: f64 = eig.values().iter().sum();
    if total == 0.0 {
        return Ok(data.clone());
    }
    let keep = select_l(&eig, threshold)?;
    let (n, p, d) = (data.n(), data.p(), data.d());
    let w = data.grid().weights();
    let mean = cov.mean();
    let mut values = vec![0.0; n * p * d];
    for i in 0..n {
        for j in 0..p {
            let x = data.curve(i, j);
            let mu = mean.curve(j);
            let out = &mut values[(i * p + j) * d..(i * p + j + 1) * d];
            out.copy_from_slice(mu);
            for l in 0..keep {
                let phi = eig.function(l);
                let c: f64 = (0..d).map(|k| w[k] * (x[k] - mu[k]) * phi[k]).sum();
                for k in 0..d {
                    out[k] += c * phi[k];
                }
            }
        }
    }
    FunctionalDataset::complete(data.grid().clone(), n, p, values)
}

/// What a draw of `π_po` selects for window removal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionUnit {
    /// A whole multivariate observation; each of its `p` curves loses an
    /// independently placed window.
    Observation,
    /// Each univariate curve independently.
    Curve,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MissingnessSpec {
    pub pi_po: f64,
    pub pi_w: f64,
    pub unit: SelectionUnit,
}

impl MissingnessSpec {
    pub fn new(pi_po: f64, pi_w: f64) -> Self {
        MissingnessSpec {
            pi_po,
            pi_w,
            unit: SelectionUnit::Observation,
        }
    }

    /// Window length `round(π_w d)`, capped so one point stays observed.
    pub fn window(&self, d: usize) -> usize {
        ((self.pi_w * d as f64).round() as usize).min(d - 1)
    }
}

const MAX_REDRAWS: usize = 10_000;

/// Removes windows of consecutive grid points. Draws are repeated until at
/// least one observation is complete (observation unit) or every variable
/// keeps a complete curve (curve unit).
pub fn inject_missingness(
    data: &FunctionalDataset,
    spec: &MissingnessSpec,
    seed: u64,
) -> Result<FunctionalDataset> {
    if !(0.0..1.0).contains(&spec.pi_po) {
        return Err(FggmError::InvalidParameter(format!(
            "pi_po = {} must lie in [0, 1) so that complete curves remain",
            spec.pi_po
        )));
    }
    if !(0.0..1.0).contains(&spec.pi_w) {
        return Err(FggmError::InvalidParameter(format!("pi_w = {} must lie in [0, 1)", spec.pi_w)));
    }
    let (n, p, d) = (data.n(), data.p(), data.d());
    let w = spec.window(d);
    if spec.pi_po == 0.0 || w == 0 {
        return Ok(data.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw_window = |rng: &mut ChaCha8Rng| -> Result<DomainMask> {
        let start = rng.random_range(0..=d - w);
        DomainMask::with_gap(d, start, w)
    };
    for _ in 0..MAX_REDRAWS {
        let mut masks = vec![DomainMask::full(d); n * p];
        match spec.unit {
            SelectionUnit::Observation => {
                for i in 0..n {
                    if rng.random::<f64>() < spec.pi_po {
                        for j in 0..p {
                            masks[i * p + j] = draw_window(&mut rng)?;
                        }
                    }
                }
            }
            SelectionUnit::Curve => {
                for m in masks.iter_mut() {
                    if rng.random::<f64>() < spec.pi_po {
                        *m = draw_window(&mut rng)?;
                    }
                }
            }
        }
        let ok = match spec.unit {
            SelectionUnit::Observation => {
                (0..n).any(|i| masks[i * p..(i + 1) * p].iter().all(DomainMask::is_full))
            }
            SelectionUnit::Curve => (0..p).all(|j| (0..n).any(|i| masks[i * p + j].is_full())),
        };
        if ok {
            return data.with_masks(masks);
        }
    }
    Err(FggmError::InvalidParameter(format!(
        "no admissible missingness pattern after {MAX_REDRAWS} draws"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_graph_counts() {
        let adj = make_adjacency(&GraphSpec::new(Structure::Star, 15)).unwrap();
        assert_eq!(adj.n_edges(), 12);
        let mut deg = adj.degrees();
        deg.sort_unstable();
        assert_eq!(deg, [vec![1; 12], vec![4; 3]].concat());
        assert!(make_adjacency(&GraphSpec::new(Structure::Star, 14)).is_err());
    }

    #[test]
    fn banded_graph_is_a_path() {
        let adj = make_adjacency(&GraphSpec::new(Structure::Banded, 15)).unwrap();
        assert_eq!(adj.n_edges(), 14);
        assert!((0..14).all(|j| adj.contains(j, j + 1)));
    }

    #[test]
    fn unrewired_small_world_is_a_ring() {
        let mut spec = GraphSpec::new(Structure::SmallWorld, 15);
        spec.rewire = 0.0;
        let adj = make_adjacency(&spec).unwrap();
        assert_eq!(adj.n_edges(), 15);
        assert!(adj.degrees().iter().all(|&d| d == 2));
        assert!(adj.contains(14, 0));
    }

    #[test]
    fn small_world_keeps_edge_count_and_is_seeded() {
        let mut spec = GraphSpec::new(Structure::SmallWorld, 30);
        spec.rewire = 0.5;
        spec.seed = 3;
        let a = make_adjacency(&spec).unwrap();
        assert_eq!(a.n_edges(), 30);
        assert_eq!(a, make_adjacency(&spec).unwrap());
    }

    #[test]
    fn decay_factors() {
        assert_eq!(decay_factor(1), 3.0);
        assert!((decay_factor(2) - 3.0 / 2f64.powf(1.8)).abs() < 1e-15);
        assert!((decay_factor(2) - 0.86152).abs() < 1e-5);
        assert!((decay_factor(3) - 0.41524).abs() < 1e-5);
    }

    #[test]
    fn precisions_are_scaled_and_ordered() {
        let adj = make_adjacency(&GraphSpec::new(Structure::Star, 15)).unwrap();
        let (thetas, sigmas) = make_precisions(&adj, 3, 0.45).unwrap();
        let base = base_precision(&adj, 0.45).unwrap();
        assert!(base.diagonal().iter().all(|&v| v == 1.0));
        for l in 0..3 {
            assert!((&thetas[l] * decay_factor(l + 1) - &base).abs().max() < 1e-14);
            let prod = &thetas[l] * &sigmas[l];
            assert!((prod - DMatrix::identity(15, 15)).abs().max() < 1e-10);
            assert!(linalg::is_positive_definite(&thetas[l]));
        }
        assert!(sigmas[0].trace() > sigmas[1].trace() && sigmas[1].trace() > sigmas[2].trace());
    }

    #[test]
    fn fourier_basis_is_orthonormal_on_grid() {
        let grid = Grid::new(50).unwrap();
        let b = fourier_basis(&grid, 7);
        for a in 0..7 {
            for c in 0..7 {
                let ip = crate::fda::inner_product(&grid, &b[a], &b[c], None).unwrap();
                let expected = if a == c { 1.0 } else { 0.0 };
                assert!((ip - expected).abs() < 1e-12, "{a} {c} {ip}");
            }
        }
    }

    #[test]
    fn window_arithmetic_and_guards() {
        assert_eq!(MissingnessSpec::new(0.3, 0.5).window(50), 25);
        let data = FunctionalDataset::complete(Grid::new(10).unwrap(), 4, 2, vec![0.5; 80]).unwrap();
        assert!(inject_missingness(&data, &MissingnessSpec::new(1.0, 0.5), 1).is_err());
        let same = inject_missingness(&data, &MissingnessSpec::new(0.0, 0.5), 1).unwrap();
        assert_eq!(same, data);
    }

    #[test]
    fn observation_unit_removes_windows_from_every_curve() {
        let data = FunctionalDataset::complete(Grid::new(20).unwrap(), 40, 3, vec![1.0; 2400]).unwrap();
        let out = inject_missingness(&data, &MissingnessSpec::new(0.5, 0.25), 9).unwrap();
        assert!(!out.complete_rows().is_empty());
        for i in 0..40 {
            let partial: Vec<bool> = out.row_masks(i).iter().map(|m| !m.is_full()).collect();
            assert!(partial.iter().all(|&b| b) || partial.iter().all(|&b| !b));
            for m in out.row_masks(i).iter().filter(|m| !m.is_full()) {
                assert_eq!(m.n_missing(), 5);
                let miss = m.missing_indices();
                assert_eq!(miss[4] - miss[0], 4);
            }
        }
    }

    #[test]
    fn synthesis_is_deterministic_and_exact() {
        let mut spec = SynthesisSpec::new(GraphSpec::new(Structure::Banded, 5), 20, 30, 3);
        spec.fpca_threshold = None;
        let (a, truth) = synthesize(&spec, 11).unwrap();
        let (b, _) = synthesize(&spec, 11).unwrap();
        assert_eq!(a, b);
        let grid = a.grid();
        for i in 0..20 {
            for j in 0..5 {
                for l in 0..3 {
                    let proj = crate::fda::inner_product(grid, a.curve(i, j), &truth.basis[l], None).unwrap();
                    assert!((proj - truth.scores.get(i, j, l)).abs() < 1e-10);
                }
            }
        }
    }
}
