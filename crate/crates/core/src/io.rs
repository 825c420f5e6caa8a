//! On-disk formats: long-form dataset CSV, JSON manifests, ground truth
//! and fit reports.
//!
//! Every file carries the hash of the configuration that produced it and
//! the seed it was drawn with. CSV files put them on a leading comment
//! line, `# config_hash=<hex> seed=<u64>`.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{FggmError, Result};
use crate::fda::{DomainMask, FunctionalDataset, Grid};
use crate::jgl::Edge;
use crate::pipeline::{FitResult, Method};
use crate::reconstruct::AlphaChoice;
use crate::simgen::{Adjacency, GroundTruth};

/// Where a file came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    pub fn new(config_hash: impl Into<String>, seed: u64) -> Self {
        Provenance {
            config_hash: config_hash.into(),
            seed,
        }
    }

    fn comment(&self) -> String {
        format!("# config_hash={} seed={}", self.config_hash, self.seed)
    }

    fn parse_comment(line: &str) -> Option<Self> {
        let body = line.strip_prefix('#')?.trim();
        let mut hash = None;
        let mut seed = None;
        for part in body.split_whitespace() {
            if let Some(v) = part.strip_prefix("config_hash=") {
                hash = Some(v.to_string());
            } else if let Some(v) = part.strip_prefix("seed=") {
                seed = v.parse().ok();
            }
        }
        Some(Provenance::new(hash?, seed?))
    }
}

/// SHA-256 of `bytes` as lowercase hex.
pub fn config_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

const DATASET_HEADER: [&str; 6] = ["replication", "sample", "variable", "grid_index", "value", "observed"];

/// Writes one replication in long form. Missing points have `observed = 0`
/// and an empty value.
pub fn write_dataset<W: Write>(
    out: W,
    data: &FunctionalDataset,
    replication: usize,
    provenance: Option<&Provenance>,
) -> Result<()> {
    let mut out = BufWriter::new(out);
    if let Some(p) = provenance {
        writeln!(out, "{}", p.comment())?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DATASET_HEADER)?;
    let rep = replication.to_string();
    for i in 0..data.n() {
        let si = i.to_string();
        for j in 0..data.p() {
            let sj = j.to_string();
            let mask = data.mask(i, j);
            let x = data.curve(i, j);
            for k in 0..data.d() {
                let (v, o) = if mask.is_observed(k) {
                    (x[k].to_string(), "1")
                } else {
                    (String::new(), "0")
                };
                w.write_record([rep.as_str(), &si, &sj, &k.to_string(), &v, o])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_dataset_file(
    path: &Path,
    data: &FunctionalDataset,
    replication: usize,
    provenance: Option<&Provenance>,
) -> Result<()> {
    write_dataset(create(path)?, data, replication, provenance)
}

/// A dataset read back from long form.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadedDataset {
    pub replication: usize,
    pub data: FunctionalDataset,
    pub provenance: Option<Provenance>,
}

#[derive(Deserialize)]
struct Row {
    replication: usize,
    sample: usize,
    variable: usize,
    grid_index: usize,
    value: Option<f64>,
    observed: u8,
}

/// Reads every replication of a long-form CSV, in increasing replication
/// order. Each replication must list every `(sample, variable,
/// grid_index)` exactly once; the grid is `d` equispaced points on
/// `[0, 1]`.
pub fn read_datasets<R: Read>(input: R) -> Result<Vec<LoadedDataset>> {
    let mut text = String::new();
    BufReader::new(input).read_to_string(&mut text)?;
    let provenance = text.lines().next().and_then(Provenance::parse_comment);
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != DATASET_HEADER {
        return Err(FggmError::Format(format!(
            "dataset header must be {}, found {}",
            DATASET_HEADER.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows: Vec<Row> = Vec::new();
    for rec in r.deserialize() {
        rows.push(rec?);
    }
    let reps: BTreeSet<usize> = rows.iter().map(|r| r.replication).collect();
    reps.into_iter()
        .map(|rep| {
            let mine: Vec<&Row> = rows.iter().filter(|r| r.replication == rep).collect();
            let data = assemble(&mine).map_err(|e| match e {
                FggmError::Format(m) => FggmError::Format(format!("replication {rep}: {m}")),
                other => other,
            })?;
            Ok(LoadedDataset {
                replication: rep,
                data,
                provenance: provenance.clone(),
            })
        })
        .collect()
}

fn assemble(rows: &[&Row]) -> Result<FunctionalDataset> {
    let n = rows.iter().map(|r| r.sample).max().unwrap_or(0) + 1;
    let p = rows.iter().map(|r| r.variable).max().unwrap_or(0) + 1;
    let d = rows.iter().map(|r| r.grid_index).max().unwrap_or(0) + 1;
    if rows.len() != n * p * d {
        return Err(FggmError::Format(format!(
            "{} rows for {n} samples x {p} variables x {d} grid points",
            rows.len()
        )));
    }
    let mut values = vec![f64::NAN; n * p * d];
    let mut observed = vec![false; n * p * d];
    let mut seen = vec![false; n * p * d];
    for r in rows {
        let c = (r.sample * p + r.variable) * d + r.grid_index;
        if std::mem::replace(&mut seen[c], true) {
            return Err(FggmError::Format(format!(
                "duplicate entry for sample {}, variable {}, grid index {}",
                r.sample, r.variable, r.grid_index
            )));
        }
        match (r.observed, r.value) {
            (1, Some(v)) => {
                values[c] = v;
                observed[c] = true;
            }
            (0, _) => {}
            (1, None) => {
                return Err(FggmError::Format(format!(
                    "observed point without value at sample {}, variable {}, grid index {}",
                    r.sample, r.variable, r.grid_index
                )))
            }
            (o, _) => return Err(FggmError::Format(format!("observed flag must be 0 or 1, found {o}"))),
        }
    }
    let masks = observed
        .chunks(d)
        .enumerate()
        .map(|(c, m)| {
            DomainMask::new(m.to_vec()).map_err(|_| {
                FggmError::Format(format!("curve of sample {}, variable {} has no observed point", c / p, c % p))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    FunctionalDataset::new(Grid::new(d)?, n, p, values, masks)
}

/// Reads a file holding exactly one replication.
pub fn read_dataset_file(path: &Path) -> Result<LoadedDataset> {
    let mut all = read_datasets(open(path)?)?;
    if all.len() != 1 {
        return Err(FggmError::Format(format!(
            "{} holds {} replications, expected one",
            path.display(),
            all.len()
        )));
    }
    Ok(all.remove(0))
}

fn create(path: &Path) -> Result<File> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    File::create(path).map_err(|e| FggmError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| FggmError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(open(path)?))?)
}

/// Row-major nested form of a matrix.
pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != nc) {
        return Err(FggmError::Format("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub start: f64,
    pub end: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn unit(points: usize) -> Self {
        GridSpec {
            start: 0.0,
            end: 1.0,
            points,
        }
    }
}

/// One masked dataset of a simulation bundle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub rep: usize,
    pub cell: usize,
    pub pi_w: f64,
    pub pi_po: f64,
    pub data_seed: u64,
    pub mask_seed: u64,
    /// Relative to the manifest's directory.
    pub path: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthEntry {
    pub rep: usize,
    pub seed: u64,
    pub truth: String,
    pub complete: String,
}

/// Index of a simulation bundle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub master_seed: u64,
    pub n: usize,
    pub p: usize,
    pub d: usize,
    pub grid: GridSpec,
    pub layers: usize,
    pub structure: String,
    pub reps: usize,
    pub datasets: Vec<DatasetEntry>,
    pub truths: Vec<TruthEntry>,
}

/// Generating parameters of one replication; the complete curves live in
/// a separate dataset CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub config_hash: String,
    pub seed: u64,
    pub p: usize,
    pub edges: Vec<Edge>,
    pub thetas: Vec<Vec<Vec<f64>>>,
    pub sigmas: Vec<Vec<Vec<f64>>>,
    pub basis: Vec<Vec<f64>>,
}

impl TruthFile {
    pub fn from_truth(truth: &GroundTruth, provenance: &Provenance) -> Self {
        TruthFile {
            config_hash: provenance.config_hash.clone(),
            seed: provenance.seed,
            p: truth.adjacency.p(),
            edges: truth.adjacency.edges().iter().copied().collect(),
            thetas: truth.thetas.iter().map(matrix_rows).collect(),
            sigmas: truth.sigmas.iter().map(matrix_rows).collect(),
            basis: truth.basis.clone(),
        }
    }

    pub fn adjacency(&self) -> Result<Adjacency> {
        Adjacency::from_edges(self.p, self.edges.iter().copied())
    }

    pub fn theta_matrices(&self) -> Result<Vec<DMatrix<f64>>> {
        self.thetas.iter().map(|t| matrix_from_rows(t)).collect()
    }
}

/// One row of the path table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathRow {
    pub gamma1: f64,
    pub edge_counts: Vec<usize>,
    pub union_edges: usize,
    pub q: f64,
    pub ebic: f64,
    pub converged: bool,
    pub refit: bool,
    pub admm_iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

/// Machine-readable summary of a fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub config_hash: String,
    pub seed: u64,
    pub dataset: String,
    pub replication: usize,
    pub method: Method,
    pub n: usize,
    pub p: usize,
    pub d: usize,
    pub n_components: usize,
    pub explained: Vec<f64>,
    pub path: Vec<PathRow>,
    pub selected: usize,
    pub selected_gamma1: f64,
    pub edges: Vec<Edge>,
    /// Refitted precisions of the selected model, penalized ones when the
    /// refit failed.
    pub precision: Vec<Vec<Vec<f64>>>,
    /// Penalized precisions at every path point.
    pub path_precisions: Vec<Vec<Vec<Vec<f64>>>>,
    pub alpha: Vec<AlphaChoice>,
    pub em_iterations: usize,
    pub em_changes: Vec<f64>,
    pub em_converged: bool,
    pub mu_miss_max_abs: f64,
    /// Reconstructed curves, relative to the report's directory.
    pub reconstruction: String,
}

impl FitReport {
    pub fn from_result(
        res: &FitResult,
        provenance: &Provenance,
        dataset: impl Into<String>,
        replication: usize,
        method: Method,
        reconstruction: impl Into<String>,
    ) -> Self {
        let sel = res.selected_entry();
        let precision = sel.refitted.as_ref().unwrap_or(&sel.penalized);
        FitReport {
            config_hash: provenance.config_hash.clone(),
            seed: provenance.seed,
            dataset: dataset.into(),
            replication,
            method,
            n: res.reconstructed.n(),
            p: res.reconstructed.p(),
            d: res.reconstructed.d(),
            n_components: res.diagnostics.n_components,
            explained: res.diagnostics.explained.clone(),
            path: res
                .path
                .iter()
                .map(|e| PathRow {
                    gamma1: e.gamma1,
                    edge_counts: e.edge_counts.clone(),
                    union_edges: e.union_edges().len(),
                    q: e.q,
                    ebic: e.ebic,
                    converged: e.converged,
                    refit: e.refitted.is_some(),
                    admm_iterations: e.admm_iterations,
                    primal_residual: e.primal_residual,
                    dual_residual: e.dual_residual,
                })
                .collect(),
            selected: res.selected,
            selected_gamma1: sel.gamma1,
            edges: res.selected_edges().into_iter().collect(),
            precision: precision.layers().iter().map(matrix_rows).collect(),
            path_precisions: res
                .path
                .iter()
                .map(|e| e.penalized.layers().iter().map(matrix_rows).collect())
                .collect(),
            alpha: res.diagnostics.alpha_choices.clone(),
            em_iterations: res.diagnostics.em_iterations,
            em_changes: res.diagnostics.em_changes.clone(),
            em_converged: res.diagnostics.em_converged,
            mu_miss_max_abs: res.scores.mu_miss().values().iter().fold(0.0, |m, v| m.max(v.abs())),
            reconstruction: reconstruction.into(),
        }
    }

    /// Union edge set at every path point.
    pub fn path_edges(&self) -> Vec<BTreeSet<Edge>> {
        self.path_precisions
            .iter()
            .map(|layers| {
                let mut set = BTreeSet::new();
                for m in layers {
                    for (h, row) in m.iter().enumerate() {
                        for (k, &v) in row.iter().enumerate().skip(h + 1) {
                            if v != 0.0 {
                                set.insert((h, k));
                            }
                        }
                    }
                }
                set
            })
            .collect()
    }

    pub fn path_thetas(&self, k: usize) -> Result<Vec<DMatrix<f64>>> {
        self.path_precisions[k].iter().map(|t| matrix_from_rows(t)).collect()
    }
}

/// Writes the per-`γ1` table as CSV.
pub fn write_path_table<W: Write>(out: W, report: &FitReport) -> Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "{}", Provenance::new(report.config_hash.clone(), report.seed).comment())?;
    let mut w = csv::Writer::from_writer(out);
    let layers = report.path.first().map_or(0, |r| r.edge_counts.len());
    let mut header = vec!["gamma1".to_string()];
    header.extend((0..layers).map(|l| format!("edges_l{}", l + 1)));
    header.extend(["union_edges", "q", "ebic", "selected", "converged", "refit"].map(String::from));
    w.write_record(&header)?;
    for (k, r) in report.path.iter().enumerate() {
        let mut rec = vec![r.gamma1.to_string()];
        rec.extend(r.edge_counts.iter().map(|c| c.to_string()));
        rec.extend([
            r.union_edges.to_string(),
            r.q.to_string(),
            r.ebic.to_string(),
            u8::from(k == report.selected).to_string(),
            u8::from(r.converged).to_string(),
            u8::from(r.refit).to_string(),
        ]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes plain CSV rows under a provenance comment.
pub fn write_table<W: Write, T: AsRef<str>>(
    out: W,
    provenance: &Provenance,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<T>>,
) -> Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "{}", provenance.comment())?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(|s| s.as_ref()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn create_file(path: &Path) -> Result<File> {
    create(path)
}

/// Leading provenance comment of a CSV file, if any.
pub fn read_provenance(path: &Path) -> Result<Option<Provenance>> {
    let mut first = String::new();
    std::io::BufRead::read_line(&mut BufReader::new(open(path)?), &mut first)?;
    Ok(Provenance::parse_comment(first.trim_end()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> FunctionalDataset {
        let d = 7;
        let values: Vec<f64> = (0..3 * 2 * d).map(|c| (c as f64 * 0.37).sin() / 3.0 + 1e-17 * c as f64).collect();
        let masks: Vec<DomainMask> = (0..6)
            .map(|c| if c % 2 == 0 { DomainMask::full(d) } else { DomainMask::with_gap(d, 2, 3).unwrap() })
            .collect();
        FunctionalDataset::new(Grid::new(d).unwrap(), 3, 2, values, masks).unwrap()
    }

    #[test]
    fn long_form_round_trip_is_exact() {
        let data = sample();
        let prov = Provenance::new(config_hash(b"x = 1"), 42);
        let mut buf = Vec::new();
        write_dataset(&mut buf, &data, 3, Some(&prov)).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# config_hash="));
        assert!(text.contains("\n3,0,1,2,,0\n"));
        let back = read_datasets(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].replication, 3);
        assert_eq!(back[0].provenance.as_ref(), Some(&prov));
        assert_eq!(back[0].data, data);
    }

    #[test]
    fn malformed_input_is_rejected() {
        let bad_header = "a,b\n1,2\n";
        assert!(matches!(read_datasets(bad_header.as_bytes()), Err(FggmError::Format(_))));
        let missing_row = "replication,sample,variable,grid_index,value,observed\n0,0,0,0,1.0,1\n0,0,0,2,1.0,1\n";
        assert!(matches!(read_datasets(missing_row.as_bytes()), Err(FggmError::Format(_))));
        let no_value = "replication,sample,variable,grid_index,value,observed\n0,0,0,0,,1\n0,0,0,1,1.0,1\n";
        assert!(read_datasets(no_value.as_bytes()).is_err());
    }

    #[test]
    fn hash_is_hex_sha256() {
        assert_eq!(
            config_hash(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn matrix_rows_round_trip() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(matrix_rows(&m), vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]);
        assert_eq!(matrix_from_rows(&matrix_rows(&m)).unwrap(), m);
    }
}
