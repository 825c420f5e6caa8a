//! Command-line front end: simulation bundles, fitting, reconstruction and
//! evaluation.
//!
//! Configuration is a TOML file. Every section and key is optional except
//! `simulation.structure` when simulating:
//!
//! ```toml
//! seed = 7                      # master seed, overridden by --seed
//! threads = 4                   # worker threads, overridden by --threads
//!
//! [simulation]
//! structure = "small-world"     # star | banded | small-world
//! n = 100
//! p = 15
//! d = 50
//! layers = 3
//! reps = 2
//! unit = "observation"          # observation | curve
//! cells = [{ pi_w = 0.5, pi_po = 0.5 }]   # default: the 3 x 3 grid of 0.25, 0.5, 0.75
//!
//! [fit]
//! methods = ["proposed", "kraus"]
//! gamma1_grid = 21              # a size, or an explicit list of values
//! variance_threshold = 0.9999
//! refresh = "fixed"             # fixed | per-iteration
//!
//! [fit.alpha]
//! selection = "gcv"             # gcv | fixed
//! ```
//!
//! Unknown keys are rejected, all of them in one message.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::campaign::{evaluate_path, mask_seed, mask_replication, replication_seed, CampaignSpec, Cell, Evaluation, Record, Spread, summarize};
use crate::error::{FggmError, Result};
use crate::fda::FunctionalDataset;
use crate::io::{
    config_hash, read_dataset_file, read_datasets, read_json, write_dataset_file, write_json, write_path_table,
    write_table, create_file, DatasetEntry, FitReport, GridSpec, Manifest, Provenance, TruthEntry, TruthFile,
};
use crate::jgl::AdmmOptions;
use crate::pipeline::{fit, FitConfig, Gamma1Grid, KernelModel, Method, QScale, Refresh};
use crate::reconstruct::{AlphaGrid, AlphaSelection};
use crate::simgen::{synthesize, GraphSpec, SelectionUnit, Structure, SynthesisSpec};

#[derive(Parser, Debug)]
#[command(name = "fggm", version, about = "Sparse functional graphical models from partially observed curves")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Draw replications of the simulation design and write a dataset bundle.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Fit the penalty path to a dataset CSV or to every dataset of a bundle.
    Fit {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flags: FitFlags,
        /// Long-form dataset CSV or bundle manifest.
        input: PathBuf,
    },
    /// Write completed curves only.
    Reconstruct {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flags: FitFlags,
        input: PathBuf,
    },
    /// Score the fits of a bundle against its ground truth.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        manifest: PathBuf,
        /// Index written by `fit`.
        #[arg(long)]
        fits: PathBuf,
    },
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct FitFlags {
    /// Comma-separated methods.
    #[arg(long, value_delimiter = ',')]
    pub method: Vec<Method>,
    /// Grid size, or comma-separated values.
    #[arg(long)]
    pub gamma1_grid: Option<String>,
    #[arg(long)]
    pub variance_threshold: Option<f64>,
    #[arg(long)]
    pub refresh_covariance: Option<Refresh>,
    #[arg(long)]
    pub kernel: Option<KernelModel>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ConfigFile {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub simulation: Option<SimulationSection>,
    #[serde(default)]
    pub fit: FitSection,
}

fn d_n() -> usize {
    100
}
fn d_p() -> usize {
    15
}
fn d_d() -> usize {
    50
}
fn d_layers() -> usize {
    3
}
fn d_reps() -> usize {
    1
}
fn d_edge_value() -> f64 {
    0.45
}
fn d_fpca() -> Option<f64> {
    Some(0.9999)
}
fn d_group_size() -> usize {
    5
}
fn d_one() -> usize {
    1
}
fn d_rewire() -> f64 {
    0.1
}
fn d_unit() -> SelectionUnit {
    SelectionUnit::Observation
}
fn d_cells() -> Vec<Cell> {
    Cell::standard_grid()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimulationSection {
    pub structure: Structure,
    #[serde(default = "d_n")]
    pub n: usize,
    #[serde(default = "d_p")]
    pub p: usize,
    #[serde(default = "d_d")]
    pub d: usize,
    #[serde(default = "d_layers")]
    pub layers: usize,
    #[serde(default = "d_reps")]
    pub reps: usize,
    #[serde(default = "d_edge_value")]
    pub edge_value: f64,
    /// Explained-variance level of the principal component refinement of
    /// the synthetic curves; 1 or more disables it.
    #[serde(default = "d_fpca")]
    pub fpca_threshold: Option<f64>,
    #[serde(default = "d_group_size")]
    pub group_size: usize,
    #[serde(default = "d_one")]
    pub band_width: usize,
    #[serde(default = "d_one")]
    pub neighbors: usize,
    #[serde(default = "d_rewire")]
    pub rewire: f64,
    #[serde(default)]
    pub graph_seed: u64,
    #[serde(default = "d_unit")]
    pub unit: SelectionUnit,
    #[serde(default = "d_cells")]
    pub cells: Vec<Cell>,
}

impl SimulationSection {
    pub fn synthesis(&self) -> SynthesisSpec {
        let graph = GraphSpec {
            structure: self.structure,
            p: self.p,
            group_size: self.group_size,
            band_width: self.band_width,
            neighbors: self.neighbors,
            rewire: self.rewire,
            seed: self.graph_seed,
        };
        SynthesisSpec {
            edge_value: self.edge_value,
            fpca_threshold: self.fpca_threshold.filter(|&t| t < 1.0),
            ..SynthesisSpec::new(graph, self.n, self.d, self.layers)
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(FggmError::Config(m));
        if self.reps == 0 {
            return bad("simulation.reps must be at least 1".into());
        }
        if self.cells.is_empty() {
            return bad("simulation.cells must not be empty".into());
        }
        for c in &self.cells {
            if !(c.pi_w > 0.0 && c.pi_w < 1.0 && (0.0..=1.0).contains(&c.pi_po)) {
                return bad(format!("simulation.cells entry {c:?} needs 0 < pi_w < 1 and 0 <= pi_po <= 1"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSetting {
    Size(usize),
    Values(Vec<f64>),
}

impl GridSetting {
    fn parse(s: &str) -> Result<Self> {
        let bad = || FggmError::Config(format!("--gamma1-grid expects a size or comma-separated values, got {s:?}"));
        if s.contains(',') || s.contains('.') || s.contains('e') {
            s.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
                .collect::<Result<_>>()
                .map(GridSetting::Values)
        } else {
            s.trim().parse().map(GridSetting::Size).map_err(|_| bad())
        }
    }

    fn grid(&self) -> Gamma1Grid {
        match self {
            GridSetting::Size(size) => Gamma1Grid::Equispaced { size: *size },
            GridSetting::Values(v) => Gamma1Grid::Explicit(v.clone()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaMode {
    Gcv,
    Fixed,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct AlphaSection {
    pub selection: AlphaMode,
    /// Ridge value when `selection = "fixed"`.
    pub value: Option<f64>,
    /// GCV candidates: `count` log-spaced multiples of the leading
    /// eigenvalue between `low` and `high`.
    pub count: usize,
    pub low: f64,
    pub high: f64,
}

impl Default for AlphaSection {
    fn default() -> Self {
        let g = AlphaGrid::default();
        AlphaSection {
            selection: AlphaMode::Gcv,
            value: None,
            count: g.count,
            low: g.low,
            high: g.high,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct AdmmSection {
    pub rho: f64,
    pub max_iter: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub adaptive: bool,
}

impl Default for AdmmSection {
    fn default() -> Self {
        let a = AdmmOptions::default();
        AdmmSection {
            rho: a.rho,
            max_iter: a.max_iter,
            abs_tol: a.abs_tol,
            rel_tol: a.rel_tol,
            adaptive: a.adaptive,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct FitSection {
    pub methods: Vec<Method>,
    pub variance_threshold: f64,
    pub n_components: Option<usize>,
    pub gamma1_grid: GridSetting,
    pub gamma2: f64,
    pub em_tol: f64,
    pub max_em_iter: usize,
    pub gamma_ebic: f64,
    pub refresh: Refresh,
    pub kernel: KernelModel,
    pub q_scale: QScale,
    pub standardize: bool,
    pub alpha: AlphaSection,
    pub admm: AdmmSection,
}

impl Default for FitSection {
    fn default() -> Self {
        let c = FitConfig::default();
        let size = match c.gamma1_grid {
            Gamma1Grid::Equispaced { size } => size,
            Gamma1Grid::Explicit(_) => 21,
        };
        FitSection {
            methods: vec![Method::Proposed],
            variance_threshold: c.variance_threshold,
            n_components: c.n_components,
            gamma1_grid: GridSetting::Size(size),
            gamma2: c.gamma2,
            em_tol: c.em_tol,
            max_em_iter: c.max_em_iter,
            gamma_ebic: c.gamma_ebic,
            refresh: c.refresh,
            kernel: c.kernel,
            q_scale: c.q_scale,
            standardize: c.standardize,
            alpha: AlphaSection::default(),
            admm: AdmmSection::default(),
        }
    }
}

impl FitSection {
    fn apply(&mut self, flags: &FitFlags) -> Result<()> {
        if !flags.method.is_empty() {
            self.methods = flags.method.clone();
        }
        if let Some(g) = &flags.gamma1_grid {
            self.gamma1_grid = GridSetting::parse(g)?;
        }
        if let Some(v) = flags.variance_threshold {
            self.variance_threshold = v;
        }
        if let Some(r) = flags.refresh_covariance {
            self.refresh = r;
        }
        if let Some(k) = flags.kernel {
            self.kernel = k;
        }
        Ok(())
    }

    /// Library configuration for one method.
    pub fn config(&self, method: Method) -> Result<FitConfig> {
        let alpha = match self.alpha.selection {
            AlphaMode::Gcv => AlphaSelection::Gcv(AlphaGrid {
                count: self.alpha.count,
                low: self.alpha.low,
                high: self.alpha.high,
            }),
            AlphaMode::Fixed => AlphaSelection::Fixed(self.alpha.value.ok_or_else(|| {
                FggmError::Config("fit.alpha.value is required when fit.alpha.selection = \"fixed\"".into())
            })?),
        };
        let cfg = FitConfig {
            variance_threshold: self.variance_threshold,
            n_components: self.n_components,
            gamma2: self.gamma2,
            gamma1_grid: self.gamma1_grid.grid(),
            em_tol: self.em_tol,
            max_em_iter: self.max_em_iter,
            alpha,
            gamma_ebic: self.gamma_ebic,
            method,
            refresh: self.refresh,
            kernel: self.kernel,
            q_scale: self.q_scale,
            standardize: self.standardize,
            admm: AdmmOptions {
                rho: self.admm.rho,
                max_iter: self.admm.max_iter,
                abs_tol: self.admm.abs_tol,
                rel_tol: self.admm.rel_tol,
                adaptive: self.admm.adaptive,
            },
        };
        cfg.validate().map_err(|e| match e {
            FggmError::InvalidParameter(m) => FggmError::Config(format!("fit: {m}")),
            other => other,
        })?;
        Ok(cfg)
    }
}

/// Parses a configuration, reporting every unknown key at once.
pub fn parse_config(text: &str) -> Result<ConfigFile> {
    let de = toml::Deserializer::parse(text).map_err(|e| FggmError::Config(e.to_string()))?;
    let mut unknown = Vec::new();
    let cfg: ConfigFile = serde_ignored::deserialize(de, |path| {
        // `?` marks an Option layer
        let name: Vec<String> = path.to_string().split('.').filter(|s| *s != "?").map(String::from).collect();
        unknown.push(name.join("."));
    })
        .map_err(|e| FggmError::Config(e.to_string().trim_end().to_string()))?;
    if !unknown.is_empty() {
        return Err(FggmError::Config(format!("unknown keys: {}", unknown.join(", "))));
    }
    Ok(cfg)
}

fn load_config(path: Option<&Path>) -> Result<ConfigFile> {
    match path {
        None => Ok(ConfigFile::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| FggmError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", p.display()))))?;
            parse_config(&text).map_err(|e| match e {
                FggmError::Config(m) => FggmError::Config(format!("{}: {m}", p.display())),
                other => other,
            })
        }
    }
}

/// Exit status of a failed command: 2 for configuration errors, 4 for
/// input and output errors, 3 for numerical failures.
pub fn exit_code(err: &FggmError) -> i32 {
    match err {
        FggmError::Config(_) | FggmError::InvalidParameter(_) => 2,
        FggmError::Io(_) | FggmError::Csv(_) | FggmError::Json(_) | FggmError::Format(_) => 4,
        _ => 3,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let (common, file) = match &cli.command {
        Command::Simulate { common }
        | Command::Fit { common, .. }
        | Command::Reconstruct { common, .. }
        | Command::Evaluate { common, .. } => (common, load_config(common.config.as_deref())?),
    };
    let threads = common.threads.or(file.threads).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| FggmError::Config(format!("thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Simulate { common } => simulate(common, &file),
        Command::Fit { common, flags, input } => fit_command(common, flags, input, &file, true),
        Command::Reconstruct { common, flags, input } => fit_command(common, flags, input, &file, false),
        Command::Evaluate { common, manifest, fits } => evaluate(common, manifest, fits),
    })
}

#[derive(Serialize)]
struct SimulationProvenance<'a> {
    seed: u64,
    simulation: &'a SimulationSection,
}

fn simulate(common: &Common, file: &ConfigFile) -> Result<()> {
    let sim = file
        .simulation
        .as_ref()
        .ok_or_else(|| FggmError::Config("missing required section [simulation] (with key structure)".into()))?;
    sim.validate()?;
    let seed = common.seed.or(file.seed).unwrap_or(0);
    let hash = config_hash(&serde_json::to_vec(&SimulationProvenance { seed, simulation: sim })?);
    let spec = CampaignSpec {
        synthesis: sim.synthesis(),
        cells: sim.cells.clone(),
        unit: sim.unit,
        reps: sim.reps,
        master_seed: seed,
        methods: Vec::new(),
        fit: FitConfig::default(),
    };
    let out = &common.out;
    let per_rep: Vec<(TruthEntry, Vec<DatasetEntry>)> = (0..sim.reps)
        .into_par_iter()
        .map(|rep| {
            let data_seed = replication_seed(seed, rep);
            let (_, truth) = synthesize(&spec.synthesis, data_seed)?;
            let prov = Provenance::new(hash.clone(), data_seed);
            let truth_name = format!("truth/rep_{rep:04}.json");
            let complete_name = format!("truth/rep_{rep:04}_complete.csv");
            write_json(&out.join(&truth_name), &TruthFile::from_truth(&truth, &prov))?;
            write_dataset_file(&out.join(&complete_name), &truth.complete, rep, Some(&prov))?;
            let mut entries = Vec::new();
            for (ci, c) in spec.cells.iter().enumerate() {
                let ms = mask_seed(seed, rep, ci);
                let data = mask_replication(&spec, &truth, rep, ci)?;
                let name = format!("data/rep_{rep:04}_cell_{ci}.csv");
                write_dataset_file(&out.join(&name), &data, rep, Some(&Provenance::new(hash.clone(), ms)))?;
                entries.push(DatasetEntry {
                    rep,
                    cell: ci,
                    pi_w: c.pi_w,
                    pi_po: c.pi_po,
                    data_seed,
                    mask_seed: ms,
                    path: name,
                });
            }
            let t = TruthEntry {
                rep,
                seed: data_seed,
                truth: truth_name,
                complete: complete_name,
            };
            Ok((t, entries))
        })
        .collect::<Result<_>>()?;
    let mut manifest = Manifest {
        config_hash: hash,
        master_seed: seed,
        n: sim.n,
        p: sim.p,
        d: sim.d,
        grid: GridSpec::unit(sim.d),
        layers: sim.layers,
        structure: serde_json::to_value(sim.structure)?.as_str().unwrap_or_default().to_string(),
        reps: sim.reps,
        datasets: Vec::new(),
        truths: Vec::new(),
    };
    for (t, ds) in per_rep {
        manifest.truths.push(t);
        manifest.datasets.extend(ds);
    }
    write_json(&out.join("manifest.json"), &manifest)?;
    println!(
        "wrote {} datasets and {} truths to {}",
        manifest.datasets.len(),
        manifest.truths.len(),
        out.display()
    );
    Ok(())
}

/// One fitted dataset listed in a fit index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitEntry {
    pub dataset: String,
    pub replication: usize,
    pub cell: Option<usize>,
    pub pi_w: Option<f64>,
    pub pi_po: Option<f64>,
    pub method: Method,
    pub report: Option<String>,
    pub path_table: Option<String>,
    pub reconstruction: String,
}

/// Written by `fit` and `reconstruct` next to their outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitIndex {
    pub config_hash: String,
    pub seed: u64,
    /// Hash of the bundle the datasets came from, when fitted from a
    /// manifest.
    pub data_config_hash: Option<String>,
    pub fits: Vec<FitEntry>,
}

struct Job {
    stem: String,
    path: PathBuf,
    display: String,
    replication: usize,
    cell: Option<(usize, Cell)>,
}

fn jobs_for(input: &Path) -> Result<(Vec<Job>, Option<String>)> {
    if input.extension().is_some_and(|e| e == "json") {
        let manifest: Manifest = read_json(input)?;
        let dir = input.parent().unwrap_or(Path::new(""));
        let jobs = manifest
            .datasets
            .iter()
            .map(|e| Job {
                stem: Path::new(&e.path).file_stem().unwrap_or_default().to_string_lossy().into_owned(),
                path: dir.join(&e.path),
                display: e.path.clone(),
                replication: e.rep,
                cell: Some((e.cell, Cell::new(e.pi_w, e.pi_po))),
            })
            .collect();
        Ok((jobs, Some(manifest.config_hash)))
    } else {
        let stem = input.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        let loaded = read_datasets(open_input(input)?)?;
        let many = loaded.len() > 1;
        let jobs = loaded
            .iter()
            .map(|l| Job {
                stem: if many { format!("{stem}_rep{}", l.replication) } else { stem.clone() },
                path: input.to_path_buf(),
                display: input.display().to_string(),
                replication: l.replication,
                cell: None,
            })
            .collect();
        Ok((jobs, None))
    }
}

fn open_input(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path)
        .map_err(|e| FggmError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn load_job(job: &Job) -> Result<(FunctionalDataset, Option<Provenance>)> {
    let all = read_datasets(open_input(&job.path)?)?;
    all.into_iter()
        .find(|l| l.replication == job.replication)
        .map(|l| (l.data, l.provenance))
        .ok_or_else(|| FggmError::Format(format!("{}: replication {} not found", job.display, job.replication)))
}

fn fit_command(common: &Common, flags: &FitFlags, input: &Path, file: &ConfigFile, full: bool) -> Result<()> {
    let mut section = file.fit.clone();
    section.apply(flags)?;
    if section.methods.is_empty() {
        return Err(FggmError::Config("fit.methods must name at least one method".into()));
    }
    let configs: Vec<(Method, FitConfig)> = section
        .methods
        .iter()
        .map(|&m| section.config(m).map(|c| (m, c)))
        .collect::<Result<_>>()?;
    let hash = config_hash(&serde_json::to_vec(&section)?);
    let seed = common.seed.or(file.seed);
    let (jobs, data_hash) = jobs_for(input)?;
    let out = &common.out;
    let tasks: Vec<(&Job, &(Method, FitConfig))> = jobs.iter().flat_map(|j| configs.iter().map(move |c| (j, c))).collect();
    let fits: Vec<FitEntry> = tasks
        .into_par_iter()
        .map(|(job, (method, cfg))| {
            let (data, prov) = load_job(job)?;
            let prov = Provenance::new(hash.clone(), seed.or(prov.map(|p| p.seed)).unwrap_or(0));
            let res = fit(&data, cfg).map_err(|e| with_context(e, &job.display, *method))?;
            let base = format!("{}.{}", job.stem, method.name());
            let recon = format!("{base}.reconstructed.csv");
            write_dataset_file(&out.join(&recon), &res.reconstructed, job.replication, Some(&prov))?;
            let (report, table) = if full {
                let report_name = format!("{base}.report.json");
                let table_name = format!("{base}.path.csv");
                let report = FitReport::from_result(&res, &prov, job.display.clone(), job.replication, *method, recon.clone());
                write_json(&out.join(&report_name), &report)?;
                write_path_table(create_file(&out.join(&table_name))?, &report)?;
                (Some(report_name), Some(table_name))
            } else {
                (None, None)
            };
            Ok(FitEntry {
                dataset: job.display.clone(),
                replication: job.replication,
                cell: job.cell.map(|c| c.0),
                pi_w: job.cell.map(|c| c.1.pi_w),
                pi_po: job.cell.map(|c| c.1.pi_po),
                method: *method,
                report,
                path_table: table,
                reconstruction: recon,
            })
        })
        .collect::<Result<_>>()?;
    let index = FitIndex {
        config_hash: hash,
        seed: seed.unwrap_or(0),
        data_config_hash: data_hash,
        fits,
    };
    write_json(&out.join("fits.json"), &index)?;
    println!("fitted {} dataset(s) into {}", index.fits.len(), out.display());
    Ok(())
}

fn with_context(e: FggmError, dataset: &str, method: Method) -> FggmError {
    let ctx = |m: String| format!("{dataset} ({}): {m}", method.name());
    match e {
        FggmError::Numerical(m) => FggmError::Numerical(ctx(m)),
        FggmError::InvalidParameter(m) => FggmError::InvalidParameter(ctx(m)),
        FggmError::Format(m) => FggmError::Format(ctx(m)),
        other => FggmError::Numerical(ctx(other.to_string())),
    }
}

const RECORD_HEADER: [&str; 12] = [
    "rep",
    "cell",
    "pi_w",
    "pi_po",
    "method",
    "mse_x",
    "mse_theta_min",
    "auc",
    "sensitivity",
    "specificity",
    "selected_gamma1",
    "em_iterations",
];

/// Empty for NaN, shortest round-trip form otherwise.
fn num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

fn evaluate(common: &Common, manifest_path: &Path, fits_path: &Path) -> Result<()> {
    let manifest: Manifest = read_json(manifest_path)?;
    let index: FitIndex = read_json(fits_path)?;
    if index.data_config_hash.as_deref() != Some(manifest.config_hash.as_str()) {
        return Err(FggmError::Config(format!(
            "fit index {} was not produced from bundle {} (config hash {:?} against {})",
            fits_path.display(),
            manifest_path.display(),
            index.data_config_hash,
            manifest.config_hash
        )));
    }
    let bundle = manifest_path.parent().unwrap_or(Path::new(""));
    let fit_dir = fits_path.parent().unwrap_or(Path::new(""));
    let truths: BTreeMap<usize, &TruthEntry> = manifest.truths.iter().map(|t| (t.rep, t)).collect();

    let mut by_rep: BTreeMap<usize, Vec<&FitEntry>> = BTreeMap::new();
    for f in &index.fits {
        by_rep.entry(f.replication).or_default().push(f);
    }
    let per_rep: Vec<Vec<Record>> = by_rep
        .into_par_iter()
        .map(|(rep, fits)| {
            let entry = truths
                .get(&rep)
                .ok_or_else(|| FggmError::Config(format!("replication {rep} has no ground truth in the manifest")))?;
            let truth: TruthFile = read_json(&bundle.join(&entry.truth))?;
            let adjacency = truth.adjacency()?;
            let thetas = truth.theta_matrices()?;
            let complete = read_dataset_file(&bundle.join(&entry.complete))?.data;
            fits.into_iter()
                .map(|f| {
                    let report_name = f.report.as_ref().ok_or_else(|| {
                        FggmError::Config(format!("{} was reconstructed without a report", f.dataset))
                    })?;
                    let report: FitReport = read_json(&fit_dir.join(report_name))?;
                    if (report.n, report.p, report.d) != (manifest.n, manifest.p, manifest.d) {
                        return Err(FggmError::Config(format!(
                            "{report_name} is {}x{}x{}, the bundle is {}x{}x{}",
                            report.n, report.p, report.d, manifest.n, manifest.p, manifest.d
                        )));
                    }
                    let recon = read_dataset_file(&fit_dir.join(&f.reconstruction))?.data;
                    let path_thetas = (0..report.path.len()).map(|k| report.path_thetas(k)).collect::<Result<Vec<_>>>()?;
                    let refs: Vec<&[nalgebra::DMatrix<f64>]> = path_thetas.iter().map(Vec::as_slice).collect();
                    let metrics: Evaluation = evaluate_path(
                        &adjacency,
                        &thetas,
                        &complete,
                        &refs,
                        &report.path_edges(),
                        &report.edges.iter().copied().collect(),
                        &recon,
                    )?;
                    Ok(Record {
                        rep,
                        cell: f.cell.unwrap_or(0),
                        pi_w: f.pi_w.unwrap_or(f64::NAN),
                        pi_po: f.pi_po.unwrap_or(f64::NAN),
                        method: f.method,
                        metrics,
                        selected_gamma1: report.selected_gamma1,
                        em_iterations: report.em_iterations,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut records: Vec<Record> = per_rep.into_iter().flatten().collect();
    records.sort_by(|a, b| (a.rep, a.cell, a.method.name()).cmp(&(b.rep, b.cell, b.method.name())));

    let prov = Provenance::new(manifest.config_hash.clone(), manifest.master_seed);
    write_table(
        create_file(&common.out.join("records.csv"))?,
        &prov,
        &RECORD_HEADER,
        records.iter().map(|r| {
            vec![
                r.rep.to_string(),
                r.cell.to_string(),
                num(r.pi_w),
                num(r.pi_po),
                r.method.name().to_string(),
                num(r.metrics.mse_x),
                num(r.metrics.mse_theta_min),
                num(r.metrics.auc),
                num(r.metrics.sensitivity),
                num(r.metrics.specificity),
                num(r.selected_gamma1),
                r.em_iterations.to_string(),
            ]
        }),
    )?;
    let mut summary = summarize(&records);
    summary.sort_by(|a, b| (a.cell, a.method.name()).cmp(&(b.cell, b.method.name())));
    let spread = |s: &Spread| [num(s.q1), num(s.median), num(s.q3)];
    write_table(
        create_file(&common.out.join("summary.csv"))?,
        &prov,
        &[
            "cell",
            "pi_w",
            "pi_po",
            "method",
            "reps",
            "mse_x_q1",
            "mse_x_median",
            "mse_x_q3",
            "mse_theta_min_q1",
            "mse_theta_min_median",
            "mse_theta_min_q3",
            "auc_q1",
            "auc_median",
            "auc_q3",
        ],
        summary.iter().map(|s| {
            let mut row = vec![
                s.cell.to_string(),
                num(s.pi_w),
                num(s.pi_po),
                s.method.name().to_string(),
                s.reps.to_string(),
            ];
            row.extend(spread(&s.mse_x));
            row.extend(spread(&s.mse_theta_min));
            row.extend(spread(&s.auc));
            row
        }),
    )?;
    println!("evaluated {} fits into {}", records.len(), common.out.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_mirror_the_library() {
        let cfg = parse_config("").unwrap();
        assert!(cfg.simulation.is_none());
        assert_eq!(cfg.fit.config(Method::Proposed).unwrap(), FitConfig::default());
    }

    #[test]
    fn unknown_keys_are_all_listed() {
        let err = parse_config("bogus = 1\n[fit]\nmethods = [\"kraus\"]\ngamma = 2\n").unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, FggmError::Config(_)));
        assert!(msg.contains("bogus") && msg.contains("fit.gamma"), "{msg}");
    }

    #[test]
    fn missing_structure_is_named() {
        let err = parse_config("[simulation]\nn = 10\n").unwrap_err();
        assert!(err.to_string().contains("structure"), "{err}");
        assert_eq!(exit_code(&err), 2);
    }

    #[test]
    fn grid_setting_accepts_sizes_and_lists() {
        assert_eq!(GridSetting::parse("51").unwrap(), GridSetting::Size(51));
        assert_eq!(GridSetting::parse("0,0.5,1").unwrap(), GridSetting::Values(vec![0.0, 0.5, 1.0]));
        assert!(GridSetting::parse("many").is_err());
        let cfg = parse_config("[fit]\ngamma1_grid = [0.1, 0.2]\n").unwrap();
        assert_eq!(cfg.fit.gamma1_grid, GridSetting::Values(vec![0.1, 0.2]));
    }

    #[test]
    fn fixed_alpha_needs_a_value() {
        let cfg = parse_config("[fit.alpha]\nselection = \"fixed\"\n").unwrap();
        let err = cfg.fit.config(Method::Kraus).unwrap_err();
        assert!(err.to_string().contains("fit.alpha.value"));
    }
}
