//! End-to-end runs of the `fggm` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fggm::fda::{FunctionalDataset, Grid};
use fggm::io::{write_dataset_file, FitReport};
use tempfile::TempDir;

const SIM: &str = r#"
seed = 7

[simulation]
structure = "small-world"
n = 40
p = 6
d = 20
reps = 2
cells = [{ pi_w = 0.5, pi_po = 0.5 }, { pi_w = 0.25, pi_po = 0.25 }]

[fit]
methods = ["proposed", "kraus"]
n_components = 3
gamma1_grid = 6
"#;

fn fggm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fggm")).args(args).output().unwrap()
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(read_tree(&path));
        } else {
            out.push((path.strip_prefix(dir).unwrap().display().to_string(), fs::read(&path).unwrap()));
        }
    }
    out.sort();
    out
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("sim.toml");
    fs::write(&cfg, SIM).unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&fggm(&["simulate", "--config", s(&cfg), "--out", s(&a)]));
    ok(&fggm(&["simulate", "--config", s(&cfg), "--out", s(&b), "--threads", "2"]));
    let (ta, tb) = (read_tree(&a), read_tree(&b));
    assert_eq!(ta.len(), 1 + 2 * 2 + 2 * 2);
    assert_eq!(ta, tb);
}

#[test]
fn simulate_fit_evaluate_round() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("sim.toml");
    fs::write(&cfg, SIM).unwrap();
    let bundle = tmp.path().join("bundle");
    let fits = tmp.path().join("fits");
    let eval = tmp.path().join("eval");
    ok(&fggm(&["simulate", "--config", s(&cfg), "--out", s(&bundle)]));
    ok(&fggm(&["fit", "--config", s(&cfg), "--out", s(&fits), s(&bundle.join("manifest.json"))]));
    ok(&fggm(&[
        "evaluate",
        "--manifest",
        s(&bundle.join("manifest.json")),
        "--fits",
        s(&fits.join("fits.json")),
        "--out",
        s(&eval),
    ]));

    // provenance on every file
    for dir in [&bundle, &fits, &eval] {
        for (name, bytes) in read_tree(dir) {
            let text = String::from_utf8(bytes).unwrap();
            if name.ends_with(".csv") {
                assert!(text.starts_with("# config_hash="), "{name}");
                assert!(text.lines().next().unwrap().contains(" seed="), "{name}");
            } else {
                assert!(text.contains("\"config_hash\"") && text.contains("seed"), "{name}");
            }
        }
    }

    // one row per replication, cell and method
    let records = fs::read_to_string(eval.join("records.csv")).unwrap();
    let rows: Vec<Vec<&str>> = records.lines().skip(2).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2 * 2 * 2);
    for pair in rows.chunks(2) {
        assert_eq!(pair[0][..2], pair[1][..2]);
        assert_eq!((pair[0][4], pair[1][4]), ("kraus", "proposed"));
    }

    // medians of the summary follow from the records
    let summary = fs::read_to_string(eval.join("summary.csv")).unwrap();
    for line in summary.lines().skip(2) {
        let f: Vec<&str> = line.split(',').collect();
        let vals: Vec<f64> = rows
            .iter()
            .filter(|r| r[1] == f[0] && r[4] == f[3])
            .map(|r| r[5].parse().unwrap())
            .collect();
        assert_eq!(vals.len(), 2);
        let median: f64 = f[6].parse().unwrap();
        assert!((median - (vals[0] + vals[1]) / 2.0).abs() < 1e-12);
    }
}

#[test]
fn gamma1_grid_flag_sets_the_path_length() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("sim.toml");
    fs::write(&cfg, SIM).unwrap();
    let bundle = tmp.path().join("bundle");
    ok(&fggm(&["simulate", "--config", s(&cfg), "--out", s(&bundle)]));
    let data = bundle.join("data/rep_0000_cell_0.csv");
    let out = tmp.path().join("fit");
    ok(&fggm(&["fit", "--out", s(&out), "--gamma1-grid", "51", "--method", "kraus", s(&data)]));
    let table = fs::read_to_string(out.join("rep_0000_cell_0.kraus.path.csv")).unwrap();
    assert_eq!(table.lines().count(), 2 + 51);
    let report: FitReport = serde_json::from_str(&fs::read_to_string(out.join("rep_0000_cell_0.kraus.report.json")).unwrap()).unwrap();
    assert_eq!(report.path.len(), 51);
    assert_eq!(report.path_precisions.len(), 51);
}

#[test]
fn fully_observed_data_has_nothing_to_impute() {
    let tmp = TempDir::new().unwrap();
    let (n, p, d) = (30, 3, 15);
    let grid = Grid::new(d).unwrap();
    let values: Vec<f64> = (0..n * p * d)
        .map(|c| {
            let (i, j, k) = (c / (p * d), (c / d) % p, c % d);
            ((i * 7 + j * 3) as f64).sin() * (1.0 + (k as f64 / 4.0).cos()) + ((i * j) as f64).cos() * 0.3
        })
        .collect();
    let data = FunctionalDataset::complete(grid, n, p, values).unwrap();
    let path = tmp.path().join("toy.csv");
    write_dataset_file(&path, &data, 0, None).unwrap();
    let out = tmp.path().join("fit");
    ok(&fggm(&["fit", "--out", s(&out), s(&path)]));
    let report: FitReport = serde_json::from_str(&fs::read_to_string(out.join("toy.proposed.report.json")).unwrap()).unwrap();
    assert_eq!(report.mu_miss_max_abs, 0.0);
    let recon = fggm::io::read_dataset_file(&out.join("toy.proposed.reconstructed.csv")).unwrap();
    assert_eq!(recon.data, data);
}

#[test]
fn config_errors_exit_with_two_and_name_the_key() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "[simulation]\nn = 10\n").unwrap();
    let out = fggm(&["simulate", "--config", s(&cfg), "--out", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("structure"));

    fs::write(&cfg, "colour = 1\n[simulation]\nstructure = \"star\"\nsize = 3\n").unwrap();
    let out = fggm(&["simulate", "--config", s(&cfg), "--out", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("colour") && err.contains("simulation.size"), "{err}");

    let out = fggm(&["fit", "--out", s(tmp.path()), "--method", "lasso", "x.csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_input_exits_with_four() {
    let tmp = TempDir::new().unwrap();
    let out = fggm(&["fit", "--out", s(tmp.path()), s(&tmp.path().join("absent.csv"))]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn degenerate_data_exits_with_three() {
    let tmp = TempDir::new().unwrap();
    let data = FunctionalDataset::complete(Grid::new(10).unwrap(), 5, 2, vec![1.0; 100]).unwrap();
    let path = tmp.path().join("flat.csv");
    write_dataset_file(&path, &data, 0, None).unwrap();
    let out = fggm(&["fit", "--out", s(tmp.path()), s(&path)]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}
