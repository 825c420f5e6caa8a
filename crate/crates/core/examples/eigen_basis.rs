//! Estimates the mean and covariance from fragments, then the shared
//! eigenbasis and the number of components needed for a variance level.

use fggm::moments::{build_h, eigendecompose_h, estimate_covariance, select_l};
use fggm::simgen::{inject_missingness, synthesize, GraphSpec, MissingnessSpec, Structure, SynthesisSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SynthesisSpec::new(GraphSpec::new(Structure::SmallWorld, 15), 100, 50, 3);
    let (complete, truth) = synthesize(&spec, 3)?;
    let data = inject_missingness(&complete, &MissingnessSpec::new(0.5, 0.5), 4)?;

    let cov = estimate_covariance(&data)?;
    println!("{} covariance entries without co-observed samples", cov.n_undefined());
    let eig = eigendecompose_h(&build_h(&cov)?, data.grid())?;
    let head: Vec<String> = eig.values().iter().take(5).map(|v| format!("{v:.4}")).collect();
    println!("leading eigenvalues: {}", head.join(", "));
    for level in [0.9, 0.99, 0.9999] {
        println!("L for {level}: {}", select_l(&eig, level)?);
    }

    // agreement with the generating basis, up to sign
    let grid = data.grid();
    for l in 0..3 {
        let ip: f64 = grid
            .weights()
            .iter()
            .zip(eig.function(l).iter().zip(&truth.basis[l]))
            .map(|(w, (a, b))| w * a * b)
            .sum();
        println!("|<phi_hat_{l}, phi_{l}>| = {:.4}", ip.abs());
    }
    Ok(())
}
