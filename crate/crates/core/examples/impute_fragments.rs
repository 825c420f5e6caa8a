//! Completes missing windows with the multivariate ridge imputer and the
//! univariate baseline, and compares them with the truth.

use fggm::metrics::mse_x;
use fggm::moments::{build_h, eigendecompose_h, estimate_covariance, select_l};
use fggm::reconstruct::{AlphaSelection, ImputationMethod, Imputer};
use fggm::fda::FunctionalDataset;
use fggm::simgen::{inject_missingness, synthesize, GraphSpec, MissingnessSpec, Structure, SynthesisSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SynthesisSpec::new(GraphSpec::new(Structure::SmallWorld, 15), 100, 50, 3);
    let (complete, _) = synthesize(&spec, 21)?;
    let data = inject_missingness(&complete, &MissingnessSpec::new(0.25, 0.25), 22)?;

    let cov = estimate_covariance(&data)?;
    let eig = eigendecompose_h(&build_h(&cov)?, data.grid())?;
    let l = select_l(&eig, 0.9999)?;
    let eig = eig.with_components(l)?;

    for method in [ImputationMethod::Multivariate, ImputationMethod::Univariate] {
        let imp = Imputer::build(&data, &cov, &eig, method, AlphaSelection::default())?;
        let mut values = Vec::with_capacity(data.values().len());
        for i in 0..data.n() {
            values.extend(imp.impute_row(&data, cov.mean(), i).reconstructed);
        }
        let recon = FunctionalDataset::complete(data.grid().clone(), data.n(), data.p(), values)?;
        let alphas: Vec<f64> = imp.alpha_choices().iter().map(|c| c.alpha).collect();
        println!(
            "{method:?}: {} pattern units, median alpha {:.2e}, MSE_X {:.5}",
            alphas.len(),
            fggm::campaign::quantile(&alphas, 0.5),
            mse_x(&complete, &recon)?
        );
    }
    Ok(())
}
