//! Joint graphical lasso along a penalty path on population score
//! covariances: from the full graph at zero penalty to the empty graph at
//! the largest useful penalty.

use fggm::jgl::{gamma1_max, penalized_objective, solve_jgl, AdmmOptions, PenaltySpec};
use fggm::simgen::{synthesize, GraphSpec, Structure, SynthesisSpec};
use nalgebra::DMatrix;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SynthesisSpec::new(GraphSpec::new(Structure::Star, 15), 200, 50, 3);
    let (_, truth) = synthesize(&spec, 5)?;
    let n = spec.n as f64;
    let s: Vec<DMatrix<f64>> = (0..3)
        .map(|l| {
            let x = truth.scores.layer(l);
            x.transpose() * &x / n
        })
        .collect();

    let gmax = gamma1_max(&s, 0.5);
    println!("true graph: {} edges, gamma1_max = {gmax:.4}", truth.adjacency.n_edges());
    for k in 0..=8 {
        let pen = PenaltySpec::new(gmax * k as f64 / 8.0, 0.5)?;
        let sol = solve_jgl(&s, &pen, &AdmmOptions::default())?;
        let found = sol.sparse.union_edges();
        let hits = found.iter().filter(|&&(a, b)| truth.adjacency.contains(a, b)).count();
        println!(
            "gamma1 {:.4}: {:>3} edges ({hits} true), objective {:.4}, {} ADMM iterations",
            pen.gamma1,
            found.len(),
            penalized_objective(&s, sol.sparse.layers(), &pen)?,
            sol.iterations
        );
    }
    Ok(())
}
