//! Draws the three graph designs, removes fragments from one of them and
//! reports how much of the data went missing.

use fggm::simgen::{inject_missingness, synthesize, GraphSpec, MissingnessSpec, Structure, SynthesisSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for structure in [Structure::Star, Structure::Banded, Structure::SmallWorld] {
        let spec = SynthesisSpec::new(GraphSpec::new(structure, 15), 100, 50, 3);
        let (complete, truth) = synthesize(&spec, 11)?;
        println!(
            "{structure:?}: {} edges, degrees {:?}",
            truth.adjacency.n_edges(),
            truth.adjacency.degrees()
        );
        let layer_norms: Vec<String> = truth
            .sigmas
            .iter()
            .map(|s| format!("{:.3}", s.diagonal().mean()))
            .collect();
        println!("  mean score variance per layer: {}", layer_norms.join(", "));

        if structure == Structure::SmallWorld {
            for (pi_w, pi_po) in [(0.25, 0.25), (0.75, 0.75)] {
                let data = inject_missingness(&complete, &MissingnessSpec::new(pi_po, pi_w), 12)?;
                let missing: usize = data.masks().iter().map(|m| m.n_missing()).sum();
                println!(
                    "  pi_w {pi_w}, pi_po {pi_po}: {:.0}% of curves partial, {:.1}% of points missing, {} complete rows",
                    100.0 * data.partial_fraction(),
                    100.0 * missing as f64 / data.values().len() as f64,
                    data.complete_rows().len()
                );
            }
        }
    }
    Ok(())
}
