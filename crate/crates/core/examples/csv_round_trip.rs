//! Writes a partially observed dataset in long form and reads it back.

use fggm::io::{config_hash, read_datasets, write_dataset, Provenance};
use fggm::simgen::{inject_missingness, synthesize, GraphSpec, MissingnessSpec, Structure, SynthesisSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SynthesisSpec::new(GraphSpec::new(Structure::Banded, 4), 5, 20, 2);
    let (complete, _) = synthesize(&spec, 1)?;
    let data = inject_missingness(&complete, &MissingnessSpec::new(0.6, 0.3), 2)?;

    let prov = Provenance::new(config_hash(b"example"), 2);
    let mut buf = Vec::new();
    write_dataset(&mut buf, &data, 0, Some(&prov))?;
    let text = String::from_utf8(buf)?;
    for line in text.lines().take(4) {
        println!("{line}");
    }
    println!("... {} lines", text.lines().count());

    let back = read_datasets(text.as_bytes())?;
    println!("round trip identical: {}", back[0].data == data);
    Ok(())
}
