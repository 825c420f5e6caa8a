//! Grid inner products and how they split across observed and missing
//! parts of a curve.

use fggm::fda::{inner_product, restrict, DomainMask, Grid};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = Grid::new(51)?;
    let f: Vec<f64> = grid.points().iter().map(|t| (std::f64::consts::PI * t).sin()).collect();

    // ∫ sin²(πt) dt = 1/2 on [0, 1]
    let full = inner_product(&grid, &f, &f, None)?;
    println!("full-domain norm: {full:.6} (exact 0.5)");

    let mask = DomainMask::with_gap(51, 20, 15)?;
    let missing = DomainMask::new(mask.as_slice().iter().map(|o| !o).collect())?;
    let o = inner_product(&grid, &f, &f, Some(&mask))?;
    let m = inner_product(&grid, &f, &f, Some(&missing))?;
    println!("observed {o:.6} + missing {m:.6} = {:.6}", o + m);

    let r = restrict(&grid, &f, &mask)?;
    println!("observed runs {:?}, measure {:.3}", mask.runs(), r.measure());
    Ok(())
}
