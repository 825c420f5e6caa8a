//! Discretized functional-data algebra: the evaluation grid, observation
//! masks, quadrature inner products and the dataset container.

mod dataset;
mod grid;
mod mask;
mod ops;

pub use dataset::FunctionalDataset;
pub use grid::Grid;
pub use mask::DomainMask;
pub use ops::{inner_product, restrict, vector_inner_product, Restricted};
