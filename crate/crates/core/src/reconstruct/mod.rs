//! Imputation of missing score parts and missing curve fragments from the
//! observed fragments through a ridge-regularized covariance system, ridge
//! selection by generalized cross-validation, and the univariate baseline.

mod gcv;
mod imputer;
mod pattern;
mod ridge;

pub use gcv::{select_alpha_gcv, AlphaGrid, GcvSelection};
pub use imputer::{
    impute_scores, kraus_univariate_impute, reconstruct_curves, AlphaChoice, AlphaSelection,
    ImputationMethod, ImputationResult, Imputer, PatternImputer,
};
pub use pattern::{build_observed_block, build_r, ObservedPattern};
pub use ridge::{effective_df, solve_b, PatternSpectrum, RidgeSolveCache};
