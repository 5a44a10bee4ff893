//! Dense polynomial algebra used by the elimination pipeline.

mod bivariate;
mod resultant;
mod roots;
mod univariate;

pub use bivariate::BivariatePoly;
pub use resultant::{
    determinant_by_interpolation, fft_evaluation_interpolation, resultant_degree_bound, sylvester_matrix,
    sylvester_resultant, ResultantOptions,
};
pub use roots::{aberth_roots, real_positive_roots, AberthOptions};
pub use univariate::{UnivariatePoly, TRIM_REL};
