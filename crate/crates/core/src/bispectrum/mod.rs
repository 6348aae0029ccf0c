//! Bispectrum estimators and the closed-form moment results.

mod estimator;
mod moments;
mod triple;

pub use estimator::{
    feasible_normalized_bispectrum, normalized_bispectrum, sample_bispectrum, shared_table,
};
pub use moments::{
    big_g_factor, delta_factor, edgeworth_cdf, edgeworth_with_kappa, fourth_moment_exact,
    fourth_moment_exact_feasible, fourth_moment_general, fourth_moment_shape, g_factor, hermite3,
    hermite4, kappa4_closed_form, kappa4_formal, moment_expansion, moment_expansion_exact, moment_recursion,
    EdgeworthValue, ExactExpansion, FourthMomentShape, MomentPrediction,
};
pub use triple::MultipoleTriple;
