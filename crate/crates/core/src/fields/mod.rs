//! Coefficient matrices, potentials, and the structural bounds they satisfy.

mod coefficient;
mod potential;
mod structural;

pub use coefficient::{
    eval_mu, eval_sigma, f_apply, f_vector, make_perturbed, sigma_over_mu, CoefficientField, Identity, MuField,
    Perturbed, TBlockViolating, PSI_SWITCH,
};
pub use potential::{check_potential, potential_ratios, Potential, PotentialReport, Provenance};
pub use structural::{
    bound_ratios, check_structural, check_structural_with, BoundMax, HypothesisReport, StructuralCheck, BOUND_NAMES,
};
