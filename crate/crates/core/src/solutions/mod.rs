//! Solutions of `X_i(a_ij X_j u) = V u`: closed-form manufactured members,
//! pointwise residuals, and a finite-difference Dirichlet solver.

mod grid;
mod manufactured;
mod residual;
mod solver;

pub use grid::{grid_to_field, GridField, GridSolution, GridSpec};
pub use manufactured::{builtin_kinds, manufactured, Manufactured, ManufacturedKind};
pub use residual::{residual, residual_extrapolated, COLLAR_STEPS};
pub use solver::{assemble, pcg, solve_fd, Assembled, CgOutcome, Csr, SOLVER_TOLERANCE};

use crate::error::Result;
use crate::field::ScalarField;
use crate::fields::Potential;
use crate::geometry::{horizontal, HorizontalVector, Point};

/// A solution candidate together with what is known about it.
pub trait SolutionField: ScalarField {
    fn name(&self) -> String;

    /// Homogeneity degree or vanishing order at the origin, when known.
    fn kappa(&self) -> Option<f64>;

    /// The potential the field solves exactly against the identity operator.
    fn exact_potential(&self) -> Option<Potential>;

    /// An upper bound for `|u|` on B_r.
    fn bound_c0(&self, r: f64) -> f64;

    fn xgrad(&self, p: &Point) -> Result<HorizontalVector> {
        let d = self.dims();
        Ok(horizontal(&self.gradient(p)?, p, &d))
    }
}
