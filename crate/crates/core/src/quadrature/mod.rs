//! Weighted integrals and sup-norms over gauge balls.

mod ball;
mod sobol;
mod sup;

pub use ball::{
    integrate_ball, omega, BallRule, QuadConfig, QuadResult, Replicated, WeightFactor, WeightSpec, DEFAULT_POINTS,
    DEFAULT_REL_TOL, DEFAULT_REPLICATES,
};
pub use sobol::Sobol;
pub use sup::sup_on_ball;
