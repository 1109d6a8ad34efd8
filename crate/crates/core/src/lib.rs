//! Numerical laboratory for the Baouendi-Grushin operator
//! `Delta_z + |z|^(2 beta) Delta_t` and its variable-coefficient
//! perturbations `X_i(a_ij X_j u) = V u`.
//!
//! The crate provides the closed-form sub-elliptic calculus ([`geometry`]),
//! structured coefficient and potential families ([`fields`]), manufactured
//! and grid solutions ([`solutions`]), quasi-Monte Carlo integration over
//! gauge balls ([`quadrature`]) and Almgren-type frequency diagnostics
//! ([`frequency`]).

pub mod check;
pub mod error;
pub mod estimates;
pub mod field;
pub mod fields;
pub mod frequency;
pub mod geometry;
pub mod linalg;
pub mod quadrature;
pub mod solutions;

pub use check::{CheckRow, CheckStatus};
pub use error::{Error, Result};
pub use field::{Constant, FnField, ScalarField};
pub use fields::{CoefficientField, Potential};
pub use geometry::{Dims, HorizontalVector, Point};
pub use linalg::{MatN, VecN, MAX_DIM};
pub use solutions::SolutionField;
