//! Almgren-type frequency of a solution on gauge balls centred at the origin.
//!
//! With `w = r^2 - rho^2`:
//! `H(r) = int_{B_r} u^2 w^alpha mu`,
//! `I(r) = int_{B_r} (<A Xu, Xu> + V u^2) w^(alpha+1)`,
//! `N(r) = I(r) / H(r)` and `h(r) = int_{B_r} u^2 mu`.
//! On solutions `I(r)` also equals `2 (alpha+1) int_{B_r} u Fu w^alpha mu`.
//!
//! The constants of the monotonicity, three-ball and vanishing-order
//! inequalities are fitted over bounded grids; a check passes when some
//! admissible constants exist.

mod fits;
mod profile;
mod three_ball;
mod vanishing;
mod variation;

pub use fits::{
    cauchy_schwarz_check, comparison_fit, doubling_check, h_sup_check, monotonicity_fit, ComparisonReport,
    MonotonicityReport, ProfileCheck, CONSTANT_GRID_MAX, CONSTANT_GRID_STEP, MONOTONE_TOLERANCE,
};
pub use profile::{
    adjusted_frequency, energy, flux, frequency, height, profile_from_sums, radial_profile, radial_profiles,
    FrequencyValue, ProfileRow, ProfileSums, RadialProfile, ReplicateColumns, RowFlags, CSV_HEADER,
};
pub use three_ball::{three_ball_from_h, three_ball_slack, ThreeBallRadii, ThreeBallReport};
pub use vanishing::{default_vanishing_radii, vanishing_order, VanishingReport};
pub use variation::{variation_residuals, VariationReport, VariationRow, MIN_RADII};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::QuadConfig;

/// Samples per radius for the sup-norm column.
pub const DEFAULT_SUP_SAMPLES: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrequencyConfig {
    /// Weight exponent; `sqrt(k)` unless overridden.
    pub alpha: f64,
    /// Increasing radii in (0, r1].
    pub radii: Vec<f64>,
    /// Working radius, at most 1.
    pub r1: f64,
    /// Potential constant, at least 1.
    pub k: f64,
    pub quad: QuadConfig,
    pub sup_samples: usize,
    /// Constants of the adjusted frequency `e^(c1 r) (N + c2 K r^2)`.
    pub c1: f64,
    pub c2: f64,
}

impl FrequencyConfig {
    pub fn new(k: f64, radii: Vec<f64>) -> Result<Self> {
        let cfg = FrequencyConfig {
            alpha: k.max(0.0).sqrt(),
            radii,
            r1: 1.0,
            k,
            quad: QuadConfig::default(),
            sup_samples: DEFAULT_SUP_SAMPLES,
            c1: 0.0,
            c2: 0.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_quad(mut self, quad: QuadConfig) -> Self {
        self.quad = quad;
        self
    }

    pub fn with_r1(mut self, r1: f64) -> Self {
        self.r1 = r1;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k >= 1.0 && self.k.is_finite()) {
            return Err(Error::invalid(format!("potential constant must be >= 1, got {}", self.k)));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(format!("weight exponent must be >= 0, got {}", self.alpha)));
        }
        if !(self.r1 > 0.0 && self.r1 <= 1.0) {
            return Err(Error::invalid(format!("working radius must lie in (0, 1], got {}", self.r1)));
        }
        let Some(&first) = self.radii.first() else {
            return Err(Error::invalid("no radii"));
        };
        if !(first > 0.0) {
            return Err(Error::invalid(format!("radii must be positive, got {first}")));
        }
        if self.radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("radii must be strictly increasing"));
        }
        let last = self.radii[self.radii.len() - 1];
        if last > self.r1 {
            return Err(Error::invalid(format!("radius {last} exceeds the working radius {}", self.r1)));
        }
        if self.sup_samples == 0 {
            return Err(Error::invalid("sup sampling needs at least one point"));
        }
        Ok(())
    }
}

/// `n` radii from `lo` to `hi`, equally spaced in log r.
pub fn geometric_radii(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && n >= 2) {
        return Err(Error::invalid(format!("bad geometric grid ({lo}, {hi}, {n})")));
    }
    let step = (hi / lo).ln() / (n - 1) as f64;
    Ok((0..n)
        .map(|i| if i == n - 1 { hi } else { lo * (step * i as f64).exp() })
        .collect())
}
