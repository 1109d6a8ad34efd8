//! Three-ball inequality for `h(r) = int_{B_r} u^2 mu`:
//! `h(r2) <= e^C (r3 / (2 r2))^(C'' sqrt K) h(r3)^theta h(r1)^(1 - theta)`
//! with `theta = b0 / (a0 + b0)`, `a0 = log(r3 / (2 r2))` and
//! `b0 = cbar^2 log(2 r2 / r1)`.

use serde::Serialize;

use super::fits::{CONSTANT_GRID_MAX, CONSTANT_GRID_STEP};
use super::ProfileSums;
use crate::check::CheckStatus;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::fields::{CoefficientField, Potential};
use crate::quadrature::QuadConfig;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThreeBallRadii {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
}

impl ThreeBallRadii {
    pub fn new(r1: f64, r2: f64, r3: f64) -> Result<Self> {
        if !(r1 > 0.0 && r1 < r2 && 2.0 * r2 < r3 && r3 <= 1.0) {
            return Err(Error::invalid(format!(
                "three-ball radii need 0 < r1 < r2 < 2 r2 < r3 <= 1, got ({r1}, {r2}, {r3})"
            )));
        }
        Ok(ThreeBallRadii { r1, r2, r3 })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThreeBallReport {
    pub radii: ThreeBallRadii,
    pub k: f64,
    pub cbar: f64,
    pub h: [f64; 3],
    pub alpha0: f64,
    pub beta0: f64,
    pub theta: f64,
    /// Slack with C = C'' = 0.
    pub slack_at_zero: f64,
    /// Smallest grid pair (by sum, then C) with nonnegative slack.
    pub c_fit: Option<f64>,
    pub c2_fit: Option<f64>,
    pub status: CheckStatus,
}

/// Evaluates the inequality from the three values `h(r1), h(r2), h(r3)`.
pub fn three_ball_from_h(radii: ThreeBallRadii, h: [f64; 3], k: f64, cbar: f64) -> Result<ThreeBallReport> {
    if !(cbar >= 1.0) {
        return Err(Error::invalid(format!("comparison constant must be >= 1, got {cbar}")));
    }
    if !(k >= 1.0) {
        return Err(Error::invalid(format!("potential constant must be >= 1, got {k}")));
    }
    let ThreeBallRadii { r1, r2, r3 } = radii;
    let alpha0 = (r3 / (2.0 * r2)).ln();
    let beta0 = cbar * cbar * (2.0 * r2 / r1).ln();
    let theta = beta0 / (alpha0 + beta0);
    let degenerate = h.iter().any(|v| !(*v > 0.0));
    let base = theta * h[2].ln() + (1.0 - theta) * h[0].ln() - h[1].ln();
    let slack = |c: f64, c2: f64| base + c2 * k.sqrt() * alpha0 + c;
    let steps = (CONSTANT_GRID_MAX / CONSTANT_GRID_STEP).round() as usize;
    let mut fit = None;
    'sums: for total in 0..=2 * steps {
        for i in total.saturating_sub(steps)..=total.min(steps) {
            let (c, c2) = (i as f64 * CONSTANT_GRID_STEP, (total - i) as f64 * CONSTANT_GRID_STEP);
            if slack(c, c2) >= 0.0 {
                fit = Some((c, c2));
                break 'sums;
            }
        }
    }
    let status = if degenerate {
        CheckStatus::Inconclusive
    } else {
        CheckStatus::from_bool(fit.is_some())
    };
    Ok(ThreeBallReport {
        radii,
        k,
        cbar,
        h,
        alpha0,
        beta0,
        theta,
        slack_at_zero: slack(0.0, 0.0),
        c_fit: fit.map(|f| f.0),
        c2_fit: fit.map(|f| f.1),
        status,
    })
}

/// Computes `h` at the three radii by quadrature and evaluates the inequality.
pub fn three_ball_slack(
    u: &dyn ScalarField,
    a: &dyn CoefficientField,
    radii: ThreeBallRadii,
    k: f64,
    cbar: f64,
    quad: QuadConfig,
) -> Result<ThreeBallReport> {
    let sums = ProfileSums::compute(u, a, &Potential::zero(a.dims()), &[radii.r1, radii.r2, radii.r3], &[], quad)?;
    let h = [sums.h(0).value, sums.h(1).value, sums.h(2).value];
    three_ball_from_h(radii, h, k, cbar)
}
