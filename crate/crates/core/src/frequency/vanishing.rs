//! Order of vanishing at the origin from `sup_{B_r} |u|` on small balls, and
//! the lower bound `sup_{B_r} |u| >= C1 (r / R1)^(C2 sqrt K)`.

use serde::Serialize;

use super::geometric_radii;
use crate::check::CheckStatus;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::quadrature::sup_on_ball;

/// Step of the grid for C2.
const EXPONENT_STEP: f64 = 0.01;
const EXPONENT_MAX: f64 = 20.0;
/// Sup values below this are treated as numerically zero.
const NOISE_FLOOR: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VanishingReport {
    pub radii: Vec<f64>,
    pub sups: Vec<f64>,
    /// Least-squares slope of log sup vs log r over the smallest decade.
    pub slope: Option<f64>,
    pub fit_points: usize,
    /// `sup_{B_R1} |u|`, the normalization of the bound.
    pub c1: f64,
    /// Smallest exponent for which the bound holds at every sampled radius.
    pub data_exponent: Option<f64>,
    pub c2_fit: Option<f64>,
    /// `C2 sqrt K`.
    pub exponent: Option<f64>,
    pub dominates: bool,
    pub flagged: bool,
    pub status: CheckStatus,
}

/// `n` radii from `r1 / 300` to `r1 / 3`, equally spaced in log r.
pub fn default_vanishing_radii(r1: f64, n: usize) -> Result<Vec<f64>> {
    geometric_radii(r1 / 300.0, r1 / 3.0, n)
}

fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Fits the vanishing order and the smallest `C2` on a 0.01 grid such that
/// the bound, normalized by `C1 = sup_{B_R1} |u|`, holds at every sampled
/// radius and its exponent is at least the measured slope (the bound has to
/// survive r -> 0, where the slope governs).
pub fn vanishing_order(
    u: &dyn ScalarField,
    radii: &[f64],
    r1: f64,
    k: f64,
    samples: usize,
    seed: u64,
) -> Result<VanishingReport> {
    if !(r1 > 0.0 && r1 <= 1.0) {
        return Err(Error::invalid(format!("working radius must lie in (0, 1], got {r1}")));
    }
    if !(k >= 1.0) {
        return Err(Error::invalid(format!("potential constant must be >= 1, got {k}")));
    }
    if radii.len() < 2 || radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("need at least two increasing radii"));
    }
    if !(radii[0] > 0.0 && radii[radii.len() - 1] <= r1 / 3.0 * (1.0 + 1e-12)) {
        return Err(Error::invalid(format!("radii must lie in (0, {}]", r1 / 3.0)));
    }
    let sups = radii
        .iter()
        .map(|&r| sup_on_ball(u, r, samples, seed))
        .collect::<Result<Vec<f64>>>()?;
    let c1 = sup_on_ball(u, r1, samples, seed)?;
    let flagged = !(c1 > NOISE_FLOOR) || sups.iter().any(|s| !(*s > NOISE_FLOOR));
    let mut report = VanishingReport {
        radii: radii.to_vec(),
        sups: sups.clone(),
        slope: None,
        fit_points: 0,
        c1,
        data_exponent: None,
        c2_fit: None,
        exponent: None,
        dominates: false,
        flagged,
        status: CheckStatus::Inconclusive,
    };
    if flagged {
        return Ok(report);
    }
    let cut = radii[0] * 10.0 * (1.0 + 1e-9);
    let (lx, ly): (Vec<f64>, Vec<f64>) = radii
        .iter()
        .zip(&sups)
        .filter(|(r, _)| **r <= cut)
        .map(|(r, s)| (r.ln(), s.ln()))
        .unzip();
    if lx.len() < 2 {
        return Ok(report);
    }
    let slope = ls_slope(&lx, &ly);
    let data_exponent = radii
        .iter()
        .zip(&sups)
        .map(|(r, s)| (s / c1).ln() / (r / r1).ln())
        .fold(0.0, f64::max);
    let needed = data_exponent.max(slope);
    let steps = (EXPONENT_MAX / EXPONENT_STEP).round() as usize;
    let c2 = (0..=steps)
        .map(|i| i as f64 * EXPONENT_STEP)
        .find(|c2| c2 * k.sqrt() >= needed);
    report.slope = Some(slope);
    report.fit_points = lx.len();
    report.data_exponent = Some(data_exponent);
    report.c2_fit = c2;
    report.exponent = c2.map(|c| c * k.sqrt());
    report.dominates = report.exponent.is_some_and(|e| e >= slope);
    report.status = CheckStatus::from_bool(c2.is_some());
    Ok(report)
}
