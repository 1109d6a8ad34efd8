//! Fitted constants and per-radius inequalities on a radial profile.

use serde::Serialize;

use super::{adjusted_frequency, RadialProfile};
use crate::check::CheckStatus;

/// Constants are searched on `{0, STEP, ..., MAX}`.
pub const CONSTANT_GRID_STEP: f64 = 0.1;
pub const CONSTANT_GRID_MAX: f64 = 20.0;

/// A sequence counts as nondecreasing when each step is at least
/// `-MONOTONE_TOLERANCE` times the current value.
pub const MONOTONE_TOLERANCE: f64 = 1e-3;

fn grid(lo: f64) -> Vec<f64> {
    let n = ((CONSTANT_GRID_MAX - lo) / CONSTANT_GRID_STEP).round() as usize;
    (0..=n).map(|i| lo + i as f64 * CONSTANT_GRID_STEP).collect()
}

/// Grid pairs ordered by sum, ties broken by the smaller first entry.
fn ordered_pairs(first_lo: f64) -> Vec<(f64, f64)> {
    let a = grid(first_lo);
    let b = grid(0.0);
    let mut pairs: Vec<(usize, usize)> = (0..a.len()).flat_map(|i| (0..b.len()).map(move |j| (i, j))).collect();
    pairs.sort_by_key(|&(i, j)| (i + j, i));
    pairs.into_iter().map(|(i, j)| (a[i], b[j])).collect()
}

/// Index pairs (i, i+1) where the sequence drops by more than the tolerance.
fn decreases(vals: &[f64]) -> Vec<usize> {
    vals.windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] - w[0] < -MONOTONE_TOLERANCE * w[0].abs())
        .map(|(i, _)| i)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonotonicityReport {
    /// Smallest grid constants making the adjusted frequency nondecreasing.
    pub c1_fit: Option<f64>,
    pub c2_fit: Option<f64>,
    /// `max_i (N(r_i) - N(r_{i+1}))` with no adjustment.
    pub max_violation: f64,
    /// The same, divided by `N(r_i)`.
    pub max_relative_violation: f64,
    /// Radius pairs that still decrease at the largest grid constants.
    pub witnesses: Vec<(f64, f64)>,
    pub status: CheckStatus,
}

/// Smallest `(c1, c2)` with `r -> e^(c1 r) (N(r) + c2 K r^2)` nondecreasing.
pub fn monotonicity_fit(profile: &RadialProfile) -> MonotonicityReport {
    let rows = &profile.rows;
    let n: Vec<f64> = rows.iter().map(|r| r.frequency).collect();
    let max_violation = n.windows(2).map(|w| w[0] - w[1]).fold(f64::NEG_INFINITY, f64::max);
    let max_relative_violation = n
        .windows(2)
        .map(|w| (w[0] - w[1]) / w[0].abs())
        .fold(f64::NEG_INFINITY, f64::max);
    let adjusted = |c1: f64, c2: f64| -> Vec<f64> {
        rows.iter()
            .map(|r| adjusted_frequency(r.frequency, r.r, c1, c2, profile.k))
            .collect()
    };
    let degenerate = rows.iter().any(|r| r.flags.degenerate) || n.iter().any(|v| !v.is_finite());
    if !degenerate {
        for (c1, c2) in ordered_pairs(0.0) {
            if decreases(&adjusted(c1, c2)).is_empty() {
                return MonotonicityReport {
                    c1_fit: Some(c1),
                    c2_fit: Some(c2),
                    max_violation,
                    max_relative_violation,
                    witnesses: Vec::new(),
                    status: CheckStatus::Pass,
                };
            }
        }
    }
    let last = adjusted(CONSTANT_GRID_MAX, CONSTANT_GRID_MAX);
    let witnesses = decreases(&last).into_iter().map(|i| (rows[i].r, rows[i + 1].r)).collect();
    MonotonicityReport {
        c1_fit: None,
        c2_fit: None,
        max_violation,
        max_relative_violation,
        witnesses,
        status: if degenerate {
            CheckStatus::Inconclusive
        } else {
            CheckStatus::Fail
        },
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonReport {
    /// Smallest grid pair with `N(r) <= cbar (N(s) + c2 K)` for all r < s.
    pub cbar: Option<f64>,
    pub c2: Option<f64>,
    pub status: CheckStatus,
}

/// Fits `cbar >= 1` and `c2 >= 0` in the comparison `N(r) <= cbar (N(s) + c2 K)`.
pub fn comparison_fit(profile: &RadialProfile) -> ComparisonReport {
    let n: Vec<f64> = profile.rows.iter().map(|r| r.frequency).collect();
    let k = profile.k;
    let holds = |cbar: f64, c2: f64| {
        (0..n.len()).all(|i| {
            ((i + 1)..n.len()).all(|j| n[i] <= cbar * (n[j] + c2 * k) + MONOTONE_TOLERANCE * n[i].abs())
        })
    };
    if n.iter().all(|v| v.is_finite()) {
        for (cbar, c2) in ordered_pairs(1.0) {
            if holds(cbar, c2) {
                return ComparisonReport {
                    cbar: Some(cbar),
                    c2: Some(c2),
                    status: CheckStatus::Pass,
                };
            }
        }
    }
    ComparisonReport {
        cbar: None,
        c2: None,
        status: CheckStatus::Fail,
    }
}

/// A per-radius inequality evaluated along a profile.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProfileCheck {
    pub name: String,
    /// Largest amount by which the inequality is violated (negative when it
    /// holds everywhere with room to spare).
    pub max_violation: f64,
    pub tolerance: f64,
    /// Radii where the violation exceeds the tolerance.
    pub witnesses: Vec<f64>,
    pub status: CheckStatus,
}

impl ProfileCheck {
    fn from_violations(name: &str, radii: &[f64], violations: &[f64], tolerance: f64) -> Self {
        let max_violation = violations.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let witnesses: Vec<f64> = radii
            .iter()
            .zip(violations)
            .filter(|(_, v)| !(**v <= tolerance))
            .map(|(r, _)| *r)
            .collect();
        ProfileCheck {
            name: name.into(),
            max_violation,
            tolerance,
            status: CheckStatus::from_bool(witnesses.is_empty()),
            witnesses,
        }
    }
}

/// `I^2 <= 4 (alpha+1)^2 H int (Fu)^2 w^alpha mu` with I in flux form, to
/// absolute slack 1e-9. On the pooled point set this is the discrete
/// Cauchy-Schwarz inequality, so it holds for any u.
pub fn cauchy_schwarz_check(profile: &RadialProfile) -> ProfileCheck {
    let c = 4.0 * (profile.alpha + 1.0).powi(2);
    let radii = profile.radii();
    let v: Vec<f64> = profile
        .rows
        .iter()
        .map(|r| r.flux * r.flux - c * r.height * r.fu_squared)
        .collect();
    ProfileCheck::from_violations("cauchy-schwarz", &radii, &v, 1e-9)
}

/// `log H(r) - (2 alpha + Q) log r` nondecreasing to slack 1e-3. Exact for
/// V = 0 and A = I, where the first variation of H has no error term.
pub fn doubling_check(profile: &RadialProfile) -> ProfileCheck {
    let q = profile.dims.q();
    let g: Vec<f64> = profile
        .rows
        .iter()
        .map(|r| r.height.ln() - (2.0 * profile.alpha + q) * r.r.ln())
        .collect();
    let drops: Vec<f64> = g.windows(2).map(|w| w[0] - w[1]).collect();
    let radii: Vec<f64> = profile.rows.iter().skip(1).map(|r| r.r).collect();
    ProfileCheck::from_violations("doubling", &radii, &drops, 1e-3)
}

/// `h(r) <= omega r^Q sup|u|^2 / lambda`, relative to the right-hand side.
/// The quadrature error of h is allowed for (three standard errors).
pub fn h_sup_check(profile: &RadialProfile) -> ProfileCheck {
    let q = profile.dims.q();
    let radii = profile.radii();
    let v: Vec<f64> = profile
        .rows
        .iter()
        .map(|r| {
            let bound = profile.omega * r.r.powf(q) * r.sup_u * r.sup_u / profile.lambda;
            (r.h - 3.0 * r.h_err - bound) / bound.max(f64::MIN_POSITIVE)
        })
        .collect();
    ProfileCheck::from_violations("h-sup", &radii, &v, 1e-9)
}
