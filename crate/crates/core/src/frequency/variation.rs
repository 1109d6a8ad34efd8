//! Numerical check of the first-variation formulas for H and I.
//!
//! I is taken in flux form throughout. It equals the energy form on
//! solutions and is integrated with the same weights as H and
//! `int (Fu)^2 w^alpha mu`, so quadrature error largely cancels in the
//! residuals; agreement of the two forms is checked separately.

use serde::Serialize;

use super::RadialProfile;
use crate::error::{Error, Result};

/// Five-point differences need two radii on each side.
pub const MIN_RADII: usize = 9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VariationRow {
    pub r: f64,
    /// `H' - (2 alpha + Q) H / r - I / ((alpha+1) r)`.
    pub res_h: f64,
    /// `I' - (2 alpha + Q) I / r - 4 (alpha+1) / r int (Fu)^2 w^alpha mu`.
    pub res_i: f64,
    pub rel_h: f64,
    pub rel_i: f64,
    /// Three standard errors of `res_h / H` over quadrature replicates.
    pub noise_h: f64,
    /// The same for `res_i / I`.
    pub noise_i: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VariationReport {
    pub alpha: f64,
    pub rows: Vec<VariationRow>,
    pub max_rel_h: f64,
    pub max_rel_i: f64,
    /// Smallest c with `|res_H| <= c H` at every row.
    pub h_constant: f64,
    /// Smallest c with `|res_I| <= c (I + K r H)` at every row.
    pub i_constant: f64,
    /// Some row has quadrature noise above 1e-2 relative in a residual.
    pub noisy: bool,
}

fn log_step(radii: &[f64]) -> Result<f64> {
    let steps: Vec<f64> = radii.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    let s = steps[0];
    if steps.iter().any(|x| (x - s).abs() > 1e-9 * s.abs()) {
        return Err(Error::invalid("variation residuals need a geometric radius grid"));
    }
    Ok(s)
}

/// d/dr of `f` at interior index i from five points equally spaced in log r.
fn derivative(f: &[f64], radii: &[f64], i: usize, ds: f64) -> f64 {
    let d = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * ds);
    d / radii[i]
}

/// Residuals of the first-variation identities at every interior radius.
pub fn variation_residuals(profile: &RadialProfile) -> Result<VariationReport> {
    let n = profile.rows.len();
    if n < MIN_RADII {
        return Err(Error::invalid(format!(
            "need at least {MIN_RADII} radii for stable differences, got {n}"
        )));
    }
    let radii = profile.radii();
    let ds = log_step(&radii)?;
    let alpha = profile.alpha;
    let q = profile.dims.q();
    let column = |f: &dyn Fn(&super::ProfileRow) -> f64| -> Vec<f64> { profile.rows.iter().map(f).collect() };
    let residuals = |hs: &[f64], is: &[f64], gs: &[f64], i: usize| -> (f64, f64) {
        let r = radii[i];
        let dh = derivative(hs, &radii, i, ds);
        let di = derivative(is, &radii, i, ds);
        let res_h = dh - (2.0 * alpha + q) * hs[i] / r - is[i] / ((alpha + 1.0) * r);
        let res_i = di - (2.0 * alpha + q) * is[i] / r - 4.0 * (alpha + 1.0) / r * gs[i];
        (res_h, res_i)
    };
    let hs = column(&|r| r.height);
    let is = column(&|r| r.flux);
    let gs = column(&|r| r.fu_squared);
    let reps = profile.rows[0].replicates.height.len();
    let per_rep: Vec<[Vec<f64>; 3]> = (0..reps)
        .map(|k| {
            [
                column(&|r| r.replicates.height[k]),
                column(&|r| r.replicates.flux[k]),
                column(&|r| r.replicates.fu_squared[k]),
            ]
        })
        .collect();
    let mut rows = Vec::new();
    for i in 2..n - 2 {
        let (res_h, res_i) = residuals(&hs, &is, &gs, i);
        let rep: Vec<(f64, f64)> = per_rep.iter().map(|c| residuals(&c[0], &c[1], &c[2], i)).collect();
        let spread = |vals: Vec<f64>| -> f64 {
            if vals.len() < 2 {
                return f64::INFINITY;
            }
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (vals.len() - 1) as f64;
            (var / vals.len() as f64).sqrt()
        };
        let err_h = spread(rep.iter().map(|x| x.0).collect());
        let err_i = spread(rep.iter().map(|x| x.1).collect());
        rows.push(VariationRow {
            r: radii[i],
            res_h,
            res_i,
            rel_h: (res_h / hs[i]).abs(),
            rel_i: (res_i / is[i]).abs(),
            noise_h: 3.0 * err_h / hs[i].abs(),
            noise_i: 3.0 * err_i / is[i].abs(),
        });
    }
    let max = |f: &dyn Fn(&VariationRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    let i_constant = rows
        .iter()
        .zip(&profile.rows[2..n - 2])
        .map(|(v, p)| v.res_i.abs() / (p.flux.abs() + profile.k * p.r * p.height))
        .fold(0.0, f64::max);
    Ok(VariationReport {
        alpha,
        max_rel_h: max(&|v| v.rel_h),
        max_rel_i: max(&|v| v.rel_i),
        h_constant: max(&|v| v.rel_h),
        i_constant,
        noisy: rows.iter().any(|v| v.noise_h > 1e-2 || v.noise_i > 1e-2),
        rows,
    })
}
