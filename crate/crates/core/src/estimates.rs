//! Sampled pointwise estimates with fitted constants.
//!
//! Each estimate has the form `|lhs(p)| <= C * scale(p)`; the fitted constant
//! is the largest ratio over nested samples of a gauge ball, and a scan toward
//! the characteristic set separates bounded ratios from divergent ones.

use serde::Serialize;

use crate::check::{refined_maxima, relative_change, CheckStatus, DecadeScan, SampledMax, STABILITY};
use crate::error::Result;
use crate::fields::{eval_mu, eval_sigma, f_vector, sigma_over_mu, CoefficientField};
use crate::geometry::{angle_gradient, euler_vector, gauge, Dims, Frame, Point};
use crate::linalg::VecN;

/// Limit on fitted constants for the geometric estimates.
pub const GEOMETRY_LIMIT: f64 = 10.0;

/// Limit on fitted constants for the coefficient-dependent estimates.
pub const FIELD_LIMIT: f64 = 100.0;

#[derive(Clone, Debug, Serialize)]
pub struct FittedEstimate {
    pub name: String,
    pub anchor: String,
    pub constant: f64,
    #[serde(flatten)]
    pub worst: SampledMax,
    pub level_constants: [f64; 3],
    pub points: usize,
    /// `None` for estimates that are reported but not asserted.
    pub limit: Option<f64>,
    pub decade_scan: DecadeScan,
    pub status: CheckStatus,
}

fn finish<const K: usize>(
    names: [(&str, &str, Option<f64>); K],
    radius: f64,
    n: usize,
    seed: u64,
    d: &Dims,
    ratios: impl Fn(&Point) -> Result<[f64; K]> + Sync,
) -> Result<Vec<FittedEstimate>> {
    let maxima = refined_maxima::<K, _>(radius, n, seed, d, &ratios)?;
    let psi: Vec<f64> = (1..=5).map(|e| 10f64.powi(-e)).collect();
    let mut scans: Vec<Vec<f64>> = vec![Vec::new(); K];
    for &s in &psi {
        let p = crate::geometry::point_with_angle(0.5 * radius, s, d)?;
        let r = ratios(&p)?;
        for i in 0..K {
            scans[i].push(r[i]);
        }
    }
    let mut out = Vec::with_capacity(K);
    for (i, (name, anchor, limit)) in names.iter().enumerate() {
        let scan = scan_from(psi.clone(), scans[i].clone());
        let c = maxima.per_level[2][i];
        let stable = relative_change(maxima.per_level[1][i], c) <= STABILITY;
        let status = match limit {
            None => CheckStatus::Pass,
            Some(lim) if scan.diverges || !c.is_finite() || c > *lim => CheckStatus::Fail,
            Some(_) if !stable => CheckStatus::Inconclusive,
            Some(_) => CheckStatus::Pass,
        };
        out.push(FittedEstimate {
            name: name.to_string(),
            anchor: anchor.to_string(),
            constant: c,
            worst: maxima.finest[i].clone(),
            level_constants: [maxima.per_level[0][i], maxima.per_level[1][i], c],
            points: maxima.points,
            limit: *limit,
            decade_scan: scan,
            status,
        });
    }
    Ok(out)
}

fn scan_from(psi: Vec<f64>, ratio: Vec<f64>) -> DecadeScan {
    let growth: Vec<f64> = ratio
        .windows(2)
        .map(|w| if w[0].abs() < 1e-300 { 1.0 } else { w[1].abs() / w[0].abs() })
        .collect();
    let diverges = growth[growth.len() - 2..]
        .iter()
        .all(|&g| g >= crate::check::DIVERGENCE_GROWTH)
        || ratio.iter().any(|v| !v.is_finite());
    DecadeScan {
        psi,
        ratio,
        growth,
        diverges,
    }
}

/// Gauge and angle estimates on B_r:
/// `|X_i rho| <= psi^(1 + 1/(2 beta))`, `|X_{m+j} rho| <= (beta+1) psi^(1/2)`,
/// the unscaled variant `|X_{m+j} rho| <= (beta+1) rho^(1/2)` (reported only),
/// and `|X_i psi| <= C beta psi / |z|`, `|X_{m+j} psi| <= C beta psi / rho`.
pub fn geometry_estimates(d: &Dims, radius: f64, n: usize, seed: u64) -> Result<Vec<FittedEstimate>> {
    let names = [
        ("x-z-gauge", "xz-rho-psi-power", Some(1.0 + 1e-12)),
        ("x-t-gauge", "xt-rho-psi-half", Some(1.0 + 1e-12)),
        ("x-t-gauge-unscaled", "xt-rho-rho-half", None),
        ("x-angle", "x-psi-over-z", Some(GEOMETRY_LIMIT)),
    ];
    let d = *d;
    finish(names, radius, n, seed, &d, move |p| {
        let fr = Frame::new(p, &d)?;
        let beta = d.beta();
        let (m, nn) = (d.m(), d.n());
        let zpow = fr.psi.powf(1.0 + 0.5 / beta);
        let mut r = [0.0f64; 4];
        for i in 0..m {
            r[0] = r[0].max(fr.xrho[i].abs() / zpow);
        }
        for j in m..nn {
            r[1] = r[1].max(fr.xrho[j].abs() / ((beta + 1.0) * fr.psi.sqrt()));
            r[2] = r[2].max(fr.xrho[j].abs() / ((beta + 1.0) * fr.rho.sqrt()));
        }
        let gpsi = angle_gradient(p, &d)?;
        for i in 0..m {
            r[3] = r[3].max(gpsi[i].abs() * fr.z_norm / (beta * fr.psi));
        }
        for j in m..nn {
            r[3] = r[3].max(fr.z_beta * gpsi[j].abs() * fr.rho / (beta * fr.psi));
        }
        Ok(r)
    })
}

/// Per-axis difference steps that stay clear of `z = 0` and scale with the
/// anisotropic dilations.
fn local_steps(p: &Point, d: &Dims) -> VecN {
    let rho = gauge(p, d);
    let mut h = VecN::zeros(d.n());
    for a in 0..d.n() {
        h[a] = if a < d.m() {
            1e-3 * p.z_norm()
        } else {
            1e-3 * rho.powf(d.beta() + 1.0)
        };
    }
    h
}

fn central<F: Fn(&Point) -> Result<f64>>(f: &F, p: &Point, axis: usize, h: f64) -> Result<f64> {
    let at = |s: f64| {
        let mut q = *p;
        q.coords_mut()[axis] += s * h;
        f(&q)
    };
    Ok((at(-2.0)? - 8.0 * at(-1.0)? + 8.0 * at(1.0)? - at(2.0)?) / (12.0 * h))
}

/// Coordinate divergence of F by fourth-order differences.
pub fn divergence_f(a: &dyn CoefficientField, p: &Point) -> Result<f64> {
    let d = a.dims();
    let h = local_steps(p, &d);
    let mut div = 0.0;
    for axis in 0..d.n() {
        div += central(&|q: &Point| Ok(f_vector(a, q)?[axis]), p, axis, h[axis])?;
    }
    Ok(div)
}

/// F mu, with the gradient of mu by fourth-order differences.
pub fn f_of_mu(a: &dyn CoefficientField, p: &Point) -> Result<f64> {
    let d = a.dims();
    let h = local_steps(p, &d);
    let fv = f_vector(a, p)?;
    let mut s = 0.0;
    for axis in 0..d.n() {
        s += fv[axis] * central(&|q: &Point| eval_mu(a, q), p, axis, h[axis])?;
    }
    Ok(s)
}

/// Estimates on F, mu and sigma for one coefficient field on B_r:
/// `|Q - div F| <= C rho`, `|F mu| <= C rho psi`, `|F - Z| <= C rho^2`,
/// `|sigma| <= C rho psi^(3/2 + 1/(2 beta))`, `|sigma / mu| <= C rho psi`.
pub fn field_estimates(
    a: &dyn CoefficientField,
    radius: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<FittedEstimate>> {
    let d = a.dims();
    let lim = Some(FIELD_LIMIT);
    let names = [
        ("divergence-of-f", "q-minus-div-f", lim),
        ("f-of-mu", "f-mu-rho-psi", lim),
        ("f-minus-z", "f-minus-z-rho-squared", lim),
        ("sigma", "sigma-rho-psi-power", lim),
        ("sigma-over-mu", "sigma-over-mu-rho-psi", lim),
    ];
    finish(names, radius, n, seed, &d, |p| {
        let fr = Frame::new(p, &d)?;
        let rho = fr.rho;
        let psi = fr.psi;
        let div = divergence_f(a, p)?;
        let fmu = f_of_mu(a, p)?;
        let fz = f_vector(a, p)?.max_abs_diff(&euler_vector(p, &d));
        let sigma = eval_sigma(a, p)?;
        let ratio = sigma_over_mu(a, p)?;
        Ok([
            (d.q() - div).abs() / rho,
            fmu.abs() / (rho * psi),
            fz / (rho * rho),
            sigma.abs() / (rho * psi.powf(1.5 + 0.5 / d.beta())),
            ratio.abs() / (rho * psi),
        ])
    })
}
