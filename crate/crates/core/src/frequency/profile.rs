//! Height, energy and frequency on a family of gauge balls.
//!
//! Every radius is evaluated on the same randomized point set of B_1 pulled
//! forward by the dilation, so the profile is a smooth function of r and
//! identities between the integrals hold replicate by replicate.

use serde::Serialize;

use super::FrequencyConfig;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::fields::{f_vector, CoefficientField, Potential};
use crate::geometry::{angle_psi, dilate_unchecked, gauge, horizontal, Dims, Frame};
use crate::quadrature::{sup_on_ball, BallRule, QuadConfig, QuadResult, Replicated};

/// Slots per radius that do not depend on alpha: `int u^2 mu`, `int mu`.
const PER_RADIUS: usize = 2;
/// Slots per (radius, alpha): H, I (energy form), I (flux form), `int (Fu)^2 w mu`.
const PER_ALPHA: usize = 4;

/// Replicate sums of every profile integral, already scaled to B_r.
#[derive(Clone, Debug)]
pub struct ProfileSums {
    dims: Dims,
    radii: Vec<f64>,
    alphas: Vec<f64>,
    rep: Replicated,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    Height,
    Energy,
    Flux,
    FuSquared,
}

impl ProfileSums {
    /// Evaluates all integrals for all radii and exponents in one pass.
    pub fn compute(
        u: &dyn ScalarField,
        a: &dyn CoefficientField,
        v: &Potential,
        radii: &[f64],
        alphas: &[f64],
        quad: QuadConfig,
    ) -> Result<Self> {
        let d = a.dims();
        if u.dims() != d || v.dims() != d {
            return Err(Error::invalid("solution, coefficients and potential disagree on dimensions"));
        }
        for &r in radii {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::invalid(format!("radius must be positive, got {r}")));
            }
        }
        for &al in alphas {
            if !(al >= 0.0 && al.is_finite()) {
                return Err(Error::invalid(format!("weight exponent must be >= 0, got {al}")));
            }
        }
        let rule = BallRule::new(d, quad)?;
        let stride = PER_RADIUS + PER_ALPHA * alphas.len();
        let len = radii.len() * stride + 1;
        let q = d.q();
        let scales: Vec<(f64, Vec<f64>)> = radii
            .iter()
            .map(|&r| (r.powf(q), alphas.iter().map(|&al| r.powf(q + 2.0 * al)).collect()))
            .collect();
        let rep = rule.integrate(len, |y, out| {
            let w = 1.0 - gauge(y, &d).powi(2);
            let wpow: Vec<f64> = alphas.iter().map(|&al| w.powf(al)).collect();
            out[len - 1] += angle_psi(y, &d)?;
            for (ri, &r) in radii.iter().enumerate() {
                let x = dilate_unchecked(y, r, &d);
                let uv = u.value(&x)?;
                let grad = u.gradient(&x)?;
                let am = a.matrix(&x);
                let mu = am.quad_form(&Frame::new(&x, &d)?.xrho);
                let xu = horizontal(&grad, &x, &d).0;
                let energy = am.quad_form(&xu) + v.value(&x)? * uv * uv;
                let fu = f_vector(a, &x)?.dot(&grad);
                let (sq, sa) = &scales[ri];
                let base = ri * stride;
                out[base] += sq * uv * uv * mu;
                out[base + 1] += sq * mu;
                for (ai, &al) in alphas.iter().enumerate() {
                    let s = sa[ai];
                    let wm = s * wpow[ai] * mu;
                    let o = base + PER_RADIUS + PER_ALPHA * ai;
                    out[o] += wm * uv * uv;
                    out[o + 1] += s * r * r * wpow[ai] * w * energy;
                    out[o + 2] += 2.0 * (al + 1.0) * wm * uv * fu;
                    out[o + 3] += wm * fu * fu;
                }
            }
            Ok(())
        })?;
        Ok(ProfileSums {
            dims: d,
            radii: radii.to_vec(),
            alphas: alphas.to_vec(),
            rep,
        })
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    fn stride(&self) -> usize {
        PER_RADIUS + PER_ALPHA * self.alphas.len()
    }

    fn slot(&self, ri: usize, ai: usize, s: Slot) -> usize {
        let off = match s {
            Slot::Height => 0,
            Slot::Energy => 1,
            Slot::Flux => 2,
            Slot::FuSquared => 3,
        };
        ri * self.stride() + PER_RADIUS + PER_ALPHA * ai + off
    }

    /// `H(r) = int_{B_r} u^2 (r^2 - rho^2)^alpha mu`.
    pub fn height(&self, ri: usize, ai: usize) -> QuadResult {
        self.rep.result(self.slot(ri, ai, Slot::Height))
    }

    /// `int_{B_r} (<A Xu, Xu> + V u^2) (r^2 - rho^2)^(alpha+1)`.
    pub fn energy(&self, ri: usize, ai: usize) -> QuadResult {
        self.rep.result(self.slot(ri, ai, Slot::Energy))
    }

    /// `2 (alpha+1) int_{B_r} u Fu (r^2 - rho^2)^alpha mu`.
    pub fn flux(&self, ri: usize, ai: usize) -> QuadResult {
        self.rep.result(self.slot(ri, ai, Slot::Flux))
    }

    /// `int_{B_r} (Fu)^2 (r^2 - rho^2)^alpha mu`.
    pub fn fu_squared(&self, ri: usize, ai: usize) -> QuadResult {
        self.rep.result(self.slot(ri, ai, Slot::FuSquared))
    }

    fn replicate_values(&self, i: usize) -> Vec<f64> {
        self.rep.replicates.iter().map(|r| r[i]).collect()
    }

    /// Per-replicate values of H, I (flux form) and `int (Fu)^2 w^alpha mu`.
    pub fn replicate_columns(&self, ri: usize, ai: usize) -> ReplicateColumns {
        ReplicateColumns {
            height: self.replicate_values(self.slot(ri, ai, Slot::Height)),
            flux: self.replicate_values(self.slot(ri, ai, Slot::Flux)),
            fu_squared: self.replicate_values(self.slot(ri, ai, Slot::FuSquared)),
        }
    }

    /// Standard error of the replicate-wise difference energy - flux.
    pub fn energy_flux_err(&self, ri: usize, ai: usize) -> f64 {
        let (e, f) = (self.slot(ri, ai, Slot::Energy), self.slot(ri, ai, Slot::Flux));
        self.rep.statistic(|r| r[e] - r[f]).err_est
    }

    /// `h(r) = int_{B_r} u^2 mu`.
    pub fn h(&self, ri: usize) -> QuadResult {
        self.rep.result(ri * self.stride())
    }

    /// `int_{B_r} mu`.
    pub fn mu_mass(&self, ri: usize) -> QuadResult {
        self.rep.result(ri * self.stride() + 1)
    }

    /// `omega = int_{B_1} psi` on the same point set.
    pub fn omega(&self) -> QuadResult {
        self.rep.result(self.rep.len() - 1)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }
}

/// Per-row diagnostics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RowFlags {
    /// H at or below its quadrature noise.
    pub degenerate: bool,
    /// `|I_energy - I_flux|` above three standard errors of the difference.
    pub flux_mismatch: bool,
    pub inconclusive: bool,
}

impl RowFlags {
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.degenerate {
            parts.push("degenerate");
        }
        if self.flux_mismatch {
            parts.push("flux_mismatch");
        }
        if self.inconclusive {
            parts.push("inconclusive");
        }
        if parts.is_empty() {
            "ok".into()
        } else {
            parts.join("+")
        }
    }

    pub fn any(&self) -> bool {
        self.degenerate || self.flux_mismatch || self.inconclusive
    }
}

/// Replicate values kept for error propagation through derived quantities.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReplicateColumns {
    pub height: Vec<f64>,
    pub flux: Vec<f64>,
    pub fu_squared: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProfileRow {
    pub r: f64,
    pub height: f64,
    pub height_err: f64,
    pub energy: f64,
    pub flux: f64,
    /// Standard error of `energy - flux`.
    pub energy_flux_err: f64,
    /// `energy / height`.
    pub frequency: f64,
    /// `e^(c1 r) (N + c2 K r^2)`.
    pub adjusted: f64,
    pub h: f64,
    pub h_err: f64,
    pub sup_u: f64,
    pub fu_squared: f64,
    pub mu_mass: f64,
    pub flags: RowFlags,
    #[serde(skip)]
    pub replicates: ReplicateColumns,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadialProfile {
    pub alpha: f64,
    pub k: f64,
    pub r1: f64,
    pub dims: Dims,
    /// Adjustment constants used for the `adjusted` column.
    pub c1: f64,
    pub c2: f64,
    pub omega: f64,
    pub lambda: f64,
    pub rows: Vec<ProfileRow>,
}

pub const CSV_HEADER: &str = "r,H,H_err,I_energy,I_flux,I_err,N,N_adjusted,h,sup_u,fu_squared,flag";

impl RadialProfile {
    pub fn radii(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.r).collect()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.frequency).collect()
    }

    /// Recomputes the adjusted column for new constants.
    pub fn with_adjustment(mut self, c1: f64, c2: f64) -> Self {
        self.c1 = c1;
        self.c2 = c2;
        for row in &mut self.rows {
            row.adjusted = adjusted_frequency(row.frequency, row.r, c1, c2, self.k);
        }
        self
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for row in &self.rows {
            let vals = [
                row.r,
                row.height,
                row.height_err,
                row.energy,
                row.flux,
                row.energy_flux_err,
                row.frequency,
                row.adjusted,
                row.h,
                row.sup_u,
                row.fu_squared,
            ];
            for v in vals {
                s.push_str(&format!("{v:.12e},"));
            }
            s.push_str(&row.flags.label());
            s.push('\n');
        }
        s
    }

    pub fn any_flagged(&self) -> bool {
        self.rows.iter().any(|r| r.flags.any())
    }
}

pub fn adjusted_frequency(n: f64, r: f64, c1: f64, c2: f64, k: f64) -> f64 {
    (c1 * r).exp() * (n + c2 * k * r * r)
}

fn is_degenerate(h: &QuadResult) -> bool {
    !(h.value > 0.0 && h.value > 3.0 * h.err_est)
}

/// Rows for one exponent out of precomputed sums.
pub fn profile_from_sums(
    sums: &ProfileSums,
    ai: usize,
    sup_u: &[f64],
    a: &dyn CoefficientField,
    cfg: &FrequencyConfig,
) -> RadialProfile {
    let rows = sums
        .radii()
        .iter()
        .enumerate()
        .map(|(ri, &r)| {
            let hh = sums.height(ri, ai);
            let e = sums.energy(ri, ai);
            let f = sums.flux(ri, ai);
            let ef_err = sums.energy_flux_err(ri, ai);
            let small = sums.h(ri);
            let degenerate = is_degenerate(&hh);
            let n = e.value / hh.value;
            ProfileRow {
                r,
                height: hh.value,
                height_err: hh.err_est,
                energy: e.value,
                flux: f.value,
                energy_flux_err: ef_err,
                frequency: n,
                adjusted: adjusted_frequency(n, r, cfg.c1, cfg.c2, cfg.k),
                h: small.value,
                h_err: small.err_est,
                sup_u: sup_u.get(ri).copied().unwrap_or(f64::NAN),
                fu_squared: sums.fu_squared(ri, ai).value,
                mu_mass: sums.mu_mass(ri).value,
                flags: RowFlags {
                    degenerate,
                    flux_mismatch: (e.value - f.value).abs() > 3.0 * ef_err,
                    inconclusive: hh.inconclusive || small.inconclusive,
                },
                replicates: sums.replicate_columns(ri, ai),
            }
        })
        .collect();
    RadialProfile {
        alpha: sums.alphas()[ai],
        k: cfg.k,
        r1: cfg.r1,
        dims: sums.dims(),
        c1: cfg.c1,
        c2: cfg.c2,
        omega: sums.omega().value,
        lambda: a.lambda(),
        rows,
    }
}

fn sups(u: &dyn ScalarField, radii: &[f64], cfg: &FrequencyConfig) -> Result<Vec<f64>> {
    radii
        .iter()
        .map(|&r| sup_on_ball(u, r, cfg.sup_samples, cfg.quad.seed))
        .collect()
}

/// One profile per exponent in `alphas`, all from a single pass.
pub fn radial_profiles(
    u: &dyn ScalarField,
    a: &dyn CoefficientField,
    v: &Potential,
    cfg: &FrequencyConfig,
    alphas: &[f64],
) -> Result<Vec<RadialProfile>> {
    cfg.validate()?;
    let sums = ProfileSums::compute(u, a, v, &cfg.radii, alphas, cfg.quad)?;
    let sup_u = sups(u, &cfg.radii, cfg)?;
    Ok((0..alphas.len())
        .map(|ai| profile_from_sums(&sums, ai, &sup_u, a, cfg))
        .collect())
}

/// H, I (both forms), N, h and sup|u| at every radius of `cfg`.
pub fn radial_profile(
    u: &dyn ScalarField,
    a: &dyn CoefficientField,
    v: &Potential,
    cfg: &FrequencyConfig,
) -> Result<RadialProfile> {
    Ok(radial_profiles(u, a, v, cfg, &[cfg.alpha])?.remove(0))
}

fn single(
    u: &dyn ScalarField,
    a: &dyn CoefficientField,
    v: &Potential,
    r: f64,
    alpha: f64,
    quad: QuadConfig,
) -> Result<ProfileSums> {
    ProfileSums::compute(u, a, v, &[r], &[alpha], quad)
}

fn propagate(q: QuadResult) -> Result<QuadResult> {
    if q.inconclusive {
        Err(Error::Inconclusive(format!(
            "quadrature error {:e} exceeds tolerance for value {:e}",
            q.err_est, q.value
        )))
    } else {
        Ok(q)
    }
}

/// `H(r)`; an inconclusive quadrature is an error.
pub fn height(u: &dyn ScalarField, a: &dyn CoefficientField, r: f64, alpha: f64, quad: QuadConfig) -> Result<QuadResult> {
    let s = single(u, a, &Potential::zero(a.dims()), r, alpha, quad)?;
    let h = s.height(0, 0);
    if h.value == 0.0 {
        return Ok(h);
    }
    propagate(h)
}

/// `I(r)` in energy form.
pub fn energy(
    u: &dyn ScalarField,
    a: &dyn CoefficientField,
    v: &Potential,
    r: f64,
    alpha: f64,
    quad: QuadConfig,
) -> Result<QuadResult> {
    Ok(single(u, a, v, r, alpha, quad)?.energy(0, 0))
}

/// `I(r)` in flux form.
pub fn flux(u: &dyn ScalarField, a: &dyn CoefficientField, r: f64, alpha: f64, quad: QuadConfig) -> Result<QuadResult> {
    Ok(single(u, a, &Potential::zero(a.dims()), r, alpha, quad)?.flux(0, 0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FrequencyValue {
    pub value: f64,
    pub height: QuadResult,
    pub energy: QuadResult,
    pub flux: QuadResult,
    pub flux_mismatch: bool,
}

/// `N(r) = I(r) / H(r)`.
pub fn frequency(
    u: &dyn ScalarField,
    a: &dyn CoefficientField,
    v: &Potential,
    r: f64,
    alpha: f64,
    quad: QuadConfig,
) -> Result<FrequencyValue> {
    let s = single(u, a, v, r, alpha, quad)?;
    let h = s.height(0, 0);
    if is_degenerate(&h) {
        return Err(Error::Degenerate(format!("H({r}) = {:e} is within quadrature noise", h.value)));
    }
    let e = s.energy(0, 0);
    let f = s.flux(0, 0);
    Ok(FrequencyValue {
        value: e.value / h.value,
        height: h,
        energy: e,
        flux: f,
        flux_mismatch: (e.value - f.value).abs() > 3.0 * s.energy_flux_err(0, 0),
    })
}
