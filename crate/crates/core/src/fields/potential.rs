//! Zero-order potentials `V` and sampled certification of the bounds
//! `|V| <= K psi`, `|F V| <= K psi`.

use std::sync::Arc;

use serde::Serialize;

use super::coefficient::{f_apply, CoefficientField};
use crate::check::{decade_scan, refined_maxima, CheckStatus, DecadeScan, SampledMax};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{angle_gradient, angle_psi_or_zero, gauge, gauge_gradient, Dims, Point};
use crate::linalg::VecN;

#[derive(Clone)]
enum Source {
    Zero,
    /// `(rho^2 - shift) psi`.
    AngleQuadratic { shift: f64 },
    Field(Arc<dyn ScalarField>),
}

#[derive(Clone)]
pub struct Potential {
    dims: Dims,
    source: Source,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ClosedForm,
    Estimated,
}

impl std::fmt::Debug for Potential {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Potential({})", self.name())
    }
}

impl Potential {
    pub fn zero(dims: Dims) -> Self {
        Potential { dims, source: Source::Zero }
    }

    /// `V = (rho^2 - shift) psi`. With `shift = Q` this is the potential of the
    /// Gaussian `exp(-rho^2/2)` for the identity operator; `shift = Q + 2 kappa`
    /// serves a degree-kappa homogeneous solution times that Gaussian.
    pub fn angle_quadratic(dims: Dims, shift: f64) -> Self {
        Potential {
            dims,
            source: Source::AngleQuadratic { shift },
        }
    }

    pub fn from_field(field: Arc<dyn ScalarField>) -> Self {
        Potential {
            dims: field.dims(),
            source: Source::Field(field),
        }
    }

    pub fn name(&self) -> String {
        match &self.source {
            Source::Zero => "zero".into(),
            Source::AngleQuadratic { shift } => format!("angle-quadratic(shift={shift})"),
            Source::Field(_) => "field".into(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.source, Source::Zero)
    }

    /// K in closed form on B_r, available for the built-in potentials under the
    /// identity operator (where F = Z and `Z V = 2 rho^2 psi` for the
    /// angle-quadratic family).
    pub fn closed_form_k(&self, a: &dyn CoefficientField, r: f64) -> Option<f64> {
        match self.source {
            Source::Zero => Some(1.0),
            Source::AngleQuadratic { shift } if a.is_identity() => {
                let r2 = r * r;
                // |rho^2 - shift| is convex in rho^2, so its max is at an endpoint
                Some(1f64.max(shift.abs()).max((r2 - shift).abs()).max(2.0 * r2))
            }
            _ => None,
        }
    }
}

impl ScalarField for Potential {
    fn dims(&self) -> Dims {
        self.dims
    }

    fn value(&self, p: &Point) -> Result<f64> {
        match &self.source {
            Source::Zero => Ok(0.0),
            Source::AngleQuadratic { shift } => {
                let rho = gauge(p, &self.dims);
                Ok((rho * rho - shift) * angle_psi_or_zero(p, &self.dims))
            }
            Source::Field(f) => f.value(p),
        }
    }

    fn gradient(&self, p: &Point) -> Result<VecN> {
        match &self.source {
            Source::Zero => Ok(VecN::zeros(self.dims.n())),
            Source::AngleQuadratic { shift } => {
                let d = &self.dims;
                let rho = gauge(p, d);
                if rho == 0.0 {
                    return Ok(VecN::zeros(d.n()));
                }
                let psi = angle_psi_or_zero(p, d);
                let grho = gauge_gradient(p, d)?;
                let gpsi = angle_gradient(p, d)?;
                let mut g = gpsi.scaled(rho * rho - shift);
                for a in 0..d.n() {
                    g[a] += 2.0 * rho * psi * grho[a];
                }
                Ok(g)
            }
            Source::Field(f) => f.gradient(p),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PotentialReport {
    pub potential: String,
    pub family: String,
    pub radius: f64,
    /// `max(1, sup |V|/psi, sup |FV|/psi)` over the finest sample.
    pub k_hat: f64,
    pub provenance: Provenance,
    pub closed_form_k: Option<f64>,
    pub value_ratio: SampledMax,
    pub flux_ratio: SampledMax,
    pub level_sizes: [usize; 3],
    pub level_k: [f64; 3],
    pub points: usize,
    pub decade_scan: DecadeScan,
    pub status: CheckStatus,
}

/// The ratios `|V|/psi` and `|FV|/psi` at p.
pub fn potential_ratios(v: &Potential, a: &dyn CoefficientField, p: &Point) -> Result<[f64; 2]> {
    let psi = angle_psi_or_zero(p, &a.dims());
    if psi == 0.0 {
        return Err(Error::domain("potential ratio on the characteristic set"));
    }
    let val = v.value(p)?;
    let fv = f_apply(a, v, p)?;
    Ok([val.abs() / psi, fv.abs() / psi])
}

pub fn check_potential(
    v: &Potential,
    a: &dyn CoefficientField,
    radius: f64,
    n: usize,
    seed: u64,
) -> Result<PotentialReport> {
    let d = a.dims();
    if v.dims() != d {
        return Err(Error::invalid("potential and coefficient dimensions differ"));
    }
    let maxima = refined_maxima::<2, _>(radius, n, seed, &d, |p| potential_ratios(v, a, p))?;
    let k_of = |l: &[f64; 2]| 1f64.max(l[0]).max(l[1]);
    let level_k = [
        k_of(&maxima.per_level[0]),
        k_of(&maxima.per_level[1]),
        k_of(&maxima.per_level[2]),
    ];
    let k_hat = level_k[2];
    let scan = decade_scan(0.5 * radius, &d, |p| {
        let r = potential_ratios(v, a, p)?;
        Ok(r[0].max(r[1]))
    })?;
    let closed = v.closed_form_k(a, radius);
    let stable = crate::check::relative_change(level_k[1], level_k[2]) <= crate::check::STABILITY;
    let exceeds_closed = closed.is_some_and(|k| k_hat > k * (1.0 + 1e-9));
    let status = if scan.diverges || !k_hat.is_finite() || exceeds_closed {
        CheckStatus::Fail
    } else if !stable {
        CheckStatus::Inconclusive
    } else {
        CheckStatus::Pass
    };
    let [value_ratio, flux_ratio] = maxima.finest.clone();
    Ok(PotentialReport {
        potential: v.name(),
        family: a.name(),
        radius,
        k_hat,
        provenance: if closed.is_some() {
            Provenance::ClosedForm
        } else {
            Provenance::Estimated
        },
        closed_form_k: closed,
        value_ratio,
        flux_ratio,
        level_sizes: maxima.level_sizes,
        level_k,
        points: maxima.points,
        decade_scan: scan,
        status,
    })
}
