//! Closed-form solutions of `B_beta u = V u` for the identity operator
//! `B_beta = Delta_z + |z|^(2 beta) Delta_t`.

use std::fmt;
use std::str::FromStr;

use super::SolutionField;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::fields::Potential;
use crate::geometry::{gauge, gauge_gradient, Dims, Point};
use crate::linalg::VecN;

#[derive(Clone, Debug, PartialEq)]
pub enum ManufacturedKind {
    /// `u = z_1`.
    CoordinateZ,
    /// `u = t_1`.
    CoordinateT,
    /// `u = Re((z_1 + i z_2)^p)`.
    PlanarHarmonic { degree: u32 },
    /// `u = exp(-rho^2 / 2)`.
    GaussianRadial,
    /// `u = f exp(-rho^2 / 2)` for a homogeneous `f`.
    GaussianModulated(Box<ManufacturedKind>),
}

impl ManufacturedKind {
    fn is_homogeneous(&self) -> bool {
        matches!(
            self,
            ManufacturedKind::CoordinateZ | ManufacturedKind::CoordinateT | ManufacturedKind::PlanarHarmonic { .. }
        )
    }
}

impl fmt::Display for ManufacturedKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ManufacturedKind::CoordinateZ => f.write_str("coordinate_z"),
            ManufacturedKind::CoordinateT => f.write_str("coordinate_t"),
            ManufacturedKind::PlanarHarmonic { degree } => write!(f, "planar_harmonic:{degree}"),
            ManufacturedKind::GaussianRadial => f.write_str("gaussian_radial"),
            ManufacturedKind::GaussianModulated(inner) => write!(f, "gaussian_modulated:{inner}"),
        }
    }
}

impl FromStr for ManufacturedKind {
    type Err = Error;

    /// Parses the names produced by `Display`, e.g. `gaussian_modulated:planar_harmonic:3`.
    /// `z1` and `t1` are accepted for the coordinate kinds.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(inner) = s.strip_prefix("gaussian_modulated:") {
            let inner: ManufacturedKind = inner.parse()?;
            if !inner.is_homogeneous() {
                return Err(Error::Parse(format!("cannot modulate `{inner}` by the Gaussian")));
            }
            return Ok(ManufacturedKind::GaussianModulated(Box::new(inner)));
        }
        if let Some(deg) = s.strip_prefix("planar_harmonic:") {
            let degree: u32 = deg
                .parse()
                .map_err(|_| Error::Parse(format!("bad planar harmonic degree `{deg}`")))?;
            return Ok(ManufacturedKind::PlanarHarmonic { degree });
        }
        match s {
            "coordinate_z" | "z1" => Ok(ManufacturedKind::CoordinateZ),
            "coordinate_t" | "t1" => Ok(ManufacturedKind::CoordinateT),
            "gaussian_radial" => Ok(ManufacturedKind::GaussianRadial),
            _ => Err(Error::Parse(format!("unknown manufactured solution `{s}`"))),
        }
    }
}

/// A manufactured solution with its exact potential.
#[derive(Clone, Debug)]
pub struct Manufactured {
    dims: Dims,
    kind: ManufacturedKind,
}

pub fn manufactured(kind: ManufacturedKind, d: Dims) -> Result<Manufactured> {
    validate(&kind, &d)?;
    Ok(Manufactured { dims: d, kind })
}

fn validate(kind: &ManufacturedKind, d: &Dims) -> Result<()> {
    match kind {
        ManufacturedKind::CoordinateT if d.k() == 0 => Err(Error::invalid("coordinate_t needs k >= 1")),
        ManufacturedKind::PlanarHarmonic { degree } => {
            if d.m() < 2 {
                Err(Error::invalid("planar_harmonic needs m >= 2"))
            } else if *degree == 0 {
                Err(Error::invalid("planar_harmonic degree must be at least 1"))
            } else {
                Ok(())
            }
        }
        ManufacturedKind::GaussianModulated(inner) => {
            if !inner.is_homogeneous() {
                return Err(Error::invalid("only homogeneous factors can be modulated"));
            }
            validate(inner, d)
        }
        _ => Ok(()),
    }
}

/// `(Re w^p, Im w^p)` for `w = x + i y`.
fn complex_pow(x: f64, y: f64, p: u32) -> (f64, f64) {
    let (mut re, mut im) = (1.0, 0.0);
    for _ in 0..p {
        let next = re * x - im * y;
        im = re * y + im * x;
        re = next;
    }
    (re, im)
}

/// Value and coordinate gradient of a homogeneous kind.
fn homogeneous_eval(kind: &ManufacturedKind, p: &Point, d: &Dims) -> (f64, VecN) {
    let mut g = VecN::zeros(d.n());
    match kind {
        ManufacturedKind::CoordinateZ => {
            g[0] = 1.0;
            (p.z()[0], g)
        }
        ManufacturedKind::CoordinateT => {
            g[d.m()] = 1.0;
            (p.t()[0], g)
        }
        ManufacturedKind::PlanarHarmonic { degree } => {
            let (x, y) = (p.z()[0], p.z()[1]);
            let (re, _) = complex_pow(x, y, *degree);
            let (dre, dim) = complex_pow(x, y, degree - 1);
            let k = *degree as f64;
            g[0] = k * dre;
            g[1] = -k * dim;
            (re, g)
        }
        _ => unreachable!("not a homogeneous kind"),
    }
}

/// `exp(-rho^2/2)` and its gradient; the gradient is set to 0 at the origin,
/// where the Gaussian is not differentiable in t for beta >= 1.
fn gaussian_eval(p: &Point, d: &Dims) -> (f64, VecN) {
    let rho = gauge(p, d);
    let g = (-0.5 * rho * rho).exp();
    let grad = match gauge_gradient(p, d) {
        Ok(gr) => gr.scaled(-rho * g),
        Err(_) => VecN::zeros(d.n()),
    };
    (g, grad)
}

impl Manufactured {
    pub fn kind(&self) -> &ManufacturedKind {
        &self.kind
    }

    fn eval(&self, p: &Point) -> (f64, VecN) {
        let d = &self.dims;
        match &self.kind {
            ManufacturedKind::GaussianRadial => gaussian_eval(p, d),
            ManufacturedKind::GaussianModulated(inner) => {
                let (f, gf) = homogeneous_eval(inner, p, d);
                let (g, gg) = gaussian_eval(p, d);
                let mut grad = gf.scaled(g);
                for a in 0..d.n() {
                    grad[a] += f * gg[a];
                }
                (f * g, grad)
            }
            k => homogeneous_eval(k, p, d),
        }
    }

    /// Homogeneity degree of the polynomial factor (0 for the radial Gaussian).
    fn degree(&self) -> f64 {
        let of = |k: &ManufacturedKind| match k {
            ManufacturedKind::CoordinateZ => 1.0,
            ManufacturedKind::CoordinateT => self.dims.beta() + 1.0,
            ManufacturedKind::PlanarHarmonic { degree } => *degree as f64,
            _ => 0.0,
        };
        match &self.kind {
            ManufacturedKind::GaussianModulated(inner) => of(inner),
            k => of(k),
        }
    }

    /// Whether `Z u = kappa u` holds exactly.
    pub fn is_homogeneous(&self) -> bool {
        self.kind.is_homogeneous()
    }
}

impl ScalarField for Manufactured {
    fn dims(&self) -> Dims {
        self.dims
    }

    fn value(&self, p: &Point) -> Result<f64> {
        Ok(self.eval(p).0)
    }

    fn gradient(&self, p: &Point) -> Result<VecN> {
        Ok(self.eval(p).1)
    }
}

impl SolutionField for Manufactured {
    fn name(&self) -> String {
        self.kind.to_string()
    }

    fn kappa(&self) -> Option<f64> {
        Some(self.degree())
    }

    /// Homogeneous kinds solve the equation with V = 0. The Gaussian factor
    /// contributes `(rho^2 - Q) psi`, and the cross term
    /// `2 <X f, X G> = -2 kappa psi f G` shifts it by `2 kappa`.
    fn exact_potential(&self) -> Option<Potential> {
        if self.kind.is_homogeneous() {
            Some(Potential::zero(self.dims))
        } else {
            Some(Potential::angle_quadratic(self.dims, self.dims.q() + 2.0 * self.degree()))
        }
    }

    fn bound_c0(&self, r: f64) -> f64 {
        let d = &self.dims;
        let factor = |k: &ManufacturedKind| match k {
            ManufacturedKind::CoordinateZ => r,
            ManufacturedKind::CoordinateT => d.ball_box(r).1,
            ManufacturedKind::PlanarHarmonic { degree } => r.powi(*degree as i32),
            _ => 1.0,
        };
        // the Gaussian factor is at most 1
        match &self.kind {
            ManufacturedKind::GaussianModulated(inner) => factor(inner),
            k => factor(k),
        }
    }
}

/// Every built-in (u, V) pair at the given dimensions.
pub fn builtin_kinds(d: &Dims) -> Vec<ManufacturedKind> {
    let mut homogeneous = vec![ManufacturedKind::CoordinateZ];
    if d.k() > 0 {
        homogeneous.push(ManufacturedKind::CoordinateT);
    }
    if d.m() >= 2 {
        homogeneous.push(ManufacturedKind::PlanarHarmonic { degree: 3 });
    }
    let mut out = homogeneous.clone();
    out.push(ManufacturedKind::GaussianRadial);
    out.extend(
        homogeneous
            .into_iter()
            .map(|k| ManufacturedKind::GaussianModulated(Box::new(k))),
    );
    out
}
