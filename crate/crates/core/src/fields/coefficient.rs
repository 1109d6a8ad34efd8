//! Coefficient matrices `A = I + B` and the quantities built from them:
//! `mu = <A X rho, X rho>`, `sigma = <B X rho, X rho>` and the radial field
//! `F = (rho / mu) a_ij X_i rho X_j`.

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{euler_vector, Dims, Frame, Point};
use crate::linalg::{MatN, VecN};

/// Below this value of psi, F is evaluated through its decomposition
/// `F = Z - (sigma/mu) Z + (rho/mu) b_ij X_i rho X_j` with the powers of |z|
/// cancelled analytically.
pub const PSI_SWITCH: f64 = 1e-4;

/// A symmetric, uniformly elliptic matrix field.
pub trait CoefficientField: Send + Sync {
    fn dims(&self) -> Dims;

    fn name(&self) -> String;

    /// A(z, t).
    fn matrix(&self, p: &Point) -> MatN;

    /// Entrywise X_l-derivative of A.
    fn xderiv(&self, l: usize, p: &Point) -> MatN {
        let d = self.dims();
        let h = crate::field::fd_step(p, &d);
        let shifted = |s: f64| {
            let mut q = *p;
            q.coords_mut()[l] += s * h;
            self.matrix(&q)
        };
        let (m2, m1, p1, p2) = (shifted(-2.0), shifted(-1.0), shifted(1.0), shifted(2.0));
        let factor = if l < d.m() { 1.0 } else { p.z_norm().powf(d.beta()) };
        let n = d.n();
        let mut out = MatN::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let v = (m2.get(i, j) - 8.0 * m1.get(i, j) + 8.0 * p1.get(i, j) - p2.get(i, j))
                    / (12.0 * h);
                out.set(i, j, factor * v);
            }
        }
        out
    }

    /// Declared ellipticity constant: `lambda |eta|^2 <= <A eta, eta> <= |eta|^2 / lambda`.
    fn lambda(&self) -> f64;

    /// Radius R_1 of the ball on which the structural bounds are asserted.
    fn structural_radius(&self) -> f64 {
        1.0
    }

    fn is_identity(&self) -> bool {
        false
    }

    /// The mixed block `b_ij / |z|^beta` (i <= m < j) with the power of |z|
    /// cancelled in closed form, stored in the upper-right block of the
    /// returned matrix. `None` when the family has no such extension across
    /// the characteristic set.
    fn reduced_mixed_block(&self, _p: &Point) -> Option<MatN> {
        None
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Identity(pub Dims);

impl CoefficientField for Identity {
    fn dims(&self) -> Dims {
        self.0
    }

    fn name(&self) -> String {
        "identity".into()
    }

    fn matrix(&self, _p: &Point) -> MatN {
        MatN::identity(self.0.n())
    }

    fn xderiv(&self, _l: usize, _p: &Point) -> MatN {
        MatN::zeros(self.0.n())
    }

    fn lambda(&self) -> f64 {
        1.0
    }

    fn is_identity(&self) -> bool {
        true
    }

    fn reduced_mixed_block(&self, _p: &Point) -> Option<MatN> {
        Some(MatN::zeros(self.0.n()))
    }
}

/// `A = I + eps W(z,t) o S` with weight `rho` on the z-z block and
/// `|z|^(beta+1) / rho^beta` elsewhere. Every member satisfies the structural
/// hypothesis with `Lambda = O(eps)`.
#[derive(Clone, Debug)]
pub struct Perturbed {
    dims: Dims,
    eps: f64,
    s: MatN,
    lambda: f64,
}

/// Builds the perturbed family, rejecting amplitudes whose ellipticity
/// margin on the unit gauge ball drops below 1/2.
pub fn make_perturbed(eps: f64, s: MatN, d: Dims) -> Result<Perturbed> {
    if s.order() != d.n() {
        return Err(Error::invalid(format!(
            "shape matrix has order {}, expected {}",
            s.order(),
            d.n()
        )));
    }
    if s.max_asymmetry() > 0.0 {
        return Err(Error::invalid("shape matrix must be symmetric"));
    }
    if !eps.is_finite() {
        return Err(Error::invalid("eps must be finite"));
    }
    // both weights are bounded by rho <= 1 on B_1
    let lambda = 1.0 - eps.abs() * s.frobenius_norm();
    if lambda < 0.5 {
        return Err(Error::invalid(format!(
            "eps = {eps} too large: ellipticity bound {lambda:.3} < 1/2"
        )));
    }
    Ok(Perturbed { dims: d, eps, s, lambda })
}

impl Perturbed {
    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn shape(&self) -> &MatN {
        &self.s
    }

    fn weights(&self, p: &Point) -> (f64, f64) {
        let beta = self.dims.beta();
        let rho = crate::geometry::gauge(p, &self.dims);
        if rho == 0.0 {
            return (0.0, 0.0);
        }
        let zn = p.z_norm();
        (rho, zn.powf(beta + 1.0) / rho.powf(beta))
    }
}

impl CoefficientField for Perturbed {
    fn dims(&self) -> Dims {
        self.dims
    }

    fn name(&self) -> String {
        format!("perturbed(eps={})", self.eps)
    }

    fn matrix(&self, p: &Point) -> MatN {
        let (m, n) = (self.dims.m(), self.dims.n());
        let (wzz, wother) = self.weights(p);
        let mut a = MatN::identity(n);
        for i in 0..n {
            for j in 0..n {
                let w = if i < m && j < m { wzz } else { wother };
                a.set(i, j, a.get(i, j) + self.eps * w * self.s.get(i, j));
            }
        }
        a
    }

    fn xderiv(&self, l: usize, p: &Point) -> MatN {
        let d = self.dims;
        let (m, n) = (d.m(), d.n());
        let beta = d.beta();
        let Ok(fr) = Frame::new(p, &d) else {
            return MatN::zeros(n);
        };
        let xl_rho = fr.xrho[l];
        let g = fr.z_norm.powf(beta + 1.0) / fr.rho.powf(beta);
        let mut xl_g = -beta * g / fr.rho * xl_rho;
        if l < m && fr.z_norm > 0.0 {
            xl_g += (beta + 1.0) * fr.z_norm.powf(beta - 1.0) * p.z()[l] / fr.rho.powf(beta);
        }
        let mut out = MatN::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let dw = if i < m && j < m { xl_rho } else { xl_g };
                out.set(i, j, self.eps * dw * self.s.get(i, j));
            }
        }
        out
    }

    fn lambda(&self) -> f64 {
        self.lambda
    }

    fn reduced_mixed_block(&self, p: &Point) -> Option<MatN> {
        let d = self.dims;
        let (m, n) = (d.m(), d.n());
        let rho = crate::geometry::gauge(p, &d);
        let mut out = MatN::zeros(n);
        if rho == 0.0 {
            return Some(out);
        }
        let w = p.z_norm() / rho.powf(d.beta());
        for i in 0..m {
            for j in m..n {
                out.set(i, j, self.eps * w * self.s.get(i, j));
            }
        }
        Some(out)
    }
}

/// `A = I + eps rho` on the t-t diagonal only. The t-block perturbation is
/// not damped by the angle function, so the structural hypothesis fails:
/// the ratio `|b_ij| / (psi^(1/2+1/(2 beta)) rho)` blows up near `z = 0`.
#[derive(Clone, Copy, Debug)]
pub struct TBlockViolating {
    pub dims: Dims,
    pub eps: f64,
}

impl CoefficientField for TBlockViolating {
    fn dims(&self) -> Dims {
        self.dims
    }

    fn name(&self) -> String {
        format!("t-block-violating(eps={})", self.eps)
    }

    fn matrix(&self, p: &Point) -> MatN {
        let rho = crate::geometry::gauge(p, &self.dims);
        let mut a = MatN::identity(self.dims.n());
        for j in self.dims.m()..self.dims.n() {
            a.set(j, j, 1.0 + self.eps * rho);
        }
        a
    }

    fn xderiv(&self, l: usize, p: &Point) -> MatN {
        let mut out = MatN::zeros(self.dims.n());
        if let Ok(fr) = Frame::new(p, &self.dims) {
            for j in self.dims.m()..self.dims.n() {
                out.set(j, j, self.eps * fr.xrho[l]);
            }
        }
        out
    }

    fn lambda(&self) -> f64 {
        1.0 - self.eps.abs()
    }
}

/// `mu = <A X rho, X rho>`.
pub fn eval_mu(a: &dyn CoefficientField, p: &Point) -> Result<f64> {
    let fr = Frame::new(p, &a.dims())?;
    Ok(a.matrix(p).quad_form(&fr.xrho))
}

/// `sigma = <B X rho, X rho> = mu - psi`.
pub fn eval_sigma(a: &dyn CoefficientField, p: &Point) -> Result<f64> {
    let d = a.dims();
    let fr = Frame::new(p, &d)?;
    let b = a.matrix(p).sub(&MatN::identity(d.n()));
    Ok(b.quad_form(&fr.xrho))
}

/// `sigma / mu`, computed with the powers of |z| cancelled so that it stays
/// accurate (and is defined) on the characteristic set.
pub fn sigma_over_mu(a: &dyn CoefficientField, p: &Point) -> Result<f64> {
    let d = a.dims();
    Frame::new(p, &d)?;
    let w = radial_weight_vector(p, &d);
    let b = a.matrix(p).sub(&MatN::identity(d.n()));
    let bww = b.quad_form(&w);
    Ok(bww / (w.norm_sq() + bww))
}

/// `w = (|z|^beta z, (beta+1) t)`, so that `X rho = |z|^beta / rho^(2 beta + 1) w`
/// and `|w|^2 = rho^(2 beta + 2)`.
fn radial_weight_vector(p: &Point, d: &Dims) -> VecN {
    let zb = p.z_norm().powf(d.beta());
    let mut w = VecN::from_slice(p.coords());
    for i in 0..d.m() {
        w[i] *= zb;
    }
    for j in 0..d.k() {
        w[d.m() + j] *= d.beta() + 1.0;
    }
    w
}

/// Coordinate components of F at p.
pub fn f_vector(a: &dyn CoefficientField, p: &Point) -> Result<VecN> {
    let d = a.dims();
    let fr = Frame::new(p, &d)?;
    if a.is_identity() {
        return Ok(euler_vector(p, &d));
    }
    let (m, n) = (d.m(), d.n());
    let am = a.matrix(p);
    if fr.psi >= PSI_SWITCH {
        let axr = am.mul_vec(&fr.xrho);
        let mu = axr.dot(&fr.xrho);
        let c = fr.rho / mu;
        let mut out = axr.scaled(c);
        for j in m..n {
            out[j] *= fr.z_beta;
        }
        return Ok(out);
    }
    let red = a.reduced_mixed_block(p).ok_or_else(|| {
        Error::Conditioning(format!(
            "{} has no closed-form extension of F across z = 0 (psi = {:e})",
            a.name(),
            fr.psi
        ))
    })?;
    let b = am.sub(&MatN::identity(n));
    let w = radial_weight_vector(p, &d);
    let bw = b.mul_vec(&w);
    let ww = w.norm_sq();
    let bww = bw.dot(&w);
    let aww = ww + bww;
    let ratio = bww / aww;
    let scale = ww / aww;
    let beta1 = d.beta() + 1.0;
    let mut out = euler_vector(p, &d).scaled(1.0 - ratio);
    for i in 0..m {
        let mut v = 0.0;
        for j in 0..m {
            v += b.get(i, j) * p.z()[j];
        }
        for j in m..n {
            v += beta1 * red.get(i, j) * p.coords()[j];
        }
        out[i] += scale * v;
    }
    for j in m..n {
        out[j] += scale * bw[j];
    }
    Ok(out)
}

/// F f at p.
pub fn f_apply(a: &dyn CoefficientField, f: &dyn ScalarField, p: &Point) -> Result<f64> {
    let fv = f_vector(a, p)?;
    Ok(fv.dot(&f.gradient(p)?))
}

/// mu as a scalar field, for derivative checks.
pub struct MuField<'a>(pub &'a dyn CoefficientField);

impl ScalarField for MuField<'_> {
    fn dims(&self) -> Dims {
        self.0.dims()
    }

    fn value(&self, p: &Point) -> Result<f64> {
        eval_mu(self.0, p)
    }
}
