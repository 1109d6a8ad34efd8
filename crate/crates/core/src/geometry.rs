//! Closed-form Baouendi-Grushin calculus.
//!
//! Points are written (z, t) in R^m x R^k. The horizontal vector fields are
//! `X_i = d/dz_i` (i <= m) and `X_{m+j} = |z|^beta d/dt_j`; they degenerate on
//! the characteristic set `{z = 0}`. The anisotropic dilations
//! `delta_a(z, t) = (a z, a^(beta+1) t)` are generated by the Euler field
//! `Z = z . d/dz + (beta+1) t . d/dt`, and the gauge
//! `rho = (|z|^(2(beta+1)) + (beta+1)^2 |t|^2)^(1/(2(beta+1)))` is
//! homogeneous of degree one under them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::linalg::{VecN, MAX_DIM};

/// Dimension data (m, k, beta).
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Dims {
    m: usize,
    k: usize,
    beta: f64,
}

impl Dims {
    pub fn new(m: usize, k: usize, beta: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("m must be positive"));
        }
        if m + k > MAX_DIM {
            return Err(Error::invalid(format!("m + k = {} exceeds {MAX_DIM}", m + k)));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::invalid(format!("beta must be positive, got {beta}")));
        }
        Ok(Dims { m, k, beta })
    }

    /// m = 2, k = 1, beta = 1 (Q = 4).
    pub fn desk() -> Self {
        Dims { m: 2, k: 1, beta: 1.0 }
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Topological dimension N = m + k.
    #[inline]
    pub fn n(&self) -> usize {
        self.m + self.k
    }

    /// Homogeneous dimension Q = m + (beta+1) k.
    #[inline]
    pub fn q(&self) -> f64 {
        self.m as f64 + (self.beta + 1.0) * self.k as f64
    }

    /// Half-widths of the coordinate box enclosing the gauge ball of radius r.
    pub fn ball_box(&self, r: f64) -> (f64, f64) {
        let b1 = self.beta + 1.0;
        (r, r.powf(b1) / b1)
    }

    /// Lebesgue volume of the box returned by [`Dims::ball_box`].
    pub fn ball_box_volume(&self, r: f64) -> f64 {
        let (zw, tw) = self.ball_box(r);
        (2.0 * zw).powi(self.m as i32) * (2.0 * tw).powi(self.k as i32)
    }
}

/// A point (z, t).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    coords: VecN,
    m: usize,
}

impl Point {
    pub fn new(z: &[f64], t: &[f64]) -> Result<Self> {
        if z.len() + t.len() > MAX_DIM {
            return Err(Error::invalid("point dimension exceeds MAX_DIM"));
        }
        let mut coords = VecN::zeros(z.len() + t.len());
        coords.as_mut_slice()[..z.len()].copy_from_slice(z);
        coords.as_mut_slice()[z.len()..].copy_from_slice(t);
        if coords.as_slice().iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("non-finite coordinate"));
        }
        Ok(Point { coords, m: z.len() })
    }

    pub fn from_coords(coords: &[f64], dims: &Dims) -> Self {
        assert_eq!(coords.len(), dims.n());
        Point {
            coords: VecN::from_slice(coords),
            m: dims.m(),
        }
    }

    pub fn origin(dims: &Dims) -> Self {
        Point {
            coords: VecN::zeros(dims.n()),
            m: dims.m(),
        }
    }

    #[inline]
    pub fn z(&self) -> &[f64] {
        &self.coords.as_slice()[..self.m]
    }

    #[inline]
    pub fn t(&self) -> &[f64] {
        &self.coords.as_slice()[self.m..]
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        self.coords.as_slice()
    }

    #[inline]
    pub fn coords_mut(&mut self) -> &mut [f64] {
        self.coords.as_mut_slice()
    }

    #[inline]
    pub fn z_norm(&self) -> f64 {
        self.z().iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_origin(&self) -> bool {
        self.coords().iter().all(|&c| c == 0.0)
    }
}

/// Components of a vector along X_1, ..., X_N.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HorizontalVector(pub VecN);

impl HorizontalVector {
    pub fn components(&self) -> &[f64] {
        self.0.as_slice()
    }

    /// `sum_i (X_i f)^2`.
    pub fn norm_sq(&self) -> f64 {
        self.0.norm_sq()
    }

    pub fn dot(&self, other: &HorizontalVector) -> f64 {
        self.0.dot(&other.0)
    }
}

/// The gauge rho(z, t).
pub fn gauge(p: &Point, d: &Dims) -> f64 {
    let b1 = d.beta + 1.0;
    let zn2: f64 = p.z().iter().map(|x| x * x).sum();
    let tn2: f64 = p.t().iter().map(|x| x * x).sum();
    (zn2.powf(b1) + b1 * b1 * tn2).powf(0.5 / b1)
}

/// The dilation delta_a.
pub fn dilate(p: &Point, a: f64, d: &Dims) -> Result<Point> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::invalid(format!("dilation factor must be positive, got {a}")));
    }
    Ok(dilate_unchecked(p, a, d))
}

#[inline]
pub(crate) fn dilate_unchecked(p: &Point, a: f64, d: &Dims) -> Point {
    let mut q = *p;
    let at = a.powf(d.beta + 1.0);
    let m = d.m();
    for (i, c) in q.coords_mut().iter_mut().enumerate() {
        *c *= if i < m { a } else { at };
    }
    q
}

/// Pointwise quantities shared by most derived fields.
#[derive(Clone, Copy, Debug)]
pub struct Frame {
    pub rho: f64,
    pub z_norm: f64,
    /// |z|^beta, the factor carried by the t-directions.
    pub z_beta: f64,
    pub psi: f64,
    /// X rho along X_1..X_N.
    pub xrho: VecN,
}

impl Frame {
    pub fn new(p: &Point, d: &Dims) -> Result<Self> {
        let rho = gauge(p, d);
        if rho == 0.0 {
            return Err(Error::domain("evaluation at the origin"));
        }
        let beta = d.beta;
        let z_norm = p.z_norm();
        let z_beta = z_norm.powf(beta);
        let psi = (z_norm / rho).powf(2.0 * beta);
        let denom = rho.powf(2.0 * beta + 1.0);
        let mut xrho = VecN::zeros(d.n());
        let zz = z_beta * z_beta / denom;
        for (i, zi) in p.z().iter().enumerate() {
            xrho[i] = zz * zi;
        }
        let tt = (beta + 1.0) * z_beta / denom;
        for (j, tj) in p.t().iter().enumerate() {
            xrho[d.m() + j] = tt * tj;
        }
        Ok(Frame {
            rho,
            z_norm,
            z_beta,
            psi,
            xrho,
        })
    }
}

/// X rho in closed form; its squared length equals psi.
pub fn gauge_xgrad(p: &Point, d: &Dims) -> Result<HorizontalVector> {
    Ok(HorizontalVector(Frame::new(p, d)?.xrho))
}

/// Coordinate gradient of the gauge.
pub fn gauge_gradient(p: &Point, d: &Dims) -> Result<VecN> {
    let rho = gauge(p, d);
    if rho == 0.0 {
        return Err(Error::domain("gauge gradient at the origin"));
    }
    let beta = d.beta;
    let denom = rho.powf(2.0 * beta + 1.0);
    let z2b = p.z_norm().powf(2.0 * beta);
    let mut g = VecN::zeros(d.n());
    for (i, zi) in p.z().iter().enumerate() {
        g[i] = z2b * zi / denom;
    }
    for (j, tj) in p.t().iter().enumerate() {
        g[d.m() + j] = (beta + 1.0) * tj / denom;
    }
    Ok(g)
}

/// The angle function psi = |X rho|^2 = |z|^(2 beta) / rho^(2 beta).
pub fn angle_psi(p: &Point, d: &Dims) -> Result<f64> {
    let rho = gauge(p, d);
    if rho == 0.0 {
        return Err(Error::domain("angle function at the origin"));
    }
    Ok((p.z_norm() / rho).powf(2.0 * d.beta))
}

/// psi with the origin mapped to 0, for integrands.
pub fn angle_psi_or_zero(p: &Point, d: &Dims) -> f64 {
    angle_psi(p, d).unwrap_or(0.0)
}

/// Coordinate gradient of psi (zero z-part on the characteristic set).
pub fn angle_gradient(p: &Point, d: &Dims) -> Result<VecN> {
    let rho = gauge(p, d);
    if rho == 0.0 {
        return Err(Error::domain("angle gradient at the origin"));
    }
    let beta = d.beta;
    let zn = p.z_norm();
    let psi = (zn / rho).powf(2.0 * beta);
    let grho = gauge_gradient(p, d)?;
    let mut g = grho.scaled(-2.0 * beta * psi / rho);
    if zn > 0.0 {
        let c = 2.0 * beta * zn.powf(2.0 * beta - 2.0) / rho.powf(2.0 * beta);
        for (i, zi) in p.z().iter().enumerate() {
            g[i] += c * zi;
        }
    }
    Ok(g)
}

/// Converts a coordinate gradient into the horizontal gradient X f.
pub fn horizontal(grad: &VecN, p: &Point, d: &Dims) -> HorizontalVector {
    let mut x = *grad;
    let zb = p.z_norm().powf(d.beta);
    for j in 0..d.k() {
        x[d.m() + j] *= zb;
    }
    HorizontalVector(x)
}

/// Coordinate components of the Euler field Z at p.
pub fn euler_vector(p: &Point, d: &Dims) -> VecN {
    let mut v = VecN::from_slice(p.coords());
    for j in 0..d.k() {
        v[d.m() + j] *= d.beta + 1.0;
    }
    v
}

/// div Z, which is the constant Q.
pub fn euler_divergence(d: &Dims) -> f64 {
    d.q()
}

/// Z f at p.
pub fn euler_apply<F: ScalarField + ?Sized>(f: &F, p: &Point, d: &Dims) -> Result<f64> {
    let g = f.gradient(p)?;
    Ok(euler_vector(p, d).dot(&g))
}

/// (X_1 f, ..., X_N f) at p.
pub fn xgrad_apply<F: ScalarField + ?Sized>(f: &F, p: &Point, d: &Dims) -> Result<HorizontalVector> {
    let g = f.gradient(p)?;
    Ok(horizontal(&g, p, d))
}

/// Uniform samples of the gauge ball B_r by rejection from its bounding box.
pub fn sample_ball(r: f64, n: usize, seed: u64, d: &Dims) -> Result<Vec<Point>> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::invalid(format!("radius must be positive, got {r}")));
    }
    let (zw, tw) = d.ball_box(r);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let mut buf = [0.0; MAX_DIM];
    while out.len() < n {
        for (a, c) in buf[..d.n()].iter_mut().enumerate() {
            let w = if a < d.m() { zw } else { tw };
            *c = rng.gen_range(-w..w);
        }
        let p = Point::from_coords(&buf[..d.n()], d);
        if gauge(&p, d) < r {
            out.push(p);
        }
    }
    Ok(out)
}

/// A point with gauge `rho` and angle `psi`, with z and t along their first axes.
pub fn point_with_angle(rho: f64, psi: f64, d: &Dims) -> Result<Point> {
    if !(rho > 0.0) || !(0.0..=1.0).contains(&psi) {
        return Err(Error::invalid(format!("need rho > 0 and psi in [0, 1], got {rho}, {psi}")));
    }
    if d.k() == 0 && psi < 1.0 {
        return Err(Error::invalid("psi is identically 1 when k = 0"));
    }
    let beta1 = d.beta + 1.0;
    let zn = rho * psi.powf(0.5 / d.beta);
    let tn = (rho.powf(2.0 * beta1) - zn.powf(2.0 * beta1)).max(0.0).sqrt() / beta1;
    let mut c = [0.0; MAX_DIM];
    c[0] = zn;
    if d.k() > 0 {
        c[d.m()] = tn;
    }
    Ok(Point::from_coords(&c[..d.n()], d))
}

/// The gauge as a scalar field (closed-form gradient).
#[derive(Clone, Copy, Debug)]
pub struct GaugeField(pub Dims);

impl ScalarField for GaugeField {
    fn dims(&self) -> Dims {
        self.0
    }

    fn value(&self, p: &Point) -> Result<f64> {
        Ok(gauge(p, &self.0))
    }

    fn gradient(&self, p: &Point) -> Result<VecN> {
        gauge_gradient(p, &self.0)
    }
}

/// The angle function as a scalar field (closed-form gradient).
#[derive(Clone, Copy, Debug)]
pub struct AngleField(pub Dims);

impl ScalarField for AngleField {
    fn dims(&self) -> Dims {
        self.0
    }

    fn value(&self, p: &Point) -> Result<f64> {
        angle_psi(p, &self.0)
    }

    fn gradient(&self, p: &Point) -> Result<VecN> {
        angle_gradient(p, &self.0)
    }
}
