//! Scalar fields on R^m x R^k and their coordinate derivatives.

use crate::error::Result;
use crate::geometry::{gauge, Dims, Point};
use crate::linalg::VecN;

/// A scalar function of (z, t).
///
/// `gradient` returns the coordinate gradient (d/dz_1, ..., d/dz_m,
/// d/dt_1, ..., d/dt_k). Fields without a closed form fall back to
/// fourth-order central differences.
pub trait ScalarField: Send + Sync {
    fn dims(&self) -> Dims;

    fn value(&self, p: &Point) -> Result<f64>;

    fn gradient(&self, p: &Point) -> Result<VecN> {
        fd_gradient(self, p)
    }
}

/// Finite-difference step used by the generic derivative fallback.
pub fn fd_step(p: &Point, dims: &Dims) -> f64 {
    1e-4 * gauge(p, dims).max(1.0)
}

/// Fourth-order central difference of `f` along coordinate `axis`.
pub fn fd_partial<F: ScalarField + ?Sized>(f: &F, p: &Point, axis: usize, h: f64) -> Result<f64> {
    let at = |s: f64| {
        let mut q = *p;
        q.coords_mut()[axis] += s * h;
        f.value(&q)
    };
    let (m2, m1, p1, p2) = (at(-2.0)?, at(-1.0)?, at(1.0)?, at(2.0)?);
    Ok((m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h))
}

pub fn fd_gradient<F: ScalarField + ?Sized>(f: &F, p: &Point) -> Result<VecN> {
    let dims = f.dims();
    let h = fd_step(p, &dims);
    let mut g = VecN::zeros(dims.n());
    for a in 0..dims.n() {
        g[a] = fd_partial(f, p, a, h)?;
    }
    Ok(g)
}

type ValueFn = dyn Fn(&Point) -> f64 + Send + Sync;
type GradFn = dyn Fn(&Point) -> VecN + Send + Sync;

/// Closure-backed field, mostly for tests and ad-hoc integrands.
pub struct FnField {
    dims: Dims,
    value: Box<ValueFn>,
    gradient: Option<Box<GradFn>>,
}

impl FnField {
    pub fn new(dims: Dims, value: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        FnField {
            dims,
            value: Box::new(value),
            gradient: None,
        }
    }

    pub fn with_gradient(mut self, g: impl Fn(&Point) -> VecN + Send + Sync + 'static) -> Self {
        self.gradient = Some(Box::new(g));
        self
    }
}

impl ScalarField for FnField {
    fn dims(&self) -> Dims {
        self.dims
    }

    fn value(&self, p: &Point) -> Result<f64> {
        Ok((self.value)(p))
    }

    fn gradient(&self, p: &Point) -> Result<VecN> {
        match &self.gradient {
            Some(g) => Ok(g(p)),
            None => fd_gradient(self, p),
        }
    }
}

/// The constant field.
#[derive(Clone, Copy, Debug)]
pub struct Constant {
    pub dims: Dims,
    pub value: f64,
}

impl ScalarField for Constant {
    fn dims(&self) -> Dims {
        self.dims
    }

    fn value(&self, _p: &Point) -> Result<f64> {
        Ok(self.value)
    }

    fn gradient(&self, _p: &Point) -> Result<VecN> {
        Ok(VecN::zeros(self.dims.n()))
    }
}
