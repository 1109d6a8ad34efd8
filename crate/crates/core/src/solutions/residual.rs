//! Pointwise PDE residual `X_i(a_ij X_j u) - V u` by nested staggered
//! central differences. Only values of u, A and V are used, so the residual
//! is independent of any analytic gradient the field carries.

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::fields::{CoefficientField, Potential};
use crate::geometry::{gauge, Dims, Point};
use crate::linalg::VecN;

/// Minimum `|z| / h` for the stencil to stay clear of the characteristic set.
pub const COLLAR_STEPS: f64 = 4.0;

fn shifted(p: &Point, axis: usize, s: f64) -> Point {
    let mut q = *p;
    q.coords_mut()[axis] += s;
    q
}

/// `|z|^beta` for t-axes, 1 for z-axes.
fn axis_weight(p: &Point, axis: usize, d: &Dims) -> f64 {
    if axis < d.m() {
        1.0
    } else {
        p.z_norm().powf(d.beta())
    }
}

/// Flux `sum_j a_ij X_j u` at q with half-step differences.
fn flux(u: &dyn ScalarField, a: &dyn CoefficientField, q: &Point, i: usize, h: &VecN) -> Result<f64> {
    let d = a.dims();
    let am = a.matrix(q);
    let mut s = 0.0;
    for j in 0..d.n() {
        let c = am.get(i, j);
        if c == 0.0 {
            continue;
        }
        let du = (u.value(&shifted(q, j, 0.5 * h[j]))? - u.value(&shifted(q, j, -0.5 * h[j]))?) / h[j];
        s += c * axis_weight(q, j, &d) * du;
    }
    Ok(s)
}

/// Per-axis steps: h along z, `h rho^beta` along t, so the stencil is the
/// image of a fixed stencil under the dilation to scale rho.
fn steps(p: &Point, d: &Dims, h: f64) -> VecN {
    let t_step = h * gauge(p, d).min(1.0).powf(d.beta());
    let mut s = VecN::zeros(d.n());
    for a in 0..d.n() {
        s[a] = if a < d.m() { h } else { t_step };
    }
    s
}

/// `X_i(a_ij X_j u)(p) - V(p) u(p)` with base step h; O(h^2) for smooth inputs.
pub fn residual(
    u: &dyn ScalarField,
    v: &Potential,
    a: &dyn CoefficientField,
    p: &Point,
    h: f64,
) -> Result<f64> {
    let d = a.dims();
    if !(h > 0.0) {
        return Err(Error::invalid("difference step must be positive"));
    }
    if p.z_norm() < COLLAR_STEPS * h {
        return Err(Error::Collar {
            z_norm: p.z_norm(),
            step: h,
        });
    }
    let hs = steps(p, &d, h);
    let mut lu = 0.0;
    for i in 0..d.n() {
        let plus = flux(u, a, &shifted(p, i, 0.5 * hs[i]), i, &hs)?;
        let minus = flux(u, a, &shifted(p, i, -0.5 * hs[i]), i, &hs)?;
        lu += axis_weight(p, i, &d) * (plus - minus) / hs[i];
    }
    Ok(lu - v.value(p)? * u.value(p)?)
}

/// Richardson combination of the residual at h and h/2, O(h^4).
pub fn residual_extrapolated(
    u: &dyn ScalarField,
    v: &Potential,
    a: &dyn CoefficientField,
    p: &Point,
    h: f64,
) -> Result<f64> {
    let coarse = residual(u, v, a, p, h)?;
    let fine = residual(u, v, a, p, 0.5 * h)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FnField;
    use crate::fields::Identity;
    use crate::geometry::sample_ball;
    use crate::solutions::{builtin_kinds, manufactured, SolutionField};

    #[test]
    fn linear_has_zero_residual() {
        let d = Dims::desk();
        let u = FnField::new(d, |p| p.z()[0]);
        let p = Point::new(&[0.3, 0.2], &[0.1]).unwrap();
        let r = residual(&u, &Potential::zero(d), &Identity(d), &p, 1e-3).unwrap();
        assert!(r.abs() < 1e-8);
    }

    #[test]
    fn square_has_constant_residual() {
        let d = Dims::desk();
        let u = FnField::new(d, |p| p.z()[0] * p.z()[0]);
        for p in sample_ball(1.0, 50, 1, &d).unwrap() {
            if p.z_norm() < 1e-2 {
                continue;
            }
            let r = residual(&u, &Potential::zero(d), &Identity(d), &p, 1e-3).unwrap();
            assert!((r - 2.0).abs() < 1e-6);
        }
    }

    #[test]
    fn collar_is_enforced() {
        let d = Dims::desk();
        let u = FnField::new(d, |p| p.z()[0]);
        let p = Point::new(&[1e-3, 0.0], &[0.1]).unwrap();
        let r = residual(&u, &Potential::zero(d), &Identity(d), &p, 1e-3);
        assert!(matches!(r, Err(Error::Collar { .. })));
    }

    #[test]
    fn manufactured_pairs_solve_their_equations() {
        for d in [Dims::desk(), Dims::new(2, 1, 2.0).unwrap(), Dims::new(2, 1, 0.5).unwrap()] {
            let a = Identity(d);
            for k in builtin_kinds(&d) {
                let u = manufactured(k.clone(), d).unwrap();
                let v = u.exact_potential().unwrap();
                let mut worst: f64 = 0.0;
                for p in sample_ball(1.0, 300, 2, &d).unwrap() {
                    if p.z_norm() < COLLAR_STEPS * 1e-3 {
                        continue;
                    }
                    worst = worst.max(residual_extrapolated(&u, &v, &a, &p, 1e-3).unwrap().abs());
                }
                assert!(worst < 1e-6, "beta {} {k}: {worst:e}", d.beta());
            }
        }
    }

    #[test]
    fn plain_residual_is_second_order() {
        let d = Dims::desk();
        let u = manufactured(crate::solutions::ManufacturedKind::GaussianRadial, d).unwrap();
        let v = u.exact_potential().unwrap();
        let p = Point::new(&[0.5, 0.3], &[0.05]).unwrap();
        let a = Identity(d);
        let r1 = residual(&u, &v, &a, &p, 2e-3).unwrap();
        let r2 = residual(&u, &v, &a, &p, 1e-3).unwrap();
        let order = (r1 / r2).abs().log2();
        assert!((order - 2.0).abs() < 0.1, "order {order}");
    }

    #[test]
    fn wrong_potential_is_detected() {
        // the t1 Gaussian with shift Q + 2 (beta+1)^2 leaves a residual of order psi u
        let d = Dims::new(2, 1, 2.0).unwrap();
        let u = manufactured("gaussian_modulated:coordinate_t".parse().unwrap(), d).unwrap();
        let wrong = Potential::angle_quadratic(d, d.q() + 2.0 * 9.0);
        let p = Point::new(&[0.5, 0.1], &[0.2]).unwrap();
        let r = residual(&u, &wrong, &Identity(d), &p, 1e-3).unwrap();
        assert!(r.abs() > 1e-3);
        let right = u.exact_potential().unwrap();
        assert!(residual_extrapolated(&u, &right, &Identity(d), &p, 1e-3).unwrap().abs() < 1e-6);
    }
}
