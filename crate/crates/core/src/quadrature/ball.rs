//! Randomized quasi-Monte Carlo integration over the unit gauge ball.
//!
//! Integrals over B_r are pulled back to B_1 through the dilation `delta_r`:
//! `int_{B_r} g(x) (r^2 - rho^2)^alpha dx = r^(Q + 2 alpha) int_{B_1} g(delta_r y) (1 - rho(y)^2)^alpha dy`,
//! so one point set serves every radius.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::sobol::Sobol;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::fields::{eval_mu, CoefficientField};
use crate::geometry::{angle_psi, dilate_unchecked, gauge, Dims, Point};
use crate::linalg::MAX_DIM;

/// Points handled per parallel work item; fixed so that the reduction order
/// does not depend on the number of workers.
const CHUNK: usize = 4096;

pub const DEFAULT_POINTS: usize = 200_000;
pub const DEFAULT_REPLICATES: usize = 16;
pub const DEFAULT_REL_TOL: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadConfig {
    /// Sobol points per replicate (before rejection).
    pub points: usize,
    pub replicates: usize,
    pub seed: u64,
    /// Relative error above which a result is flagged inconclusive.
    pub rel_tol: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            points: DEFAULT_POINTS,
            replicates: DEFAULT_REPLICATES,
            seed: 0,
            rel_tol: DEFAULT_REL_TOL,
        }
    }
}

impl QuadConfig {
    pub fn with_budget(points: usize, replicates: usize, seed: u64) -> Self {
        QuadConfig {
            points,
            replicates,
            seed,
            ..QuadConfig::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadResult {
    pub value: f64,
    /// Standard error of the replicate mean.
    pub err_est: f64,
    pub evaluations: usize,
    pub inconclusive: bool,
}

impl QuadResult {
    pub fn scaled(self, s: f64) -> QuadResult {
        QuadResult {
            value: self.value * s,
            err_est: self.err_est * s.abs(),
            ..self
        }
    }
}

/// Replicate values of several integrals sharing one point set.
#[derive(Clone, Debug)]
pub struct Replicated {
    /// `replicates[r][i]` is integral i under replicate r.
    pub replicates: Vec<Vec<f64>>,
    pub evaluations: usize,
    pub rel_tol: f64,
}

impl Replicated {
    pub fn len(&self) -> usize {
        self.replicates.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Mean and standard error of any function of the per-replicate values.
    pub fn statistic(&self, f: impl Fn(&[f64]) -> f64) -> QuadResult {
        let vals: Vec<f64> = self.replicates.iter().map(|r| f(r)).collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let err = if vals.len() > 1 {
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            f64::INFINITY
        };
        QuadResult {
            value: mean,
            err_est: err,
            evaluations: self.evaluations,
            inconclusive: !(err <= self.rel_tol * mean.abs()),
        }
    }

    pub fn result(&self, i: usize) -> QuadResult {
        self.statistic(|r| r[i])
    }
}

/// Digital-shift RQMC rule on the bounding box of B_1.
#[derive(Clone, Debug)]
pub struct BallRule {
    dims: Dims,
    sobol: Sobol,
    shifts: Vec<[u32; MAX_DIM]>,
    points: usize,
    rel_tol: f64,
    half_widths: [f64; MAX_DIM],
    box_volume: f64,
}

impl BallRule {
    pub fn new(dims: Dims, cfg: QuadConfig) -> Result<Self> {
        if cfg.points == 0 || cfg.replicates == 0 {
            return Err(Error::invalid("quadrature budget must be positive"));
        }
        if cfg.points > u32::MAX as usize {
            return Err(Error::invalid("too many points per replicate"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let shifts = (0..cfg.replicates)
            .map(|_| {
                let mut s = [0u32; MAX_DIM];
                for v in s.iter_mut() {
                    *v = rng.gen();
                }
                s
            })
            .collect();
        let (zw, tw) = dims.ball_box(1.0);
        let mut half_widths = [0.0; MAX_DIM];
        for (a, w) in half_widths.iter_mut().enumerate().take(dims.n()) {
            *w = if a < dims.m() { zw } else { tw };
        }
        Ok(BallRule {
            dims,
            sobol: Sobol::new(dims.n()),
            shifts,
            points: cfg.points,
            rel_tol: cfg.rel_tol,
            half_widths,
            box_volume: dims.ball_box_volume(1.0),
        })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    /// Integrates `len` functions over B_1 at once. `f(y, out)` adds the
    /// integrand values at y into `out`; it is called only for `rho(y) < 1`
    /// with `z != 0`.
    pub fn integrate<F>(&self, len: usize, f: F) -> Result<Replicated>
    where
        F: Fn(&Point, &mut [f64]) -> Result<()> + Sync,
    {
        let d = self.dims;
        let n = d.n();
        let chunks = self.points.div_ceil(CHUNK);
        let mut replicates = Vec::with_capacity(self.shifts.len());
        for shift in &self.shifts {
            let partial: Vec<Vec<f64>> = (0..chunks)
                .into_par_iter()
                .map(|c| -> Result<Vec<f64>> {
                    let mut acc = vec![0.0; len];
                    let mut u = [0.0; MAX_DIM];
                    let mut coords = [0.0; MAX_DIM];
                    let end = ((c + 1) * CHUNK).min(self.points);
                    for i in (c * CHUNK)..end {
                        self.sobol.shifted_point(i as u32, shift, &mut u);
                        for a in 0..n {
                            coords[a] = (2.0 * u[a] - 1.0) * self.half_widths[a];
                        }
                        let y = Point::from_coords(&coords[..n], &d);
                        if y.z_norm() == 0.0 || gauge(&y, &d) >= 1.0 {
                            continue;
                        }
                        f(&y, &mut acc)?;
                    }
                    Ok(acc)
                })
                .collect::<Result<_>>()?;
            let mut total = vec![0.0; len];
            for p in &partial {
                for (t, v) in total.iter_mut().zip(p) {
                    *t += v;
                }
            }
            let scale = self.box_volume / self.points as f64;
            replicates.push(total.into_iter().map(|v| v * scale).collect());
        }
        Ok(Replicated {
            replicates,
            evaluations: self.points * self.shifts.len(),
            rel_tol: self.rel_tol,
        })
    }
}

/// Extra multiplicative factor in the weight.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightFactor {
    None,
    Mu,
    Psi,
}

/// Weight `(r^2 - rho^2)^alpha * factor`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeightSpec {
    pub alpha: f64,
    pub factor: WeightFactor,
}

impl WeightSpec {
    pub fn new(alpha: f64, factor: WeightFactor) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::invalid(format!("weight exponent must be >= 0, got {alpha}")));
        }
        Ok(WeightSpec { alpha, factor })
    }
}

/// `int_{B_r} f (r^2 - rho^2)^alpha * factor`.
pub fn integrate_ball(
    f: &dyn ScalarField,
    r: f64,
    w: WeightSpec,
    a: &dyn CoefficientField,
    cfg: QuadConfig,
) -> Result<QuadResult> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::invalid(format!("radius must be positive, got {r}")));
    }
    let d = a.dims();
    let rule = BallRule::new(d, cfg)?;
    let rep = rule.integrate(1, |y, out| {
        let x = dilate_unchecked(y, r, &d);
        let rho = gauge(y, &d);
        let factor = match w.factor {
            WeightFactor::None => 1.0,
            WeightFactor::Mu => eval_mu(a, &x)?,
            WeightFactor::Psi => angle_psi(&x, &d)?,
        };
        out[0] += f.value(&x)? * (1.0 - rho * rho).powf(w.alpha) * factor;
        Ok(())
    })?;
    Ok(rep.result(0).scaled(r.powf(d.q() + 2.0 * w.alpha)))
}

/// `omega = int_{B_1} psi`.
pub fn omega(d: &Dims, cfg: QuadConfig) -> Result<QuadResult> {
    let rule = BallRule::new(*d, cfg)?;
    let dd = *d;
    let rep = rule.integrate(1, |y, out| {
        out[0] += angle_psi(y, &dd)?;
        Ok(())
    })?;
    Ok(rep.result(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Constant, FnField};
    use crate::fields::Identity;
    use crate::geometry::sample_ball;

    fn small(seed: u64) -> QuadConfig {
        QuadConfig::with_budget(20_000, 16, seed)
    }

    #[test]
    fn volume_of_unit_ball() {
        // |B_1| = pi^2 / 4 for (m, k, beta) = (2, 1, 1): int_{|z|<1} sqrt(1 - |z|^4) dz
        let d = Dims::desk();
        let one = Constant { dims: d, value: 1.0 };
        let w = WeightSpec::new(0.0, WeightFactor::None).unwrap();
        let v = integrate_ball(&one, 1.0, w, &Identity(d), small(1)).unwrap();
        let exact = std::f64::consts::PI.powi(2) / 4.0;
        assert!((v.value - exact).abs() < 4.0 * v.err_est.max(1e-4), "{v:?}");
    }

    #[test]
    fn omega_agrees_with_plain_monte_carlo() {
        let d = Dims::desk();
        let q = omega(&d, small(2)).unwrap();
        // independent estimate: E[psi] over uniform samples times |B_1|
        let n = 200_000;
        let pts = sample_ball(1.0, n, 99, &d).unwrap();
        let vals: Vec<f64> = pts.iter().map(|p| angle_psi(p, &d).unwrap()).collect();
        let mean = vals.iter().sum::<f64>() / n as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let vol = std::f64::consts::PI.powi(2) / 4.0;
        let mc = mean * vol;
        let mc_err = (var / n as f64).sqrt() * vol;
        let combined = (mc_err * mc_err + q.err_est * q.err_est).sqrt();
        assert!((q.value - mc).abs() < 3.0 * combined, "{} vs {mc} ({combined:e})", q.value);
        let other = omega(&d, small(3)).unwrap();
        let combined = (other.err_est.powi(2) + q.err_est.powi(2)).sqrt();
        assert!((q.value - other.value).abs() < 3.0 * combined.max(1e-12));
    }

    #[test]
    fn dilation_scaling_law() {
        let d = Dims::desk();
        let one = Constant { dims: d, value: 1.0 };
        for alpha in [0.0, 1.0, 2.5] {
            let w = WeightSpec::new(alpha, WeightFactor::Psi).unwrap();
            let full = integrate_ball(&one, 1.0, w, &Identity(d), small(4)).unwrap();
            let half = integrate_ball(&one, 0.5, w, &Identity(d), small(4)).unwrap();
            let ratio = half.value / full.value;
            let expect = 0.5f64.powf(d.q() + 2.0 * alpha);
            assert!((ratio / expect - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn odd_integrand_vanishes() {
        let d = Dims::desk();
        let f = FnField::new(d, |p| p.z()[0]);
        let w = WeightSpec::new(1.0, WeightFactor::Mu).unwrap();
        let v = integrate_ball(&f, 0.7, w, &Identity(d), small(5)).unwrap();
        assert!(v.value.abs() < 4.0 * v.err_est, "{v:?}");
    }

    #[test]
    fn nonnegative_integrals_grow_with_radius() {
        let d = Dims::desk();
        let f = FnField::new(d, |p| p.t()[0] * p.t()[0] + 0.1);
        let w = WeightSpec::new(1.0, WeightFactor::Psi).unwrap();
        let mut prev = 0.0;
        for r in [0.2, 0.4, 0.6, 0.8, 1.0] {
            let v = integrate_ball(&f, r, w, &Identity(d), small(6)).unwrap();
            assert!(v.value >= prev - v.err_est);
            prev = v.value;
        }
    }

    #[test]
    fn alpha_ratios_match_radial_monte_carlo() {
        // co-area oracle: the psi-weighted distribution of rho on B_1, sampled
        // by plain Monte Carlo, integrated against (1 - rho^2)^alpha
        let d = Dims::desk();
        let pts = sample_ball(1.0, 400_000, 11, &d).unwrap();
        let radial: Vec<(f64, f64)> = pts
            .iter()
            .map(|p| (gauge(p, &d), angle_psi(p, &d).unwrap()))
            .collect();
        let oracle = |alpha: f64| radial.iter().map(|(r, s)| s * (1.0 - r * r).powf(alpha)).sum::<f64>();
        let one = Constant { dims: d, value: 1.0 };
        let quad = |alpha: f64| {
            let w = WeightSpec::new(alpha, WeightFactor::Psi).unwrap();
            integrate_ball(&one, 1.0, w, &Identity(d), small(7)).unwrap().value
        };
        let base = quad(1.0) / oracle(1.0);
        for alpha in [2.0, 5.0] {
            let r = quad(alpha) / oracle(alpha) / base;
            assert!((r - 1.0).abs() < 1e-2, "alpha {alpha}: {r}");
        }
    }

    #[test]
    fn bitwise_deterministic_across_workers() {
        let d = Dims::desk();
        let f = FnField::new(d, |p| (p.z()[0] + 2.0 * p.t()[0]).exp());
        let w = WeightSpec::new(1.5, WeightFactor::Mu).unwrap();
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| integrate_ball(&f, 0.8, w, &Identity(d), small(8)).unwrap())
        };
        let a = run(1);
        let b = run(3);
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.err_est.to_bits(), b.err_est.to_bits());
    }
}
