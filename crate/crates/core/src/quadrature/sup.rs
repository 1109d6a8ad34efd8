//! Lower bounds for `sup_{B_r} |u|` from quasi-uniform samples plus a local
//! compass-search polish.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sobol::Sobol;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{dilate_unchecked, gauge, Dims, Point};
use crate::linalg::MAX_DIM;

/// Candidates kept for polishing.
const POLISH_STARTS: usize = 8;
/// Evaluation cap per polish run.
const POLISH_EVALUATIONS: usize = 20_000;
/// Relative gain below which a move does not count as an improvement.
const MIN_GAIN: f64 = 1e-14;

/// Pulls a point back into the closed ball of radius r along its dilation orbit.
fn project(p: Point, r: f64, d: &Dims) -> Point {
    let rho = gauge(&p, d);
    if rho > r {
        dilate_unchecked(&p, r / rho, d)
    } else {
        p
    }
}

fn polish(u: &dyn ScalarField, start: Point, best: f64, r: f64, d: &Dims) -> Result<f64> {
    let n = d.n();
    let mut p = start;
    let mut val = best;
    let mut step = 0.1;
    let mut evaluations = 0;
    while step > 1e-10 && evaluations < POLISH_EVALUATIONS {
        let mut improved = false;
        for a in 0..n {
            // anisotropic step: r along z, r^(beta+1) along t
            let scale = if a < d.m() { r } else { r.powf(d.beta() + 1.0) };
            for s in [-1.0, 1.0] {
                let mut q = p;
                q.coords_mut()[a] += s * step * scale;
                let q = project(q, r, d);
                let v = u.value(&q)?.abs();
                evaluations += 1;
                if v > val * (1.0 + MIN_GAIN) {
                    val = v;
                    p = q;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok(val)
}

/// Max of `|u|` over `n` scrambled Sobol points of B_r, refined by compass
/// search from the best few samples. The result never exceeds the true sup.
pub fn sup_on_ball(u: &dyn ScalarField, r: f64, n: usize, seed: u64) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::invalid(format!("radius must be positive, got {r}")));
    }
    let d = u.dims();
    let nd = d.n();
    let sobol = Sobol::new(nd);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shift = [0u32; MAX_DIM];
    for s in shift.iter_mut() {
        *s = rng.gen();
    }
    let (zw, tw) = d.ball_box(1.0);
    let mut best: Vec<(f64, Point)> = Vec::with_capacity(POLISH_STARTS + 1);
    let mut unit = [0.0; MAX_DIM];
    let mut coords = [0.0; MAX_DIM];
    for i in 0..n.max(1) {
        sobol.shifted_point(i as u32, &shift, &mut unit);
        for a in 0..nd {
            let w = if a < d.m() { zw } else { tw };
            coords[a] = (2.0 * unit[a] - 1.0) * w;
        }
        let y = Point::from_coords(&coords[..nd], &d);
        if gauge(&y, &d) >= 1.0 {
            continue;
        }
        let x = dilate_unchecked(&y, r, &d);
        let v = u.value(&x)?.abs();
        if best.len() < POLISH_STARTS || v > best[best.len() - 1].0 {
            best.push((v, x));
            best.sort_by(|a, b| b.0.total_cmp(&a.0));
            best.truncate(POLISH_STARTS);
        }
    }
    // the centre is always a candidate
    let centre = Point::origin(&d);
    let mut sup = u.value(&centre)?.abs();
    for (v, p) in best {
        sup = sup.max(polish(u, p, v, r, &d)?);
    }
    Ok(sup)
}
