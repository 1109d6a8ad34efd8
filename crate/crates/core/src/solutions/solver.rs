//! Finite-difference solver for `X_i(a_ij X_j u) = V u` with Dirichlet data.
//!
//! In coordinates the operator is `d_a(c_ab d_b u)` with `c = D A D` and
//! `D = diag(1, ..., 1, |z|^beta, ..., |z|^beta)`. Diagonal terms use
//! face-centred coefficients, mixed terms the symmetric four-point cross
//! stencil. The assembled matrix is `-L_h + diag(V)`, solved by conjugate
//! gradients with a Jacobi preconditioner.

use rayon::prelude::*;

use super::grid::{GridSolution, GridSpec};
use super::SolutionField;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::fields::{CoefficientField, Potential};
use crate::geometry::Point;
use crate::linalg::MatN;

pub const SOLVER_TOLERANCE: f64 = 1e-10;

/// Compressed sparse rows.
#[derive(Clone, Debug, Default)]
pub struct Csr {
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csr {
    pub fn rows(&self) -> usize {
        self.row_ptr.len().saturating_sub(1)
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (s, e) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.cols[s..e]
            .iter()
            .position(|&x| x == c)
            .map_or(0.0, |k| self.vals[s + k])
    }

    pub fn mul_into(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().for_each(|(r, out)| {
            let (s, e) = (self.row_ptr[r], self.row_ptr[r + 1]);
            let mut acc = 0.0;
            for k in s..e {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *out = acc;
        });
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows()).map(|r| self.get(r, r)).collect()
    }

    /// Largest `|M_rc - M_cr|`.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.rows() {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.cols[k];
                worst = worst.max((self.vals[k] - self.get(c, r)).abs());
            }
        }
        worst
    }
}

/// Linear system for the interior nodes.
pub struct Assembled {
    pub matrix: Csr,
    pub rhs: Vec<f64>,
    /// Flat grid index of each unknown.
    pub unknowns: Vec<usize>,
    /// Nodal values with the Dirichlet data filled in.
    pub values: Vec<f64>,
}

/// The coordinate coefficient matrix `D A D` at q.
fn coordinate_coefficients(a: &dyn CoefficientField, q: &Point) -> MatN {
    let d = a.dims();
    let zb = q.z_norm().powf(d.beta());
    let mut c = a.matrix(q);
    let n = d.n();
    for i in 0..n {
        for j in 0..n {
            let w = (if i < d.m() { 1.0 } else { zb }) * (if j < d.m() { 1.0 } else { zb });
            c.set(i, j, c.get(i, j) * w);
        }
    }
    c
}

fn offset(spec: &GridSpec, idx: &[usize], axis: usize, by: isize) -> Option<[usize; 8]> {
    let mut out = [0usize; 8];
    out[..idx.len()].copy_from_slice(idx);
    let v = idx[axis] as isize + by;
    if v < 0 || v >= spec.n[axis] as isize {
        return None;
    }
    out[axis] = v as usize;
    Some(out)
}

pub fn assemble(
    a: &dyn CoefficientField,
    v: &Potential,
    spec: &GridSpec,
    boundary: &dyn ScalarField,
) -> Result<Assembled> {
    let d = a.dims();
    if spec.dims != d || v.dims() != d || boundary.dims() != d {
        return Err(Error::invalid("grid, coefficients, potential and boundary data must share dimensions"));
    }
    let n = d.n();
    let strides = spec.strides();
    let total = spec.len();
    let values: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|i| {
            if spec.is_boundary(i) {
                boundary.value(&spec.node(i))
            } else {
                Ok(0.0)
            }
        })
        .collect::<Result<_>>()?;
    let unknowns: Vec<usize> = (0..total).filter(|&i| !spec.is_boundary(i)).collect();
    let mut unknown_of = vec![usize::MAX; total];
    for (u, &i) in unknowns.iter().enumerate() {
        unknown_of[i] = u;
    }
    let flat = |idx: &[usize; 8]| (0..n).map(|a| idx[a] * strides[a]).sum::<usize>();
    let mixed = !a.is_identity();

    // each row: (entries over grid nodes, potential term)
    let rows: Vec<(Vec<(usize, f64)>, f64)> = unknowns
        .par_iter()
        .map(|&node| -> Result<(Vec<(usize, f64)>, f64)> {
            let idx = spec.multi_index(node);
            let x = spec.node(node);
            let mut entries: Vec<(usize, f64)> = Vec::with_capacity(1 + 2 * n + 4 * n * n);
            let mut diag = 0.0;
            for ax in 0..n {
                let h = spec.h[ax];
                for side in [-1.0f64, 1.0] {
                    let mut face = x;
                    face.coords_mut()[ax] += 0.5 * side * h;
                    let c = coordinate_coefficients(a, &face).get(ax, ax) / (h * h);
                    let nb = offset(spec, &idx[..n], ax, side as isize).expect("interior node");
                    entries.push((flat(&nb), -c));
                    diag += c;
                }
            }
            if mixed {
                for ax in 0..n {
                    for bx in 0..n {
                        if ax == bx {
                            continue;
                        }
                        // d_a(c_ab d_b u): coefficients at the a-neighbours
                        let scale = 1.0 / (4.0 * spec.h[ax] * spec.h[bx]);
                        for sa in [-1isize, 1] {
                            let na = offset(spec, &idx[..n], ax, sa).expect("interior node");
                            let c = coordinate_coefficients(a, &spec.node(flat(&na))).get(ax, bx) * scale;
                            if c == 0.0 {
                                continue;
                            }
                            for sb in [-1isize, 1] {
                                let corner = offset(spec, &na[..n], bx, sb).expect("interior node");
                                // -L_h carries the opposite sign
                                entries.push((flat(&corner), -(sa * sb) as f64 * c));
                            }
                        }
                    }
                }
            }
            entries.push((node, diag));
            Ok((entries, v.value(&x)?))
        })
        .collect::<Result<_>>()?;

    let mut matrix = Csr {
        row_ptr: Vec::with_capacity(unknowns.len() + 1),
        ..Csr::default()
    };
    matrix.row_ptr.push(0);
    let mut rhs = vec![0.0; unknowns.len()];
    for (r, (entries, pot)) in rows.into_iter().enumerate() {
        let mut merged: std::collections::BTreeMap<usize, f64> = std::collections::BTreeMap::new();
        for (node, val) in entries {
            *merged.entry(node).or_insert(0.0) += val;
        }
        *merged.entry(unknowns[r]).or_insert(0.0) += pot;
        for (node, val) in merged {
            let u = unknown_of[node];
            if u == usize::MAX {
                rhs[r] -= val * values[node];
            } else if val != 0.0 {
                matrix.cols.push(u);
                matrix.vals.push(val);
            }
        }
        matrix.row_ptr.push(matrix.cols.len());
    }
    Ok(Assembled {
        matrix,
        rhs,
        unknowns,
        values,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct CgOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned conjugate gradients from `x`, to `||r|| <= tol ||b||`.
pub fn pcg(m: &Csr, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<CgOutcome> {
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    let diag = m.diagonal();
    if let Some(r) = diag.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::Indefinite {
            iteration: 0,
            curvature: diag[r],
        });
    }
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgOutcome {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let len = b.len();
    let mut ax = vec![0.0; len];
    m.mul_into(x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut zv: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut p = zv.clone();
    let mut rz = dot(&r, &zv);
    let mut mp = vec![0.0; len];
    for it in 0..max_iter {
        let res = dot(&r, &r).sqrt() / bnorm;
        if res <= tol {
            return Ok(CgOutcome {
                iterations: it,
                relative_residual: res,
            });
        }
        m.mul_into(&p, &mut mp);
        let curv = dot(&p, &mp);
        if !(curv > 0.0) {
            return Err(Error::Indefinite {
                iteration: it,
                curvature: curv,
            });
        }
        let alpha = rz / curv;
        for i in 0..len {
            x[i] += alpha * p[i];
            r[i] -= alpha * mp[i];
        }
        for i in 0..len {
            zv[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &zv);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..len {
            p[i] = zv[i] + beta * p[i];
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: dot(&r, &r).sqrt() / bnorm,
    })
}

/// Solves the Dirichlet problem on `spec` with boundary values from `boundary`.
pub fn solve_fd(
    a: &dyn CoefficientField,
    v: &Potential,
    spec: &GridSpec,
    boundary: &dyn SolutionField,
) -> Result<GridSolution> {
    let sys = assemble(a, v, spec, boundary)?;
    let mut x = vec![0.0; sys.unknowns.len()];
    let max_iter = 20 * sys.unknowns.len().max(100);
    pcg(&sys.matrix, &sys.rhs, &mut x, SOLVER_TOLERANCE, max_iter)?;
    let mut values = sys.values;
    for (u, &node) in sys.unknowns.iter().enumerate() {
        values[node] = x[u];
    }
    Ok(GridSolution {
        spec: spec.clone(),
        values,
        boundary: boundary.name(),
    })
}
