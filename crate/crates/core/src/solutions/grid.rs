//! Tensor-product grids, nodal solutions and their multilinear interpolants.

use std::fmt::Write as _;

use super::SolutionField;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{Dims, Point};
use crate::linalg::{VecN, MAX_DIM};

/// Axis-aligned grid: node `i` on axis `a` sits at `lo[a] + i * h[a]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub dims: Dims,
    pub lo: Vec<f64>,
    pub h: Vec<f64>,
    pub n: Vec<usize>,
}

impl GridSpec {
    /// Grid on `|z_i| <= z_half`, `|t_j| <= t_half` with `nodes` per axis. The
    /// z-axes are shifted by half a cell so that no node has a zero z-coordinate.
    pub fn staggered_box(dims: Dims, z_half: f64, t_half: f64, nodes: usize) -> Result<Self> {
        if nodes < 3 {
            return Err(Error::invalid("need at least 3 nodes per axis"));
        }
        if !(z_half > 0.0 && t_half > 0.0) {
            return Err(Error::invalid("box half-widths must be positive"));
        }
        let (mut lo, mut h) = (Vec::new(), Vec::new());
        for a in 0..dims.n() {
            if a < dims.m() {
                let step = 2.0 * z_half / (nodes - 1) as f64;
                lo.push(-z_half - 0.5 * step);
                h.push(step);
            } else {
                let step = 2.0 * t_half / (nodes - 1) as f64;
                lo.push(-t_half);
                h.push(step);
            }
        }
        Ok(GridSpec {
            dims,
            lo,
            h,
            n: vec![nodes; dims.n()],
        })
    }

    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major strides (last axis fastest).
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.n.len()];
        for a in (0..self.n.len().saturating_sub(1)).rev() {
            s[a] = s[a + 1] * self.n[a + 1];
        }
        s
    }

    pub fn multi_index(&self, mut flat: usize) -> [usize; MAX_DIM] {
        let mut idx = [0; MAX_DIM];
        for a in (0..self.n.len()).rev() {
            idx[a] = flat % self.n[a];
            flat /= self.n[a];
        }
        idx
    }

    pub fn node(&self, flat: usize) -> Point {
        let idx = self.multi_index(flat);
        let mut c = [0.0; MAX_DIM];
        for a in 0..self.n.len() {
            c[a] = self.lo[a] + idx[a] as f64 * self.h[a];
        }
        Point::from_coords(&c[..self.n.len()], &self.dims)
    }

    pub fn is_boundary(&self, flat: usize) -> bool {
        let idx = self.multi_index(flat);
        (0..self.n.len()).any(|a| idx[a] == 0 || idx[a] == self.n[a] - 1)
    }

    pub fn hi(&self, axis: usize) -> f64 {
        self.lo[axis] + (self.n[axis] - 1) as f64 * self.h[axis]
    }

    /// Largest spacing over the axes.
    pub fn max_spacing(&self) -> f64 {
        self.h.iter().cloned().fold(0.0, f64::max)
    }
}

/// Nodal values on a grid, boundary nodes included.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSolution {
    pub spec: GridSpec,
    pub values: Vec<f64>,
    /// Where the Dirichlet data came from.
    pub boundary: String,
}

impl GridSolution {
    /// Text form: `# key=value` header lines, then one nodal value per line.
    pub fn to_text(&self) -> String {
        let s = &self.spec;
        let mut out = String::new();
        let _ = writeln!(out, "# m={}", s.dims.m());
        let _ = writeln!(out, "# k={}", s.dims.k());
        let _ = writeln!(out, "# beta={:.17e}", s.dims.beta());
        for a in 0..s.n.len() {
            let _ = writeln!(out, "# lo{a}={:.17e}", s.lo[a]);
            let _ = writeln!(out, "# h{a}={:.17e}", s.h[a]);
            let _ = writeln!(out, "# n{a}={}", s.n[a]);
        }
        let _ = writeln!(out, "# boundary={}", self.boundary);
        for v in &self.values {
            let _ = writeln!(out, "{v:.17e}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut header = std::collections::HashMap::new();
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.trim().split_once('=') {
                    header.insert(k.trim().to_string(), v.trim().to_string());
                }
                continue;
            }
            let v: f64 = line
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad value `{line}`", lineno + 1)))?;
            values.push(v);
        }
        let get = |k: &str| {
            header
                .get(k)
                .ok_or_else(|| Error::Parse(format!("missing header `{k}`")))
        };
        let num = |k: &str| -> Result<f64> {
            get(k)?
                .parse()
                .map_err(|_| Error::Parse(format!("bad header `{k}`")))
        };
        let int = |k: &str| -> Result<usize> {
            get(k)?
                .parse()
                .map_err(|_| Error::Parse(format!("bad header `{k}`")))
        };
        let dims = Dims::new(int("m")?, int("k")?, num("beta")?)?;
        let (mut lo, mut h, mut n) = (Vec::new(), Vec::new(), Vec::new());
        for a in 0..dims.n() {
            lo.push(num(&format!("lo{a}"))?);
            h.push(num(&format!("h{a}"))?);
            n.push(int(&format!("n{a}"))?);
        }
        let spec = GridSpec { dims, lo, h, n };
        if values.len() != spec.len() {
            return Err(Error::Parse(format!(
                "expected {} values, found {}",
                spec.len(),
                values.len()
            )));
        }
        Ok(GridSolution {
            spec,
            values,
            boundary: header.get("boundary").cloned().unwrap_or_default(),
        })
    }

    /// Largest nodal deviation from a reference field.
    pub fn max_error(&self, truth: &dyn ScalarField) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (i, v) in self.values.iter().enumerate() {
            worst = worst.max((v - truth.value(&self.spec.node(i))?).abs());
        }
        Ok(worst)
    }
}

/// Multilinear interpolant of a grid solution.
#[derive(Clone, Debug)]
pub struct GridField {
    grid: GridSolution,
    strides: Vec<usize>,
    sup: f64,
}

pub fn grid_to_field(g: GridSolution) -> GridField {
    let strides = g.spec.strides();
    let sup = g.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    GridField { grid: g, strides, sup }
}

impl GridField {
    pub fn grid(&self) -> &GridSolution {
        &self.grid
    }

    /// Cell base index and local coordinates in [0, 1] per axis.
    fn locate(&self, p: &Point) -> Result<([usize; MAX_DIM], [f64; MAX_DIM])> {
        let s = &self.grid.spec;
        let mut base = [0; MAX_DIM];
        let mut frac = [0.0; MAX_DIM];
        for a in 0..s.n.len() {
            let x = (p.coords()[a] - s.lo[a]) / s.h[a];
            let last = (s.n[a] - 1) as f64;
            if !(x >= -1e-9 && x <= last + 1e-9) {
                return Err(Error::OutOfDomain(format!(
                    "coordinate {a} = {} outside [{}, {}]",
                    p.coords()[a],
                    s.lo[a],
                    s.hi(a)
                )));
            }
            let x = x.clamp(0.0, last);
            let i = (x.floor() as usize).min(s.n[a] - 2);
            base[a] = i;
            frac[a] = x - i as f64;
        }
        Ok((base, frac))
    }
}

impl ScalarField for GridField {
    fn dims(&self) -> Dims {
        self.grid.spec.dims
    }

    fn value(&self, p: &Point) -> Result<f64> {
        let (base, frac) = self.locate(p)?;
        let n = self.grid.spec.n.len();
        let mut acc = 0.0;
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut flat = 0;
            for a in 0..n {
                let bit = (corner >> a) & 1;
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
                flat += (base[a] + bit) * self.strides[a];
            }
            if w != 0.0 {
                acc += w * self.grid.values[flat];
            }
        }
        Ok(acc)
    }

    /// Gradient of the interpolant inside the containing cell.
    fn gradient(&self, p: &Point) -> Result<VecN> {
        let (base, frac) = self.locate(p)?;
        let s = &self.grid.spec;
        let n = s.n.len();
        let mut g = VecN::zeros(n);
        for corner in 0..(1usize << n) {
            let mut flat = 0;
            for a in 0..n {
                flat += (base[a] + ((corner >> a) & 1)) * self.strides[a];
            }
            let v = self.grid.values[flat];
            for d in 0..n {
                let mut w = 1.0;
                for a in 0..n {
                    let bit = (corner >> a) & 1;
                    w *= if a == d {
                        if bit == 1 {
                            1.0 / s.h[a]
                        } else {
                            -1.0 / s.h[a]
                        }
                    } else if bit == 1 {
                        frac[a]
                    } else {
                        1.0 - frac[a]
                    };
                }
                g[d] += w * v;
            }
        }
        Ok(g)
    }
}

impl SolutionField for GridField {
    fn name(&self) -> String {
        format!("grid({})", self.grid.boundary)
    }

    fn kappa(&self) -> Option<f64> {
        None
    }

    fn exact_potential(&self) -> Option<crate::fields::Potential> {
        None
    }

    /// Max nodal magnitude, which bounds the interpolant everywhere.
    fn bound_c0(&self, _r: f64) -> f64 {
        self.sup
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sample_ball;

    fn linear_grid(nodes: usize) -> GridSolution {
        let d = Dims::desk();
        let spec = GridSpec::staggered_box(d, 1.0, 0.5, nodes).unwrap();
        let values = (0..spec.len())
            .map(|i| {
                let p = spec.node(i);
                2.0 * p.z()[0] - p.z()[1] + 3.0 * p.t()[0] + 0.5
            })
            .collect();
        GridSolution {
            spec,
            values,
            boundary: "linear".into(),
        }
    }

    #[test]
    fn staggered_nodes_avoid_zero() {
        let spec = GridSpec::staggered_box(Dims::desk(), 1.0, 0.5, 17).unwrap();
        for i in 0..spec.len() {
            let p = spec.node(i);
            assert!(p.z()[0].abs() > 1e-3 && p.z()[1].abs() > 1e-3);
        }
        assert_eq!(spec.len(), 17 * 17 * 17);
    }

    #[test]
    fn nodes_reproduce_values() {
        let g = grid_to_field(linear_grid(9));
        for i in (0..g.grid().spec.len()).step_by(7) {
            let p = g.grid().spec.node(i);
            assert_eq!(g.value(&p).unwrap(), g.grid().values[i]);
        }
    }

    #[test]
    fn interpolant_is_exact_on_linears() {
        let g = grid_to_field(linear_grid(9));
        for p in sample_ball(0.9, 200, 1, &Dims::desk()).unwrap() {
            let exact = 2.0 * p.z()[0] - p.z()[1] + 3.0 * p.t()[0] + 0.5;
            assert!((g.value(&p).unwrap() - exact).abs() < 1e-12);
            let grad = g.gradient(&p).unwrap();
            assert!(grad.max_abs_diff(&VecN::from_slice(&[2.0, -1.0, 3.0])) < 1e-12);
        }
    }

    #[test]
    fn outside_the_box_is_an_error() {
        let g = grid_to_field(linear_grid(5));
        let p = Point::new(&[0.0, 0.0], &[0.9]).unwrap();
        assert!(matches!(g.value(&p), Err(Error::OutOfDomain(_))));
    }

    #[test]
    fn text_round_trip() {
        let g = linear_grid(5);
        let back = GridSolution::from_text(&g.to_text()).unwrap();
        assert_eq!(back, g);
        assert!(GridSolution::from_text("# m=2\n1.0\n").is_err());
    }
}
