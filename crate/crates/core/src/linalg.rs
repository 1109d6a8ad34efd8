//! Stack-allocated vectors and matrices sized for the low-dimensional
//! spaces this crate works in (N = m + k <= [`MAX_DIM`]).

use std::ops::{Index, IndexMut};

use nalgebra::{DMatrix, SymmetricEigen};

/// Largest supported ambient dimension N = m + k.
pub const MAX_DIM: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VecN {
    data: [f64; MAX_DIM],
    len: usize,
}

impl VecN {
    pub fn zeros(len: usize) -> Self {
        assert!(len <= MAX_DIM, "dimension {len} exceeds MAX_DIM");
        VecN { data: [0.0; MAX_DIM], len }
    }

    pub fn from_slice(values: &[f64]) -> Self {
        let mut v = VecN::zeros(values.len());
        v.data[..values.len()].copy_from_slice(values);
        v
    }

    pub fn basis(len: usize, i: usize) -> Self {
        let mut v = VecN::zeros(len);
        v.data[i] = 1.0;
        v
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data[..self.len]
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data[..self.len]
    }

    #[inline]
    pub fn dot(&self, other: &VecN) -> f64 {
        debug_assert_eq!(self.len, other.len);
        self.as_slice()
            .iter()
            .zip(other.as_slice())
            .map(|(a, b)| a * b)
            .sum()
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scaled(mut self, s: f64) -> Self {
        for x in self.as_mut_slice() {
            *x *= s;
        }
        self
    }

    pub fn max_abs_diff(&self, other: &VecN) -> f64 {
        self.as_slice()
            .iter()
            .zip(other.as_slice())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Index<usize> for VecN {
    type Output = f64;
    #[inline]
    fn index(&self, i: usize) -> &f64 {
        &self.as_slice()[i]
    }
}

impl IndexMut<usize> for VecN {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.as_mut_slice()[i]
    }
}

/// Dense square matrix of order at most [`MAX_DIM`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatN {
    data: [[f64; MAX_DIM]; MAX_DIM],
    n: usize,
}

impl MatN {
    pub fn zeros(n: usize) -> Self {
        assert!(n <= MAX_DIM, "dimension {n} exceeds MAX_DIM");
        MatN {
            data: [[0.0; MAX_DIM]; MAX_DIM],
            n,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut a = MatN::zeros(n);
        for i in 0..n {
            a.data[i][i] = 1.0;
        }
        a
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut a = MatN::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "matrix must be square");
            a.data[i][..n].copy_from_slice(row);
        }
        a
    }

    pub fn filled(n: usize, value: f64) -> Self {
        let mut a = MatN::zeros(n);
        for i in 0..n {
            for j in 0..n {
                a.data[i][j] = value;
            }
        }
        a
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i][j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i][j] = v;
    }

    pub fn mul_vec(&self, v: &VecN) -> VecN {
        debug_assert_eq!(self.n, v.len());
        let mut out = VecN::zeros(self.n);
        for i in 0..self.n {
            let mut s = 0.0;
            for j in 0..self.n {
                s += self.data[i][j] * v[j];
            }
            out[i] = s;
        }
        out
    }

    /// `<A v, v>`.
    pub fn quad_form(&self, v: &VecN) -> f64 {
        self.mul_vec(v).dot(v)
    }

    pub fn sub(&self, other: &MatN) -> MatN {
        let mut out = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                out.data[i][j] -= other.data[i][j];
            }
        }
        out
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                worst = worst.max((self.data[i][j] - self.data[j][i]).abs());
            }
        }
        worst
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                s += self.data[i][j] * self.data[i][j];
            }
        }
        s.sqrt()
    }

    /// Extreme eigenvalues of the symmetric part.
    pub fn symmetric_eigen_range(&self) -> (f64, f64) {
        let m = DMatrix::from_fn(self.n, self.n, |i, j| {
            0.5 * (self.data[i][j] + self.data[j][i])
        });
        let eig = SymmetricEigen::new(m).eigenvalues;
        let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }
}
