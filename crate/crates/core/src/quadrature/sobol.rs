//! Sobol points in up to [`MAX_DIM`] dimensions, 32-bit resolution.
//!
//! Direction numbers for dimensions 2..8 are the Joe-Kuo `new-joe-kuo-6.21201`
//! primitive polynomials and initial values.

use crate::linalg::MAX_DIM;

const BITS: usize = 32;

/// (degree s, polynomial coefficients a, initial direction integers m_1..m_s)
const JOE_KUO: [(u32, u32, &[u32]); MAX_DIM - 1] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
];

#[derive(Clone, Debug)]
pub struct Sobol {
    dim: usize,
    /// `directions[d][k]` is v_{k+1} for coordinate d, left-aligned in 32 bits.
    directions: Vec<[u32; BITS]>,
}

impl Sobol {
    pub fn new(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "Sobol dimension {dim} unsupported");
        let mut directions = Vec::with_capacity(dim);
        let mut first = [0u32; BITS];
        for (k, v) in first.iter_mut().enumerate() {
            *v = 1u32 << (BITS - 1 - k);
        }
        directions.push(first);
        for &(s, a, m) in JOE_KUO.iter().take(dim - 1) {
            let s = s as usize;
            let mut v = [0u32; BITS];
            for k in 0..s {
                v[k] = m[k] << (BITS - 1 - k);
            }
            for k in s..BITS {
                let mut x = v[k - s] ^ (v[k - s] >> s);
                for l in 1..s {
                    if (a >> (s - 1 - l)) & 1 == 1 {
                        x ^= v[k - l];
                    }
                }
                v[k] = x;
            }
            directions.push(v);
        }
        Sobol { dim, directions }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Integer coordinates of point `index` (Gray-code order, point 0 at the origin).
    pub fn point_bits(&self, index: u32, out: &mut [u32]) {
        let gray = index ^ (index >> 1);
        for (d, o) in out.iter_mut().enumerate().take(self.dim) {
            let mut x = 0u32;
            let mut g = gray;
            let mut k = 0;
            while g != 0 {
                if g & 1 == 1 {
                    x ^= self.directions[d][k];
                }
                g >>= 1;
                k += 1;
            }
            *o = x;
        }
    }

    /// Point `index` with a digital shift applied, mapped to cell midpoints in (0, 1).
    pub fn shifted_point(&self, index: u32, shift: &[u32], out: &mut [f64]) {
        let mut bits = [0u32; MAX_DIM];
        self.point_bits(index, &mut bits);
        for d in 0..self.dim {
            out[d] = ((bits[d] ^ shift[d]) as f64 + 0.5) / 4_294_967_296.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_points_match_reference() {
        // standard Sobol sequence in two dimensions
        let s = Sobol::new(2);
        let expect = [(0.0, 0.0), (0.5, 0.5), (0.75, 0.25), (0.25, 0.75), (0.375, 0.375), (0.875, 0.875)];
        let mut b = [0u32; 2];
        for (i, (x, y)) in expect.iter().enumerate() {
            s.point_bits(i as u32, &mut b);
            assert_eq!(b[0] as f64 / 4_294_967_296.0, *x);
            assert_eq!(b[1] as f64 / 4_294_967_296.0, *y);
        }
    }

    #[test]
    fn one_dimensional_projections_are_stratified() {
        let s = Sobol::new(MAX_DIM);
        let k = 10;
        let n = 1u32 << k;
        let mut b = [0u32; MAX_DIM];
        for d in 0..MAX_DIM {
            let mut seen = vec![false; n as usize];
            for i in 0..n {
                s.point_bits(i, &mut b);
                let cell = (b[d] >> (32 - k)) as usize;
                assert!(!seen[cell], "dimension {d} repeats cell {cell}");
                seen[cell] = true;
            }
        }
    }

    #[test]
    fn pairs_are_stratified_on_elementary_boxes() {
        // every pair of the first four coordinates: 2^8 points, one per 16 x 16 cell
        let s = Sobol::new(4);
        let mut b = [0u32; 4];
        for d1 in 0..4 {
            for d2 in (d1 + 1)..4 {
                let mut counts = vec![0; 256];
                for i in 0..(1u32 << 12) {
                    s.point_bits(i, &mut b);
                    counts[((b[d1] >> 28) * 16 + (b[d2] >> 28)) as usize] += 1;
                }
                assert!(counts.iter().all(|&c| c == 16), "dims {d1},{d2}");
            }
        }
    }
}
