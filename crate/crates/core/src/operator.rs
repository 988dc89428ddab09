//! Sparse complex matrices in compressed-row form.

use nalgebra::{DMatrix, DVector, Matrix4};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Row count above which matvec is split across threads. Each row is
/// summed sequentially in column order either way.
const PAR_MATVEC_ROWS: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<C64>,
    hermitian: bool,
}

/// JSON triplet schema: `{"dim": n, "hermitian": b, "entries": [[row, col, re, im], ...]}`
/// with entries in row-major order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TripletFile {
    pub dim: usize,
    pub hermitian: bool,
    pub entries: Vec<(usize, usize, f64, f64)>,
}

impl OperatorMatrix {
    /// Builds from unsorted triplets; duplicates are summed and exact zeros dropped.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_by_key(|a| (a.0, a.1));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "triplet ({r}, {c}) outside dimension {dim}");
            if let (Some(&lr), Some(&lc)) = (rows.last(), cols.last()) {
                if lr == r && lc == c {
                    *values.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            cols.push(c);
            values.push(v);
        }
        let mut keep_cols = Vec::with_capacity(cols.len());
        let mut keep_vals = Vec::with_capacity(values.len());
        for ((r, c), v) in rows.into_iter().zip(cols).zip(values) {
            if v != ZERO {
                row_ptr[r + 1] += 1;
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        let mut m = OperatorMatrix { dim, row_ptr, cols: keep_cols, values: keep_vals, hermitian: false };
        m.hermitian = m.hermiticity_residual() <= 1e-13;
        m
    }

    pub fn zeros(dim: usize) -> Self {
        OperatorMatrix { dim, row_ptr: vec![0; dim + 1], cols: Vec::new(), values: Vec::new(), hermitian: true }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![C64::new(1.0, 0.0); dim])
    }

    pub fn diagonal(diag: &[C64]) -> Self {
        let trip = diag.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Self::from_triplets(diag.len(), trip)
    }

    pub fn from_dense(m: &DMatrix<C64>) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        let mut trip = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let v = m[(r, c)];
                if v != ZERO {
                    trip.push((r, c, v));
                }
            }
        }
        Self::from_triplets(m.nrows(), trip)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// True when the matrix was found Hermitian to 1e-13 relative (max norm).
    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[span.clone()].binary_search(&c) {
            Ok(pos) => self.values[span.start + pos],
            Err(_) => ZERO,
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.dim);
        let row_dot = |r: usize| {
            let mut acc = ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.cols[k]];
            }
            acc
        };
        if self.dim >= PAR_MATVEC_ROWS {
            (0..self.dim).into_par_iter().map(row_dot).collect()
        } else {
            (0..self.dim).map(row_dot).collect()
        }
    }

    pub fn apply(&self, x: &DVector<C64>) -> DVector<C64> {
        DVector::from_vec(self.matvec(x.as_slice()))
    }

    pub fn adjoint(&self) -> Self {
        let trip = self.triplets().map(|(r, c, v)| (c, r, v.conj())).collect();
        Self::from_triplets(self.dim, trip)
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out.hermitian = self.hermitian && s.im == 0.0;
        out
    }

    /// Σ cᵢ Aᵢ over matrices of equal dimension.
    pub fn linear_combination(terms: &[(C64, &OperatorMatrix)]) -> Self {
        let dim = terms.first().map(|t| t.1.dim).unwrap_or(0);
        let mut trip = Vec::with_capacity(terms.iter().map(|t| t.1.nnz()).sum());
        for (c, m) in terms {
            assert_eq!(m.dim, dim);
            if *c == ZERO {
                continue;
            }
            trip.extend(m.triplets().map(|(r, col, v)| (r, col, *c * v)));
        }
        Self::from_triplets(dim, trip)
    }

    pub fn add(&self, other: &OperatorMatrix) -> Self {
        let one = C64::new(1.0, 0.0);
        Self::linear_combination(&[(one, self), (one, other)])
    }

    pub fn sub(&self, other: &OperatorMatrix) -> Self {
        Self::linear_combination(&[(C64::new(1.0, 0.0), self), (C64::new(-1.0, 0.0), other)])
    }

    pub fn matmul(&self, other: &OperatorMatrix) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut trip = Vec::new();
        let mut acc: Vec<C64> = vec![ZERO; self.dim];
        let mut touched: Vec<usize> = Vec::new();
        for r in 0..self.dim {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if acc[c] == ZERO {
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            for &c in &touched {
                trip.push((r, c, acc[c]));
                acc[c] = ZERO;
            }
            touched.clear();
        }
        Self::from_triplets(self.dim, trip)
    }

    /// U A U†
    pub fn conjugate_by(&self, u: &OperatorMatrix) -> Self {
        u.matmul(self).matmul(&u.adjoint())
    }

    /// Spin attachment `s ⊗ A` with combined ordinal `fock * 4 + spin`.
    pub fn kron_spin(spin: &Matrix4<C64>, photon: &OperatorMatrix) -> Self {
        let dim = 4 * photon.dim;
        let mut trip = Vec::with_capacity(photon.nnz() * 16);
        for (r, c, v) in photon.triplets() {
            for a in 0..4 {
                for b in 0..4 {
                    let s = spin[(a, b)];
                    if s != ZERO {
                        trip.push((4 * r + a, 4 * c + b, s * v));
                    }
                }
            }
        }
        Self::from_triplets(dim, trip)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::from_element(self.dim, self.dim, ZERO);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &OperatorMatrix) -> f64 {
        self.sub(other).max_abs()
    }

    /// ‖A − A†‖_max / ‖A‖_max (0 for the zero matrix).
    pub fn hermiticity_residual(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for (r, c, v) in self.triplets() {
            worst = worst.max((v - self.get(c, r).conj()).norm());
        }
        worst / scale
    }

    /// Upper bound on the spectral norm: the largest absolute row sum.
    pub fn norm_bound(&self) -> f64 {
        (0..self.dim).map(|r| self.row(r).map(|(_, v)| v.norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// ‖U†U − 1‖_max
    pub fn unitarity_residual(&self) -> f64 {
        self.adjoint().matmul(self).max_abs_diff(&Self::identity(self.dim))
    }

    pub fn to_triplet_file(&self) -> TripletFile {
        TripletFile {
            dim: self.dim,
            hermitian: self.hermitian,
            entries: self.triplets().map(|(r, c, v)| (r, c, v.re, v.im)).collect(),
        }
    }

    pub fn from_triplet_file(file: &TripletFile) -> Result<Self> {
        for &(r, c, _, _) in &file.entries {
            if r >= file.dim || c >= file.dim {
                return Err(Error::DimensionMismatch { expected: file.dim, got: r.max(c) + 1 });
            }
        }
        let trip = file.entries.iter().map(|&(r, c, re, im)| (r, c, C64::new(re, im))).collect();
        Ok(Self::from_triplets(file.dim, trip))
    }
}

pub fn vdot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn vnorm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn triplets_sum_duplicates_and_drop_zeros() {
        let m = OperatorMatrix::from_triplets(2, vec![(0, 1, c(1.0, 0.0)), (0, 1, c(2.0, 0.0)), (1, 0, c(0.0, 0.0))]);
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 1), c(3.0, 0.0));
        assert!(!m.is_hermitian());
    }

    #[test]
    fn matmul_matches_dense() {
        let a = OperatorMatrix::from_triplets(
            3,
            vec![(0, 0, c(1.0, 1.0)), (0, 2, c(2.0, 0.0)), (1, 1, c(-1.0, 0.5)), (2, 0, c(0.0, 3.0))],
        );
        let b = OperatorMatrix::from_triplets(3, vec![(0, 1, c(1.0, 0.0)), (2, 2, c(0.5, -1.0)), (1, 0, c(4.0, 0.0))]);
        let dense = a.to_dense() * b.to_dense();
        let sparse = a.matmul(&b).to_dense();
        assert!((dense - sparse).norm() < 1e-14);
    }

    #[test]
    fn hermitian_flag_and_adjoint() {
        let a = OperatorMatrix::from_triplets(2, vec![(0, 1, c(1.0, 2.0)), (1, 0, c(1.0, -2.0))]);
        assert!(a.is_hermitian());
        assert_eq!(a.adjoint(), a);
    }

    #[test]
    fn triplet_file_roundtrip() {
        let a = OperatorMatrix::from_triplets(3, vec![(2, 1, c(0.25, -1.0)), (0, 0, c(1.0, 0.0))]);
        let json = serde_json::to_string(&a.to_triplet_file()).unwrap();
        let back: TripletFile = serde_json::from_str(&json).unwrap();
        assert_eq!(OperatorMatrix::from_triplet_file(&back).unwrap(), a);
        let bad = TripletFile { dim: 2, hermitian: false, entries: vec![(2, 0, 1.0, 0.0)] };
        assert!(OperatorMatrix::from_triplet_file(&bad).is_err());
    }
}
