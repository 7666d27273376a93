//! Compressed-sparse-row complex matrices.

use ndarray::Array2;
use num_complex::Complex64 as C64;

/// Complex CSR matrix. Column indices within a row are sorted and unique.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![C64::new(1.0, 0.0); n],
        }
    }

    pub fn diagonal(diag: &[C64]) -> Self {
        Self::from_triplets(
            diag.len(),
            diag.len(),
            diag.iter().enumerate().map(|(i, &v)| (i, i, v)),
        )
    }

    /// Builds from (row, col, value) triplets; duplicates are summed and
    /// explicit zeros dropped.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, C64)>,
    ) -> Self {
        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); nrows];
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r},{c}) out of bounds");
            rows[r].push((c, v));
        }
        let mut b = CsrBuilder::new(nrows, ncols);
        for row in rows.iter_mut() {
            b.push_row(row);
        }
        b.finish()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let (s, e) = (self.indptr[i], self.indptr[i + 1]);
        self.indices[s..e]
            .iter()
            .copied()
            .zip(self.values[s..e].iter().copied())
    }

    pub fn row_slices(&self, i: usize) -> (&[usize], &[C64]) {
        let (s, e) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[s..e], &self.values[s..e])
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let (idx, val) = self.row_slices(i);
        match idx.binary_search(&j) {
            Ok(k) => val[k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// y = A x
    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let (idx, val) = self.row_slices(i);
            let mut acc = C64::new(0.0, 0.0);
            for (&j, &v) in idx.iter().zip(val) {
                acc += v * x[j];
            }
            *yi = acc;
        }
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.nrows];
        self.matvec(x, &mut y);
        y
    }

    pub fn adjoint(&self) -> Self {
        let trip = (0..self.nrows)
            .flat_map(|i| self.row(i).map(move |(j, v)| (j, i, v.conj())))
            .collect::<Vec<_>>();
        Self::from_triplets(self.ncols, self.nrows, trip)
    }

    pub fn scale(&self, c: C64) -> Self {
        if c == C64::new(0.0, 0.0) {
            return Self::zeros(self.nrows, self.ncols);
        }
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// self + c * other
    pub fn add_scaled(&self, other: &Self, c: C64) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut b = CsrBuilder::new(self.nrows, self.ncols);
        let mut row = Vec::new();
        for i in 0..self.nrows {
            row.clear();
            row.extend(self.row(i));
            row.extend(other.row(i).map(|(j, v)| (j, c * v)));
            b.push_row(&mut row);
        }
        b.finish()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows);
        let mut b = CsrBuilder::new(self.nrows, other.ncols);
        let mut row = Vec::new();
        for i in 0..self.nrows {
            row.clear();
            for (k, a) in self.row(i) {
                row.extend(other.row(k).map(|(j, v)| (j, a * v)));
            }
            b.push_row(&mut row);
        }
        b.finish()
    }

    pub fn to_dense(&self) -> Array2<C64> {
        let mut m = Array2::zeros((self.nrows, self.ncols));
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                m[[i, j]] += v;
            }
        }
        m
    }

    pub fn from_dense(m: &Array2<C64>) -> Self {
        let (r, c) = m.dim();
        Self::from_triplets(
            r,
            c,
            m.indexed_iter()
                .filter(|(_, v)| v.norm() > 0.0)
                .map(|((i, j), &v)| (i, j, v)),
        )
    }

    /// Largest elementwise |A - A^dagger|.
    pub fn hermiticity_error(&self) -> f64 {
        let diff = self.add_scaled(&self.adjoint(), C64::new(-1.0, 0.0));
        diff.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|i| self.row(i).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.nrows).all(|i| self.row(i).all(|(j, _)| j == i))
    }
}

/// Row-by-row CSR construction with duplicate merging.
pub(crate) struct CsrBuilder {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl CsrBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        let mut indptr = Vec::with_capacity(nrows + 1);
        indptr.push(0);
        Self {
            nrows,
            ncols,
            indptr,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, nnz: usize) -> Self {
        let mut b = Self::new(nrows, ncols);
        b.indices.reserve(nnz);
        b.values.reserve(nnz);
        b
    }

    /// Appends the next row. The scratch vector is sorted in place.
    pub fn push_row(&mut self, entries: &mut [(usize, C64)]) {
        entries.sort_unstable_by_key(|e| e.0);
        let mut k = 0;
        while k < entries.len() {
            let col = entries[k].0;
            let mut acc = C64::new(0.0, 0.0);
            while k < entries.len() && entries[k].0 == col {
                acc += entries[k].1;
                k += 1;
            }
            if acc != C64::new(0.0, 0.0) {
                self.indices.push(col);
                self.values.push(acc);
            }
        }
        self.indptr.push(self.indices.len());
    }

    pub fn finish(self) -> SparseMatrix {
        assert_eq!(self.indptr.len(), self.nrows + 1, "row count mismatch");
        SparseMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr: self.indptr,
            indices: self.indices,
            values: self.values,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn triplets_merge_and_products_match_dense() {
        let a = SparseMatrix::from_triplets(
            3,
            3,
            vec![(0, 1, c(1.0, 0.5)), (0, 1, c(1.0, 0.0)), (2, 0, c(0.0, -1.0)), (1, 1, c(3.0, 0.0))],
        );
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.get(0, 1), c(2.0, 0.5));
        let b = a.adjoint();
        let prod = a.matmul(&b).to_dense();
        let dense = a.to_dense().dot(&b.to_dense());
        assert_eq!(prod, dense);
        let x = vec![c(1.0, 0.0), c(0.0, 1.0), c(2.0, 2.0)];
        let y = a.mul_vec(&x);
        let yd = a.to_dense().dot(&ndarray::Array1::from(x));
        for (u, v) in y.iter().zip(yd.iter()) {
            assert!((u - v).norm() < 1e-15);
        }
        assert!(a.add_scaled(&a, c(-1.0, 0.0)).nnz() == 0);
    }
}
