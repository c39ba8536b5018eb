//! Compressed sparse row matrices.
//!
//! Column indices within a row are always sorted and unique, so iteration
//! order is deterministic. Products keep intermediate results sparse.

use std::ops::{Add, Mul};

use ndarray::{Array2, ArrayView2};
use num_traits::{ToPrimitive, Zero};

use crate::error::{LspiError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<T>,
}

impl<T: Copy + Zero + Add<Output = T>> CsrMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            indptr: vec![0; rows + 1],
            indices: Vec::new(),
            data: Vec::new(),
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are summed
    /// and explicit zeros dropped.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, T)>,
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize, T)> = triplets.into_iter().collect();
        if let Some(&(r, c, _)) = entries.iter().find(|(r, c, _)| *r >= rows || *c >= cols) {
            return Err(LspiError::dims(
                "sparse triplet",
                (rows, cols),
                (r, c),
            ));
        }
        entries.sort_by_key(|&(r, c, _)| (r, c));

        let mut indptr = vec![0usize; rows + 1];
        let mut indices = Vec::with_capacity(entries.len());
        let mut data: Vec<T> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                let slot = data.last_mut().expect("entry exists");
                *slot = *slot + v;
            } else {
                indices.push(c);
                data.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..rows {
            indptr[r + 1] += indptr[r];
        }
        let mut m = Self {
            rows,
            cols,
            indptr,
            indices,
            data,
        };
        m.prune_zeros();
        Ok(m)
    }

    /// Builds a matrix from already-sorted per-row entries.
    pub(crate) fn from_rows(cols: usize, rows: Vec<Vec<(usize, T)>>) -> Self {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        indptr.push(0);
        let nnz = rows.iter().map(Vec::len).sum();
        let mut indices = Vec::with_capacity(nnz);
        let mut data = Vec::with_capacity(nnz);
        let n = rows.len();
        for row in rows {
            debug_assert!(row.windows(2).all(|w| w[0].0 < w[1].0));
            for (c, v) in row {
                indices.push(c);
                data.push(v);
            }
            indptr.push(indices.len());
        }
        Self {
            rows: n,
            cols,
            indptr,
            indices,
            data,
        }
    }

    pub fn identity(n: usize) -> Self
    where
        T: num_traits::One,
    {
        Self {
            rows: n,
            cols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            data: vec![T::one(); n],
        }
    }

    fn prune_zeros(&mut self)
    where
        T: Zero,
    {
        if self.data.iter().all(|v| !v.is_zero()) {
            return;
        }
        let mut indptr = vec![0usize; self.rows + 1];
        let mut indices = Vec::with_capacity(self.indices.len());
        let mut data = Vec::with_capacity(self.data.len());
        for r in 0..self.rows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                if !self.data[k].is_zero() {
                    indices.push(self.indices[k]);
                    data.push(self.data[k]);
                }
            }
            indptr[r + 1] = indices.len();
        }
        self.indptr = indptr;
        self.indices = indices;
        self.data = data;
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[T]) {
        let span = self.indptr[r]..self.indptr[r + 1];
        (&self.indices[span.clone()], &self.data[span])
    }

    pub fn row_nnz(&self, r: usize) -> usize {
        self.indptr[r + 1] - self.indptr[r]
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(k) => vals[k],
            Err(_) => T::zero(),
        }
    }

    /// Iterates `(row, col, value)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.rows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    pub fn row_sums(&self) -> Vec<T> {
        (0..self.rows)
            .map(|r| self.row(r).1.iter().fold(T::zero(), |acc, &v| acc + v))
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.cols + 1];
        for &c in &self.indices {
            counts[c + 1] += 1;
        }
        for c in 0..self.cols {
            counts[c + 1] += counts[c];
        }
        let indptr = counts.clone();
        let mut next = counts;
        let mut indices = vec![0usize; self.nnz()];
        let mut data = vec![T::zero(); self.nnz()];
        for (r, c, v) in self.iter() {
            let slot = next[c];
            indices[slot] = r;
            data[slot] = v;
            next[c] += 1;
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            indptr,
            indices,
            data,
        }
    }

    pub fn map<U, F>(&self, mut f: F) -> CsrMatrix<U>
    where
        U: Copy + Zero + Add<Output = U>,
        F: FnMut(usize, usize, T) -> U,
    {
        let mut data = Vec::with_capacity(self.nnz());
        for (r, c, v) in self.iter() {
            data.push(f(r, c, v));
        }
        let mut out = CsrMatrix {
            rows: self.rows,
            cols: self.cols,
            indptr: self.indptr.clone(),
            indices: self.indices.clone(),
            data,
        };
        out.prune_zeros();
        out
    }

    /// Same sparsity pattern with every stored entry set to one.
    pub fn pattern(&self) -> CsrMatrix<u8> {
        CsrMatrix {
            rows: self.rows,
            cols: self.cols,
            indptr: self.indptr.clone(),
            indices: self.indices.clone(),
            data: vec![1; self.nnz()],
        }
    }

    pub fn same_pattern<U>(&self, other: &CsrMatrix<U>) -> bool {
        (self.rows, self.cols) == (other.rows, other.cols)
            && self.indptr == other.indptr
            && self.indices == other.indices
    }

    /// Sparse-sparse product. Rows are accumulated with a dense scratch row,
    /// then the touched columns are sorted.
    pub fn matmul(&self, rhs: &Self) -> Result<Self>
    where
        T: Mul<Output = T>,
    {
        if self.cols != rhs.rows {
            return Err(LspiError::dims(
                "sparse matmul",
                (self.cols, "_"),
                rhs.shape(),
            ));
        }
        let mut acc = vec![T::zero(); rhs.cols];
        let mut seen = vec![false; rhs.cols];
        let mut touched: Vec<usize> = Vec::new();
        let mut indptr = Vec::with_capacity(self.rows + 1);
        indptr.push(0);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        for r in 0..self.rows {
            let (lc, lv) = self.row(r);
            for (&k, &a) in lc.iter().zip(lv) {
                let (rc, rv) = rhs.row(k);
                for (&c, &b) in rc.iter().zip(rv) {
                    if !seen[c] {
                        seen[c] = true;
                        touched.push(c);
                    }
                    acc[c] = acc[c] + a * b;
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                if !acc[c].is_zero() {
                    indices.push(c);
                    data.push(acc[c]);
                }
                acc[c] = T::zero();
                seen[c] = false;
            }
            touched.clear();
            indptr.push(indices.len());
        }
        Ok(Self {
            rows: self.rows,
            cols: rhs.cols,
            indptr,
            indices,
            data,
        })
    }

    pub fn to_dense(&self) -> Array2<f64>
    where
        T: ToPrimitive,
    {
        let mut out = Array2::zeros((self.rows, self.cols));
        for (r, c, v) in self.iter() {
            out[[r, c]] = v.to_f64().unwrap_or(f64::NAN);
        }
        out
    }
}

impl CsrMatrix<f64> {
    /// Sparse-dense product `self · dense`.
    pub fn spmm(&self, dense: &ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if self.cols != dense.nrows() {
            return Err(LspiError::dims(
                "sparse-dense matmul",
                (self.cols, dense.ncols()),
                dense.dim(),
            ));
        }
        let mut out = Array2::zeros((self.rows, dense.ncols()));
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            let mut out_row = out.row_mut(r);
            for (&c, &v) in cols.iter().zip(vals) {
                out_row.scaled_add(v, &dense.row(c));
            }
        }
        Ok(out)
    }
}

impl<T: Copy + ToPrimitive> CsrMatrix<T> {
    pub fn to_f64(&self) -> CsrMatrix<f64> {
        CsrMatrix {
            rows: self.rows,
            cols: self.cols,
            indptr: self.indptr.clone(),
            indices: self.indices.clone(),
            data: self
                .data
                .iter()
                .map(|v| v.to_f64().unwrap_or(f64::NAN))
                .collect(),
        }
    }
}
