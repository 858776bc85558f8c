//! Small sparse-matrix container and thin wrappers over faer's factorizations.

use std::io::{self, Write};
use std::ops::AddAssign;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Compressed sparse row matrix with entries in deterministic (row, column) order.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T> CsrMatrix<T>
where
    T: Copy + AddAssign + PartialEq + Default,
{
    /// Builds from unsorted triplets, summing duplicates and dropping exact zeros.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, T)>) -> Self {
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<T> = Vec::with_capacity(triplets.len());
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            if let (Some(&lr), Some(&lc)) = (rows.last(), col_idx.last()) {
                if lr == r && lc == c {
                    *values.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            col_idx.push(c);
            values.push(v);
        }
        let zero = T::default();
        let mut keep_rows = Vec::with_capacity(rows.len());
        let mut keep_cols = Vec::with_capacity(rows.len());
        let mut keep_vals = Vec::with_capacity(rows.len());
        for ((r, c), v) in rows.into_iter().zip(col_idx).zip(values) {
            if v != zero {
                keep_rows.push(r);
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for &r in &keep_rows {
            row_ptr[r + 1] += 1;
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { nrows, ncols, row_ptr, col_idx: keep_cols, values: keep_vals }
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

    /// Entries of one row as `(column, value)`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[span.clone()].binary_search(&c) {
            Ok(k) => self.values[span.start + k],
            Err(_) => T::default(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.nrows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }
}

impl CsrMatrix<Complex64> {
    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows).map(|r| self.row(r).map(|(c, v)| v * x[c]).sum()).collect()
    }

    /// Writes `row col re im` lines, one per stored entry.
    pub fn write_coordinate<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "% {} {} {}", self.nrows, self.ncols, self.nnz())?;
        for (r, c, v) in self.iter() {
            writeln!(out, "{r} {c} {:.17e} {:.17e}", v.re, v.im)?;
        }
        Ok(())
    }
}

/// Solves a real square sparse system `A x = b` by LU with partial pivoting.
pub fn solve_real_sparse(n: usize, triplets: &[(usize, usize, f64)], rhs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let entries: Vec<Triplet<usize, usize, f64>> = triplets.iter().map(|&(r, c, v)| Triplet::new(r, c, v)).collect();
    let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &entries)
        .map_err(|e| Error::Linalg(format!("{e:?}")))?;
    let lu = mat.sp_lu().map_err(|e| Error::Singular(format!("{e:?}")))?;
    let mut out = Vec::with_capacity(rhs.len());
    for b in rhs {
        let b = Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
        let x = lu.solve(&b);
        let x: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular("non-finite solution".to_string()));
        }
        out.push(x);
    }
    Ok(out)
}

/// Complex counterpart of [`solve_real_sparse`].
pub fn solve_complex_sparse(
    n: usize,
    triplets: &[(usize, usize, Complex64)],
    rhs: &[Complex64],
) -> Result<Vec<Complex64>> {
    let entries: Vec<Triplet<usize, usize, Complex64>> =
        triplets.iter().map(|&(r, c, v)| Triplet::new(r, c, v)).collect();
    let mat = SparseColMat::<usize, Complex64>::try_new_from_triplets(n, n, &entries)
        .map_err(|e| Error::Linalg(format!("{e:?}")))?;
    let lu = mat.sp_lu().map_err(|e| Error::Singular(format!("{e:?}")))?;
    let b = Mat::<Complex64>::from_fn(n, 1, |i, _| rhs[i]);
    let x = lu.solve(&b);
    let x: Vec<Complex64> = (0..n).map(|i| x[(i, 0)]).collect();
    if x.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::Singular("non-finite solution".to_string()));
    }
    Ok(x)
}

/// Eigenvalues (ascending) of a Hermitian matrix stored row-major, reading the lower triangle.
pub fn hermitian_eigenvalues(dim: usize, data: &[Complex64]) -> Result<Vec<f64>> {
    assert_eq!(data.len(), dim * dim);
    if dim == 0 {
        return Ok(Vec::new());
    }
    if dim == 1 {
        return Ok(vec![data[0].re]);
    }
    let mat = Mat::<Complex64>::from_fn(dim, dim, |i, j| data[i * dim + j]);
    mat.self_adjoint_eigenvalues(Side::Lower).map_err(|e| Error::Linalg(format!("{e:?}")))
}
