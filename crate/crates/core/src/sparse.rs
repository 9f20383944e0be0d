//! Thin helpers over faer's sparse matrices.

use std::io::Write;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

use crate::error::{Error, Result};

pub type SpMat = SparseColMat<usize, f64>;

/// Accumulates `(row, col, value)` entries; duplicates are summed.
#[derive(Debug, Default)]
pub(crate) struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<Triplet<usize, usize, f64>>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        TripletBuilder { nrows, ncols, entries: Vec::new() }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        if value != 0.0 {
            self.entries.push(Triplet::new(row, col, value));
        }
    }

    pub fn build(self) -> Result<SpMat> {
        SpMat::try_new_from_triplets(self.nrows, self.ncols, &self.entries)
            .map_err(|e| Error::Solver(format!("sparse assembly failed: {e:?}")))
    }
}

/// y = M x
pub fn matvec(m: &SpMat, x: &[f64]) -> Vec<f64> {
    assert_eq!(x.len(), m.ncols());
    let mut y = vec![0.0; m.nrows()];
    let (sym, vals) = m.parts();
    let ptr = sym.col_ptr();
    let rows = sym.row_idx();
    for (j, &xj) in x.iter().enumerate() {
        if xj == 0.0 {
            continue;
        }
        for k in ptr[j]..ptr[j + 1] {
            y[rows[k]] += vals[k] * xj;
        }
    }
    y
}

/// y = M^T x
pub fn matvec_transpose(m: &SpMat, x: &[f64]) -> Vec<f64> {
    assert_eq!(x.len(), m.nrows());
    let (sym, vals) = m.parts();
    let ptr = sym.col_ptr();
    let rows = sym.row_idx();
    (0..m.ncols())
        .map(|j| (ptr[j]..ptr[j + 1]).map(|k| vals[k] * x[rows[k]]).sum())
        .collect()
}

pub fn column_nnz(m: &SpMat, j: usize) -> usize {
    let ptr = m.symbolic().col_ptr();
    ptr[j + 1] - ptr[j]
}

/// Entries of column `j` as `(row, value)` pairs.
pub fn column(m: &SpMat, j: usize) -> Vec<(usize, f64)> {
    let (sym, vals) = m.parts();
    let ptr = sym.col_ptr();
    (ptr[j]..ptr[j + 1]).map(|k| (sym.row_idx()[k], vals[k])).collect()
}

pub fn product(a: &SpMat, b: &SpMat) -> SpMat {
    a * b
}

pub fn gram(m: &SpMat) -> Result<SpMat> {
    let t = m
        .transpose()
        .to_col_major()
        .map_err(|e| Error::Solver(format!("transpose failed: {e:?}")))?;
    Ok(&t * m)
}

/// Adds `shift` to every diagonal entry of a square matrix.
pub(crate) fn shift_diagonal(m: &SpMat, shift: f64) -> Result<SpMat> {
    let n = m.nrows();
    let mut b = TripletBuilder::new(n, m.ncols());
    for j in 0..m.ncols() {
        for (i, v) in column(m, j) {
            b.push(i, j, v);
        }
    }
    for i in 0..n {
        b.entries.push(Triplet::new(i, i, shift));
    }
    b.build()
}

/// Levenberg-Marquardt damping: multiplies every diagonal entry by `1 + lambda`.
pub(crate) fn damp_diagonal(m: &SpMat, lambda: f64) -> Result<SpMat> {
    let mut b = TripletBuilder::new(m.nrows(), m.ncols());
    for j in 0..m.ncols() {
        for (i, v) in column(m, j) {
            b.push(i, j, if i == j { v * (1.0 + lambda) } else { v });
        }
    }
    b.build()
}

pub(crate) fn max_diagonal(m: &SpMat) -> f64 {
    (0..m.ncols())
        .flat_map(|j| column(m, j).into_iter().filter(move |&(i, _)| i == j).map(|(_, v)| v))
        .fold(0.0, f64::max)
}

/// Solves `m x = b` for a symmetric positive definite `m` by sparse
/// Cholesky; each right-hand side is one vector.
pub fn solve_spd(m: &SpMat, rhs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = m.nrows();
    let llt = m
        .sp_cholesky(Side::Lower)
        .map_err(|e| Error::Solver(format!("cholesky failed: {e:?}")))?;
    let b = Mat::from_fn(n, rhs.len(), |i, j| rhs[j][i]);
    let x = llt.solve(&b);
    let out: Vec<Vec<f64>> = (0..rhs.len()).map(|j| (0..n).map(|i| x[(i, j)]).collect()).collect();
    if out.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Solver("non-finite solution".into()));
    }
    Ok(out)
}

/// Matrix Market coordinate format, 1-based indices.
pub fn write_matrix_market<W: Write>(mut w: W, m: &SpMat) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    let nnz = m.compute_nnz();
    writeln!(w, "{} {} {}", m.nrows(), m.ncols(), nnz)?;
    for j in 0..m.ncols() {
        for (i, v) in column(m, j) {
            writeln!(w, "{} {} {}", i + 1, j + 1, v)?;
        }
    }
    Ok(())
}
