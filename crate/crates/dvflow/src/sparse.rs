//! Compressed sparse row matrices and the symmetric positive definite solvers.

use crate::error::{Error, Result};
use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Side;

/// Row-compressed sparse matrix with sorted column indices per row.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Assemble from `(row, col, value)` triplets; duplicates are summed and
    /// entries that cancel to exactly zero are dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) outside {nrows}x{ncols}");
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(r, c, v) in triplets {
            let p = next[r];
            cols[p] = c;
            vals[p] = v;
            next[r] += 1;
        }
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        indptr.push(0);
        let mut row: Vec<(usize, f64)> = Vec::new();
        for i in 0..nrows {
            row.clear();
            for p in counts[i]..counts[i + 1] {
                row.push((cols[p], vals[p]));
            }
            row.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut s = 0.0;
                while k < row.len() && row[k].0 == c {
                    s += row[k].1;
                    k += 1;
                }
                if s != 0.0 {
                    indices.push(c);
                    values.push(s);
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix { nrows, ncols, indptr, indices, values }
    }

    pub fn diag(d: &[f64]) -> Self {
        let t: Vec<_> = d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Self::from_triplets(d.len(), d.len(), &t)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterator over the stored `(col, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.indptr[i]..self.indptr[i + 1];
        match self.indices[r.clone()].binary_search(&j) {
            Ok(p) => self.values[r.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                t.push((i, j, v));
            }
        }
        t
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for p in self.indptr[i]..self.indptr[i + 1] {
                s += self.values[p] * x[self.indices[p]];
            }
            *yi = s;
        }
    }

    pub fn transpose(&self) -> Self {
        let t: Vec<_> = self.triplets().into_iter().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, &t)
    }

    pub fn scale(&self, alpha: f64) -> Self {
        let mut m = self.clone();
        m.values.iter_mut().for_each(|v| *v *= alpha);
        m
    }

    /// `A * diag(d)`.
    pub fn scale_cols(&self, d: &[f64]) -> Self {
        assert_eq!(d.len(), self.ncols);
        let mut m = self.clone();
        for (p, v) in m.values.iter_mut().enumerate() {
            *v *= d[m.indices[p]];
        }
        m
    }

    /// `diag(d) * A`.
    pub fn scale_rows(&self, d: &[f64]) -> Self {
        assert_eq!(d.len(), self.nrows);
        let mut m = self.clone();
        for i in 0..m.nrows {
            for p in m.indptr[i]..m.indptr[i + 1] {
                m.values[p] *= d[i];
            }
        }
        m
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &CsrMatrix) -> Self {
        assert_eq!(self.ncols, other.nrows);
        let mut t = Vec::new();
        for i in 0..self.nrows {
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    t.push((i, j, a * b));
                }
            }
        }
        Self::from_triplets(self.nrows, other.ncols, &t)
    }

    /// `self + alpha * other`.
    pub fn add(&self, other: &CsrMatrix, alpha: f64) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut t = self.triplets();
        t.extend(other.triplets().into_iter().map(|(i, j, v)| (i, j, alpha * v)));
        Self::from_triplets(self.nrows, self.ncols, &t)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// True when every stored value is an integer; used for incidence matrices.
    pub fn is_integral(&self) -> bool {
        self.values.iter().all(|v| v.fract() == 0.0)
    }

    /// Exact integer product of two integral matrices; returns the number of
    /// nonzero entries of `self * other` computed in `i64`.
    pub fn integer_product_nonzeros(&self, other: &CsrMatrix) -> usize {
        assert!(self.is_integral() && other.is_integral());
        assert_eq!(self.ncols, other.nrows);
        let mut acc: std::collections::HashMap<usize, i64> = std::collections::HashMap::new();
        let mut bad = 0;
        for i in 0..self.nrows {
            acc.clear();
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    *acc.entry(j).or_insert(0) += (a as i64) * (b as i64);
                }
            }
            bad += acc.values().filter(|&&v| v != 0).count();
        }
        bad
    }
}

/// Threshold below which the direct factorization is used.
pub const DIRECT_SOLVE_LIMIT: usize = 200_000;

enum Backend {
    Direct(faer::sparse::linalg::solvers::Llt<usize, f64>),
    Cg { a: CsrMatrix, inv_diag: Vec<f64> },
}

/// Solver for a symmetric positive definite sparse matrix.
///
/// A sparse Cholesky factorization is used below [`DIRECT_SOLVE_LIMIT`]
/// unknowns and Jacobi-preconditioned conjugate gradients above it. The
/// handle is immutable after construction, so concurrent solves are safe.
pub struct SpdSolver {
    n: usize,
    backend: Backend,
}

impl std::fmt::Debug for SpdSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpdSolver").field("n", &self.n).field("direct", &self.is_direct()).finish()
    }
}

/// Relative residual tolerance of the iterative fallback.
pub const CG_TOLERANCE: f64 = 1e-12;

impl SpdSolver {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        Self::with_limit(a, DIRECT_SOLVE_LIMIT)
    }

    /// As [`SpdSolver::new`] with an explicit direct/iterative threshold.
    pub fn with_limit(a: &CsrMatrix, direct_limit: usize) -> Result<Self> {
        if a.nrows != a.ncols {
            return Err(Error::Solver(format!("matrix is {}x{}, not square", a.nrows, a.ncols)));
        }
        let n = a.nrows;
        if n < direct_limit {
            let t: Vec<Triplet<usize, usize, f64>> = a
                .triplets()
                .into_iter()
                .filter(|&(i, j, _)| i >= j)
                .map(|(i, j, v)| Triplet::new(i, j, v))
                .collect();
            let m = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &t)
                .map_err(|e| Error::Solver(format!("sparse assembly: {e:?}")))?;
            let llt = m
                .sp_cholesky(Side::Lower)
                .map_err(|e| Error::Solver(format!("cholesky: {e:?}")))?;
            Ok(SpdSolver { n, backend: Backend::Direct(llt) })
        } else {
            let mut inv_diag = vec![0.0; n];
            for (i, d) in inv_diag.iter_mut().enumerate() {
                let v = a.get(i, i);
                if v <= 0.0 {
                    return Err(Error::Solver(format!("nonpositive diagonal at row {i}")));
                }
                *d = 1.0 / v;
            }
            Ok(SpdSolver { n, backend: Backend::Cg { a: a.clone(), inv_diag } })
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_direct(&self) -> bool {
        matches!(self.backend, Backend::Direct(_))
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::ShapeMismatch { expected: self.n, got: b.len() });
        }
        match &self.backend {
            Backend::Direct(llt) => {
                let rhs = faer::MatRef::from_column_major_slice(b, self.n, 1);
                let x = llt.solve(rhs);
                let out: Vec<f64> = (0..self.n).map(|i| x[(i, 0)]).collect();
                if out.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Solver("non-finite solution".into()));
                }
                Ok(out)
            }
            Backend::Cg { a, inv_diag } => pcg(a, inv_diag, b, CG_TOLERANCE, 20 * self.n + 100),
        }
    }
}

/// Jacobi-preconditioned conjugate gradients.
pub fn pcg(a: &CsrMatrix, inv_diag: &[f64], b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = b.len();
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for _ in 0..max_iter {
        a.matvec_into(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if dot(&r, &r).sqrt() <= tol * bnorm {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Solver(format!("conjugate gradients did not reach {tol:e} in {max_iter} iterations")))
}

/// Solver for a symmetric positive semidefinite matrix whose kernel is the
/// constants, returning the solution with zero weighted mean.
///
/// The compatible right-hand side is solved with one pinned unknown (a
/// positive rank-one shift of the first diagonal entry, which leaves the
/// solution of any compatible system unchanged up to a constant), then the
/// weighted mean is deflated.
#[derive(Debug)]
pub struct MeanZeroSolver {
    inner: SpdSolver,
    weights: Vec<f64>,
    total_weight: f64,
}

impl MeanZeroSolver {
    pub fn new(a: &CsrMatrix, weights: &[f64]) -> Result<Self> {
        let n = a.nrows;
        let shift = a.get(0, 0).abs().max(1.0);
        let pinned = a.add(&CsrMatrix::from_triplets(n, n, &[(0, 0, shift)]), 1.0);
        Ok(MeanZeroSolver {
            inner: SpdSolver::new(&pinned)?,
            weights: weights.to_vec(),
            total_weight: weights.iter().sum(),
        })
    }

    /// Solve `A x = b` after removing the incompatible (mean) part of `b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = b.len();
        let mean = b.iter().sum::<f64>() / n as f64;
        let rhs: Vec<f64> = b.iter().map(|v| v - mean).collect();
        let mut x = self.inner.solve(&rhs)?;
        let wm = x.iter().zip(&self.weights).map(|(x, w)| x * w).sum::<f64>() / self.total_weight;
        x.iter_mut().for_each(|v| *v -= wm);
        Ok(x)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn weighted_dot(a: &[f64], w: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(w).zip(b).map(|((x, w), y)| x * w * y).sum()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += alpha * x);
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            t.push((i, (i + 1) % n, -1.0));
            t.push(((i + 1) % n, i, -1.0));
        }
        CsrMatrix::from_triplets(n, n, &t)
    }

    #[test]
    fn triplets_sum_and_cancel() {
        let m = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (0, 1, -1.0), (1, 0, 2.0), (1, 0, 0.5)]);
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(1, 0), 2.5);
    }

    #[test]
    fn direct_and_cg_agree() {
        let n = 50;
        let a = laplacian_1d(n).add(&CsrMatrix::diag(&vec![0.1; n]), 1.0);
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x1 = SpdSolver::new(&a).unwrap().solve(&b).unwrap();
        let x2 = SpdSolver::with_limit(&a, 0).unwrap().solve(&b).unwrap();
        for (p, q) in x1.iter().zip(&x2) {
            assert!((p - q).abs() < 1e-9);
        }
        let r = a.matvec(&x1);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-12);
        }
    }

    #[test]
    fn mean_zero_solver_on_periodic_laplacian() {
        let n = 40;
        let a = laplacian_1d(n);
        let w = vec![1.0; n];
        let b: Vec<f64> = (0..n).map(|i| (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos()).collect();
        let x = MeanZeroSolver::new(&a, &w).unwrap().solve(&b).unwrap();
        assert!(x.iter().sum::<f64>().abs() < 1e-12);
        let r = a.matvec(&x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-12);
        }
    }

    #[test]
    fn integer_product_detects_nonzero() {
        let a = CsrMatrix::from_triplets(1, 2, &[(0, 0, 1.0), (0, 1, -1.0)]);
        let b = CsrMatrix::from_triplets(2, 1, &[(0, 0, 1.0), (1, 0, 1.0)]);
        assert_eq!(a.integer_product_nonzeros(&b), 0);
        let c = CsrMatrix::from_triplets(2, 1, &[(0, 0, 1.0)]);
        assert_eq!(a.integer_product_nonzeros(&c), 1);
    }
}
