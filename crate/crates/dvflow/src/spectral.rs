//! Smallest eigenpairs of a sparse symmetric pencil `K x = lambda M x` with
//! diagonal `M`, by block shift-invert subspace iteration with
//! Rayleigh–Ritz and a user-supplied restriction to an invariant subspace.

use crate::error::{Error, Result};
use crate::sparse::{CsrMatrix, SpdSolver};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Converged eigenpairs in ascending order; vectors are `M`-orthonormal.
#[derive(Clone, Debug)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub iterations: usize,
    /// Largest relative residual `|K x - lambda M x|_{M^-1} / ((|lambda| + shift) |x|_M)`.
    pub residual: f64,
}

/// Parameters of [`lowest_eigenpairs`].
#[derive(Clone, Debug)]
pub struct EigenOptions {
    pub wanted: usize,
    pub block: usize,
    pub shift: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions { wanted: 1, block: 8, shift: 0.25, tol: 1e-9, max_iter: 500, seed: 7 }
    }
}

fn m_dot(m: &[f64], a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).zip(m).map(|((a, b), m)| a * b * m).sum()
}

/// `M`-orthonormalise in place by two passes of modified Gram–Schmidt;
/// collapsed columns are replaced by restricted random vectors.
fn orthonormalise(x: &mut [Vec<f64>], m: &[f64], restrict: &dyn Fn(&mut [f64]), rng: &mut ChaCha8Rng) {
    for i in 0..x.len() {
        for attempt in 0..4 {
            let before = m_dot(m, &x[i], &x[i]).sqrt();
            for _ in 0..2 {
                for j in 0..i {
                    let c = m_dot(m, &x[j], &x[i]);
                    let (head, tail) = x.split_at_mut(i);
                    tail[0].iter_mut().zip(&head[j]).for_each(|(a, b)| *a -= c * b);
                }
            }
            let norm = m_dot(m, &x[i], &x[i]).sqrt();
            if norm > 1e-10 * before && norm > 0.0 {
                x[i].iter_mut().for_each(|a| *a /= norm);
                break;
            }
            let _ = attempt;
            x[i].iter_mut().for_each(|a| *a = rng.random_range(-1.0..1.0));
            restrict(&mut x[i]);
        }
    }
}

/// Lowest `opts.wanted` eigenpairs of `K x = lambda M x` restricted to the
/// subspace enforced by `restrict`, which must commute with the pencil.
pub fn lowest_eigenpairs(k: &CsrMatrix, m: &[f64], restrict: &dyn Fn(&mut [f64]), opts: &EigenOptions) -> Result<EigenPairs> {
    let n = m.len();
    if opts.block < opts.wanted || opts.block > n {
        return Err(Error::arg("block", "must lie between the number of wanted pairs and the dimension"));
    }
    let shifted = k.add(&CsrMatrix::diag(m), opts.shift);
    let solver = SpdSolver::new(&shifted)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x: Vec<Vec<f64>> = (0..opts.block)
        .map(|_| {
            let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            restrict(&mut v);
            v
        })
        .collect();
    orthonormalise(&mut x, m, restrict, &mut rng);
    let mut residual = f64::INFINITY;
    for iter in 1..=opts.max_iter {
        let mut y = Vec::with_capacity(opts.block);
        for xi in &x {
            let rhs: Vec<f64> = xi.iter().zip(m).map(|(a, b)| a * b).collect();
            let mut yi = solver.solve(&rhs)?;
            restrict(&mut yi);
            y.push(yi);
        }
        orthonormalise(&mut y, m, restrict, &mut rng);
        let ky: Vec<Vec<f64>> = y.iter().map(|v| k.matvec(v)).collect();
        let b = opts.block;
        let kb = DMatrix::from_fn(b, b, |i, j| 0.5 * (crate::sparse::dot(&y[i], &ky[j]) + crate::sparse::dot(&y[j], &ky[i])));
        let eig = SymmetricEigen::new(kb);
        let mut order: Vec<usize> = (0..b).collect();
        order.sort_by(|&a, &c| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[c]));
        let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        x = order
            .iter()
            .map(|&c| {
                let mut v = vec![0.0; n];
                for (i, yi) in y.iter().enumerate() {
                    crate::sparse::axpy(eig.eigenvectors[(i, c)], yi, &mut v);
                }
                v
            })
            .collect();
        residual = 0.0;
        for (lam, v) in values.iter().zip(&x).take(opts.wanted) {
            let kv = k.matvec(v);
            let r2: f64 = kv.iter().zip(v).zip(m).map(|((kv, v), m)| (kv - lam * m * v).powi(2) / m).sum();
            residual = f64::max(residual, r2.sqrt() / (lam.abs() + opts.shift));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::Eigen("non-finite Ritz values".into()));
        }
        if residual <= opts.tol {
            let values = values[..opts.wanted].to_vec();
            x.truncate(opts.wanted);
            return Ok(EigenPairs { values, vectors: x, iterations: iter, residual });
        }
    }
    Err(Error::Eigen(format!("subspace iteration stagnated at residual {residual:.3e} after {} iterations", opts.max_iter)))
}
