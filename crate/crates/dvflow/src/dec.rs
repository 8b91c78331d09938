//! Metric layer: diagonal Hodge stars, dual coboundaries, Laplacians,
//! inner products and the de Rham sampling map.
//!
//! Hodge diagonals, indexed by the dual cell that carries the cochain:
//!
//! * `M0_i = |K_i|` on dual vertices (pressure pairing),
//! * `M1_j = A_j / l*_j` on dual edges,
//! * `M2_k = |sigma_k| / A*_k` on dual faces. In 2D `|sigma_k| = 1` for the
//!   primal vertex, so `M2_k = 1 / |K*_k|`: the vorticity flux divided by
//!   the dual area is the vorticity density, and `w^T M2 w` is the
//!   enstrophy.
//! * `M3_v = 1 / |K*_v|` on dual 3-cells (3D only).

use crate::error::{check_len, Error, Result};
use crate::geom::{self, Vec3};
use crate::mesh::Mesh;
use crate::sparse::{dot, CsrMatrix};
use std::sync::Arc;

/// A real value per dual `k`-cell, bound to one complex.
#[derive(Clone, Debug, PartialEq)]
pub struct Cochain {
    pub degree: usize,
    pub mesh_id: u64,
    pub values: Vec<f64>,
}

impl Cochain {
    pub fn new(mesh: &Mesh, degree: usize, values: Vec<f64>) -> Result<Self> {
        if degree > mesh.dim {
            return Err(Error::arg("degree", format!("no dual {degree}-cells in dimension {}", mesh.dim)));
        }
        check_len(mesh.n_dual(degree), values.len())?;
        Ok(Cochain { degree, mesh_id: mesh.id, values })
    }

    pub fn zeros(mesh: &Mesh, degree: usize) -> Self {
        Cochain { degree, mesh_id: mesh.id, values: vec![0.0; mesh.n_dual(degree)] }
    }

    fn compatible(&self, other: &Cochain) -> Result<()> {
        if self.mesh_id != other.mesh_id {
            return Err(Error::arg("cochain", "cochains live on different complexes"));
        }
        if self.degree != other.degree {
            return Err(Error::arg("cochain", format!("degree {} paired with degree {}", self.degree, other.degree)));
        }
        Ok(())
    }
}

/// Assembled operators of one complex. Immutable and shareable.
#[derive(Debug)]
pub struct Operators {
    pub mesh: Arc<Mesh>,
    pub m0: Vec<f64>,
    pub m1: Vec<f64>,
    pub m2: Vec<f64>,
    /// Empty in 2D.
    pub m3: Vec<f64>,
    /// `D~0 = -D_{d-1}^T`: gradient of dual 0-cochains.
    pub dt0: CsrMatrix,
    /// `D~1`: circulation around dual faces.
    pub dt1: CsrMatrix,
    /// `D~2 = -D_0^T` (3D; empty in 2D).
    pub dt2: CsrMatrix,
    /// Discrete divergence `D_{d-1} M1`.
    pub div: CsrMatrix,
    /// Scalar Laplacian `L_h = D_{d-1} M1 D~0` (negative semidefinite).
    pub lap: CsrMatrix,
    /// Energy form of the curl-curl Laplacian, `D~1^T M2 D~1`; `Delta_h = M1^{-1}` times this.
    pub curl_curl: CsrMatrix,
}

/// Assemble Hodge stars and dual operators.
pub fn assemble_operators(mesh: Arc<Mesh>) -> Result<Operators> {
    let m0: Vec<f64> = mesh.cells.iter().map(|c| c.volume).collect();
    let m1: Vec<f64> = mesh.facets.iter().map(|f| f.area / f.dual_length).collect();
    let m2: Vec<f64> = mesh.ridges.iter().map(|r| r.length / r.dual_area).collect();
    let m3: Vec<f64> = mesh.peaks.iter().map(|p| 1.0 / p.dual_volume).collect();
    for (name, d) in [("M0", &m0), ("M1", &m1), ("M2", &m2), ("M3", &m3)] {
        if let Some(i) = d.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidComplex(format!("{name} entry {i} is not positive")));
        }
    }
    let dt0 = mesh.d_top().transpose().scale(-1.0);
    let dt1 = mesh.d_ridge().transpose().scale(mesh.dual_sign);
    let dt2 = if mesh.dim == 3 { mesh.incidence[0].transpose().scale(-1.0) } else { CsrMatrix::from_triplets(0, 0, &[]) };
    let div = mesh.d_top().scale_cols(&m1);
    let lap = div.matmul(&dt0);
    let curl_curl = dt1.transpose().scale_cols(&m2).matmul(&dt1);
    Ok(Operators { mesh, m0, m1, m2, m3, dt0, dt1, dt2, div, lap, curl_curl })
}

impl Operators {
    pub fn dim(&self) -> usize {
        self.mesh.dim
    }
    pub fn n_cells(&self) -> usize {
        self.m0.len()
    }
    pub fn n_facets(&self) -> usize {
        self.m1.len()
    }
    pub fn n_ridges(&self) -> usize {
        self.m2.len()
    }

    /// Hodge diagonal on dual `k`-cochains.
    pub fn hodge(&self, k: usize) -> &[f64] {
        match k {
            0 => &self.m0,
            1 => &self.m1,
            2 => &self.m2,
            _ => &self.m3,
        }
    }

    /// `D~0 q`.
    pub fn grad(&self, q: &[f64]) -> Vec<f64> {
        self.dt0.matvec(q)
    }

    /// `D~1 v`.
    pub fn curl(&self, v: &[f64]) -> Vec<f64> {
        self.dt1.matvec(v)
    }

    /// `D_{d-1} M1 v`.
    pub fn divergence(&self, v: &[f64]) -> Vec<f64> {
        self.div.matvec(v)
    }

    /// Codifferential `delta_h w = M1^{-1} D~1^T M2 w`.
    pub fn codiff(&self, w: &[f64]) -> Vec<f64> {
        let mw: Vec<f64> = w.iter().zip(&self.m2).map(|(a, b)| a * b).collect();
        let mut r = self.dt1.transpose_matvec(&mw);
        r.iter_mut().zip(&self.m1).for_each(|(x, m)| *x /= m);
        r
    }

    /// Curl-curl Laplacian `Delta_h v = delta_h D~1 v` (positive semidefinite).
    pub fn hodge_laplacian(&self, v: &[f64]) -> Vec<f64> {
        self.codiff(&self.curl(v))
    }

    /// Weighted pairing `a^T M_k b`.
    pub fn inner(&self, k: usize, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(self.hodge(k)).zip(b).map(|((x, w), y)| x * w * y).sum()
    }

    pub fn inner_product(&self, a: &Cochain, b: &Cochain) -> Result<f64> {
        a.compatible(b)?;
        if a.mesh_id != self.mesh.id {
            return Err(Error::arg("cochain", "cochain is not defined on this complex"));
        }
        Ok(self.inner(a.degree, &a.values, &b.values))
    }

    /// `||v||_{L_h^2}`.
    pub fn norm_l2h(&self, v: &[f64]) -> f64 {
        self.inner(1, v, v).sqrt()
    }

    /// `||w||_{M2}`.
    pub fn norm_m2(&self, w: &[f64]) -> f64 {
        self.inner(2, w, w).sqrt()
    }

    /// `||q||_0 = sqrt(q^T M0 q)`.
    pub fn norm_m0(&self, q: &[f64]) -> f64 {
        self.inner(0, q, q).sqrt()
    }

    /// `max_j |v_j| / l*_j`.
    pub fn norm_rec(&self, v: &[f64]) -> f64 {
        v.iter().zip(&self.mesh.facets).map(|(x, f)| x.abs() / f.dual_length).fold(0.0, f64::max)
    }

    /// `max_j |v_j| / sqrt(M1_j)`.
    pub fn norm_linf_h(&self, v: &[f64]) -> f64 {
        v.iter().zip(&self.m1).map(|(x, m)| x.abs() / m.sqrt()).fold(0.0, f64::max)
    }

    /// `||v||_{H_h^1}^2 = ||v||^2 + ||D~1 v||_{M2}^2`.
    pub fn norm_h1h(&self, v: &[f64]) -> f64 {
        let w = self.curl(v);
        (self.inner(1, v, v) + self.inner(2, &w, &w)).sqrt()
    }

    pub fn norm_l2(&self, v: &[f64]) -> f64 {
        dot(v, v).sqrt()
    }

    /// Weighted mean `sum M0 q / sum M0`.
    pub fn mean0(&self, q: &[f64]) -> f64 {
        dot(q, &self.m0) / self.m0.iter().sum::<f64>()
    }
}

impl CsrMatrix {
    /// `A^T x` without forming the transpose.
    pub fn transpose_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for (i, xi) in x.iter().enumerate() {
            if *xi == 0.0 {
                continue;
            }
            for p in self.indptr[i]..self.indptr[i + 1] {
                y[self.indices[p]] += self.values[p] * xi;
            }
        }
        y
    }
}

/// Analytic field sampled by [`de_rham`].
pub enum AnalyticForm<'a> {
    /// 0-form, sampled pointwise at dual vertices.
    Scalar(&'a dyn Fn(&Vec3) -> f64),
    /// Vector proxy of a 1-form (integrated along dual edges) or of a
    /// 2-form (flux through dual faces).
    Vector(&'a dyn Fn(&Vec3) -> Vec3),
}

fn finite(v: Vec<f64>) -> Result<Vec<f64>> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::Numerical(format!("field evaluation is not finite at dual cell {i}"))),
        None => Ok(v),
    }
}

/// De Rham map onto dual `k`-cochains, `k` in `{0, 1, 2}`.
pub fn de_rham(mesh: &Mesh, field: &AnalyticForm, k: usize) -> Result<Vec<f64>> {
    match (k, field) {
        (0, AnalyticForm::Scalar(f)) => Ok(de_rham_0(mesh, f)),
        (1, AnalyticForm::Vector(u)) => finite(de_rham_1(mesh, u)),
        (2, AnalyticForm::Vector(w)) => finite(de_rham_2(mesh, w)),
        (0 | 1 | 2, _) => Err(Error::arg("field", format!("wrong field kind for degree {k}"))),
        _ => Err(Error::arg("k", format!("de Rham map is defined for k in 0..=2, got {k}"))),
    }
    .and_then(finite)
}

/// Point samples at the dual vertices.
pub fn de_rham_0(mesh: &Mesh, f: &dyn Fn(&Vec3) -> f64) -> Vec<f64> {
    mesh.cells.iter().map(|c| f(&c.centre)).collect()
}

/// Line integrals along the dual edges (five-point Gauss).
pub fn de_rham_1(mesh: &Mesh, u: &dyn Fn(&Vec3) -> Vec3) -> Vec<f64> {
    mesh.facets
        .iter()
        .map(|f| {
            let t = (f.dual_head - f.dual_tail) / f.dual_length;
            geom::integrate_segment(&f.dual_tail, &f.dual_head, &mut |x| u(x).dot(&t))
        })
        .collect()
}

/// Fluxes through the dual faces (degree-5 rule on the fan triangles).
pub fn de_rham_2(mesh: &Mesh, w: &dyn Fn(&Vec3) -> Vec3) -> Vec<f64> {
    mesh.ridges
        .iter()
        .map(|r| {
            let mut s = 0.0;
            for inc in &r.facets {
                let f = &mesh.facets[inc.index];
                let p = f.dual_tail + inc.shift;
                let q = f.dual_head + inc.shift;
                // fan triangles are positively oriented once the dual edge
                // carries its incidence sign, so the unsigned rule applies
                s += geom::integrate_triangle(&r.pos, &p, &q, &mut |x| w(x).dot(&r.tangent));
            }
            s
        })
        .collect()
}

/// Integral of a 1-form over primal facets against the unit normal
/// (the exact dual flux of the Hodge star applied to a dual 1-form).
pub fn facet_flux(mesh: &Mesh, u: &dyn Fn(&Vec3) -> Vec3) -> Vec<f64> {
    mesh.facets
        .iter()
        .map(|f| {
            let n = f.normal;
            let mut g = |x: &Vec3| u(x).dot(&n);
            match f.corners.len() {
                2 => geom::integrate_segment(&f.corners[0], &f.corners[1], &mut g),
                3 => geom::integrate_triangle(&f.corners[0], &f.corners[1], &f.corners[2], &mut g),
                _ => {
                    let c = &f.corners;
                    (1..c.len() - 1).map(|i| geom::integrate_triangle(&c[0], &c[i], &c[i + 1], &mut g)).sum()
                }
            }
        })
        .collect()
}

/// Per-cell Hodge consistency error, normalized by the primal measure.
///
/// * `k = 0`: `|M0_i p(c_i) - int_{K_i} p| / |K_i|` for a scalar field.
/// * `k = 1`: `|(M1 R_h u)_j - int_{f_j} u.n| / A_j`.
/// * `k = 2`: `|(M2 R_h w)_k - int_{sigma_k} w.t| / |sigma_k|`; in 2D the
///   primal integral is the point value of the density at the vertex.
pub fn hodge_error_probe(ops: &Operators, field: &AnalyticForm, k: usize) -> Result<Vec<f64>> {
    let mesh = &ops.mesh;
    match (k, field) {
        (0, AnalyticForm::Scalar(p)) => Ok(mesh
            .cells
            .iter()
            .map(|c| {
                let exact = if mesh.dim == 2 {
                    geom::integrate_triangle(&c.corners[0], &c.corners[1], &c.corners[2], &mut |x| p(x))
                } else {
                    prism_integral(&c.corners, p)
                };
                (c.volume * p(&c.centre) - exact).abs() / c.volume
            })
            .collect()),
        (1, AnalyticForm::Vector(u)) => {
            let r = de_rham_1(mesh, u);
            let exact = facet_flux(mesh, u);
            Ok((0..r.len()).map(|j| (ops.m1[j] * r[j] - exact[j]).abs() / mesh.facets[j].area).collect())
        }
        (2, AnalyticForm::Vector(w)) => {
            let r = de_rham_2(mesh, w);
            Ok(mesh
                .ridges
                .iter()
                .enumerate()
                .map(|(k, ridge)| {
                    let t = ridge.tangent;
                    let exact = if mesh.dim == 2 {
                        w(&ridge.pos).dot(&t)
                    } else {
                        geom::integrate_segment(&ridge.corners[0], &ridge.corners[1], &mut |x| w(x).dot(&t))
                    };
                    (ops.m2[k] * r[k] - exact).abs() / ridge.length
                })
                .collect())
        }
        _ => Err(Error::arg("k", format!("no Hodge probe for degree {k} with this field kind"))),
    }
}

/// Integral over a triangular prism with vertical sides: degree-5 triangle
/// rule times five-point Gauss in z.
fn prism_integral(corners: &[Vec3], p: &dyn Fn(&Vec3) -> f64) -> f64 {
    let (z0, z1) = (corners[0].z, corners[3].z);
    let mut s = 0.0;
    for &(t, w) in geom::GAUSS5.iter() {
        let z = z0 + t * (z1 - z0);
        let lift = |q: &Vec3| Vec3::new(q.x, q.y, z);
        s += w * geom::integrate_triangle(&lift(&corners[0]), &lift(&corners[1]), &lift(&corners[2]), &mut |x| p(x));
    }
    s * (z1 - z0)
}
