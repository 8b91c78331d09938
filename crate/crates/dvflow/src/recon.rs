//! Nonlinear layer: velocity reconstructions, the extrusion matrix, the
//! discrete contraction and Lamb form, wedge products and Lie derivatives.
//!
//! The extrusion matrix is assembled per dual face `k`. With `r_jk` the
//! vector from the ridge (vertex in 2D, edge midpoint in 3D) to the
//! midpoint of dual edge `j` and `sigma_jk = D~1[k, j]`,
//!
//! ```text
//! U~(v)_jk = (2 |sigma_k| / A*_k) sigma_jk r_jk . U_k(v)
//! ```
//!
//! where `U_k` is a velocity attached to the dual face. The default
//! [`Extrusion::DualCell`] takes the circulation reconstruction
//! `P_k(v) = -(1/A*_k) sum_j sigma_jk v_j (r_jk x n_k)`, exact for constant
//! fields, for which `U~(v)^T v = 0` holds identically; hence
//! `(1/2) M1^{-1} U~(v) D~1 v` approximates the Lamb vector `w x u` and
//! the gradient part of the contraction vanishes. The face-average
//! variants use the averaged cell reconstructions `u_j` at the facet
//! instead; they keep the energy identity (which holds for any `U~`) but
//! not the exact antisymmetry.

use crate::dec::Operators;
use crate::error::{check_len, Error, Result};
use crate::geom::{self, Mat3, Vec3};
use crate::sparse::CsrMatrix;
use std::sync::Arc;

/// Velocity attached to a dual face (or facet) inside the extrusion matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Extrusion {
    /// Circulation reconstruction on the dual face (default).
    DualCell,
    /// Trapezoidal average of the Gram reconstructions at the two dual
    /// endpoints of each dual edge.
    FaceAverage,
    /// As `FaceAverage` with the arithmetic mean `(1/n) sum (v/l*) t` in
    /// place of the Gram solve: deliberately inconsistent, used to show
    /// that the energy identity does not depend on the reconstruction.
    ArithmeticMean,
}

impl std::str::FromStr for Extrusion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dual-cell" => Ok(Extrusion::DualCell),
            "face-average" => Ok(Extrusion::FaceAverage),
            "arithmetic-mean" => Ok(Extrusion::ArithmeticMean),
            _ => Err(Error::arg("extrusion", format!("unknown scheme `{s}`"))),
        }
    }
}

/// Linear reconstruction as one sparse matrix per Cartesian component.
#[derive(Clone, Debug)]
pub struct VectorMap {
    pub comps: [CsrMatrix; 3],
}

impl VectorMap {
    pub fn apply(&self, v: &[f64]) -> Vec<Vec3> {
        let x = self.comps[0].matvec(v);
        let y = self.comps[1].matvec(v);
        let z = self.comps[2].matvec(v);
        (0..x.len()).map(|i| Vec3::new(x[i], y[i], z[i])).collect()
    }

    /// Adjoint: `sum_c R_c^T w_c`.
    pub fn apply_transpose(&self, w: &[Vec3]) -> Vec<f64> {
        let mut out = vec![0.0; self.comps[0].ncols];
        for c in 0..3 {
            let wc: Vec<f64> = w.iter().map(|x| x[c]).collect();
            let r = self.comps[c].transpose_matvec(&wc);
            out.iter_mut().zip(r).for_each(|(o, r)| *o += r);
        }
        out
    }

    fn from_rows(nrows: usize, ncols: usize, rows: &[Vec<(usize, Vec3)>]) -> Self {
        let mut t: [Vec<(usize, usize, f64)>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        for (i, row) in rows.iter().enumerate() {
            for (j, w) in row {
                for (c, tc) in t.iter_mut().enumerate() {
                    if w[c] != 0.0 {
                        tc.push((i, *j, w[c]));
                    }
                }
            }
        }
        VectorMap { comps: t.map(|tc| CsrMatrix::from_triplets(nrows, ncols, &tc)) }
    }

    fn compose(b: &CsrMatrix, inner: &VectorMap) -> Self {
        VectorMap { comps: [b.matmul(&inner.comps[0]), b.matmul(&inner.comps[1]), b.matmul(&inner.comps[2])] }
    }
}

/// Precomputed reconstruction and extrusion data of one complex.
#[derive(Debug)]
pub struct ReconstructionContext {
    pub ops: Arc<Operators>,
    pub scheme: Extrusion,
    /// Gram reconstruction at the dual vertices: `u_i = G_i^{-1} sum (v_n / l*_n) t_n`.
    pub gram: VectorMap,
    /// Arithmetic mean without the Gram correction.
    pub mean: VectorMap,
    /// Circulation reconstruction on the dual faces. Dual faces cut by a
    /// wall omit the wall segments, which carry no circulation under
    /// no-slip.
    pub perot: VectorMap,
    /// Pointwise reconstruction at the dual vertices used by the 1-form
    /// contraction and the kinetic energy density: the dual-face vectors
    /// interpolated barycentrically to the circumcentre in 2D, the Gram
    /// reconstruction in 3D and in triangles touching a wall.
    pub pointwise: VectorMap,
    /// Gram matrices `G_i = sum t t^T` per dual vertex.
    pub gram_matrices: Vec<Mat3>,
    pub gram_condition: Vec<f64>,
    /// Per dual face: `(facet j, (2 |sigma_k| / A*_k) sigma_jk r_jk)`.
    extrusion: Vec<Vec<(usize, Vec3)>>,
}

impl ReconstructionContext {
    pub fn new(ops: Arc<Operators>, scheme: Extrusion) -> Result<Self> {
        let mesh = ops.mesh.clone();
        let planar = mesh.dim == 2;
        let (nc, nf, nr) = (mesh.n_cells(), mesh.n_facets(), mesh.n_ridges());
        let mut gram_rows = Vec::with_capacity(nc);
        let mut mean_rows = Vec::with_capacity(nc);
        let mut gram_matrices = Vec::with_capacity(nc);
        let mut gram_condition = Vec::with_capacity(nc);
        for (i, c) in mesh.cells.iter().enumerate() {
            let mut g = Mat3::zeros();
            for inc in &c.facets {
                let t = mesh.facets[inc.index].normal;
                g += t * t.transpose();
            }
            let ginv = geom::gram_inverse(&g, planar).ok_or_else(|| Error::InvalidComplex(format!("singular Gram matrix at dual vertex {i}")))?;
            let nfc = c.facets.len() as f64;
            let mut gr = Vec::new();
            let mut mr = Vec::new();
            for inc in &c.facets {
                let f = &mesh.facets[inc.index];
                gr.push((inc.index, ginv * f.normal / f.dual_length));
                mr.push((inc.index, f.normal / (f.dual_length * nfc)));
            }
            gram_rows.push(gr);
            mean_rows.push(mr);
            gram_condition.push(geom::condition_number(&g, planar));
            gram_matrices.push(g);
        }
        let gram = VectorMap::from_rows(nc, nf, &gram_rows);
        let mean = VectorMap::from_rows(nc, nf, &mean_rows);

        let mut perot_rows = Vec::with_capacity(nr);
        let mut extrusion = Vec::with_capacity(nr);
        for r in &mesh.ridges {
            let mut pr = Vec::with_capacity(r.facets.len());
            let mut er = Vec::with_capacity(r.facets.len());
            for inc in &r.facets {
                let f = &mesh.facets[inc.index];
                let rj = f.dual_midpoint() + inc.shift - r.pos;
                pr.push((inc.index, -inc.sign * rj.cross(&r.tangent) / r.dual_area));
                er.push((inc.index, (2.0 * r.length / r.dual_area) * inc.sign * rj));
            }
            perot_rows.push(pr);
            extrusion.push(er);
        }
        let perot = VectorMap::from_rows(nr, nf, &perot_rows);

        let pointwise = if planar {
            let mut b = Vec::new();
            let mut wall_rows = vec![Vec::new(); nc];
            let on_wall = mesh.ridge_boundary_mask();
            for (i, c) in mesh.cells.iter().enumerate() {
                if c.verts.iter().any(|v| on_wall[*v]) {
                    wall_rows[i] = gram_rows[i].clone();
                    continue;
                }
                let p = &c.corners;
                let n = geom::ez();
                let area = geom::triangle_area(&p[0], &p[1], &p[2], &n);
                for a in 0..3 {
                    let lam = geom::triangle_area(&c.centre, &p[(a + 1) % 3], &p[(a + 2) % 3], &n) / area;
                    b.push((i, c.verts[a], lam));
                }
            }
            let interior = VectorMap::compose(&CsrMatrix::from_triplets(nc, nr, &b), &perot);
            let wall = VectorMap::from_rows(nc, nf, &wall_rows);
            VectorMap { comps: [0, 1, 2].map(|c| interior.comps[c].add(&wall.comps[c], 1.0)) }
        } else {
            gram.clone()
        };
        Ok(ReconstructionContext { ops, scheme, gram, mean, perot, pointwise, gram_matrices, gram_condition, extrusion })
    }

    pub fn mesh(&self) -> &crate::mesh::Mesh {
        &self.ops.mesh
    }

    fn check1(&self, v: &[f64]) -> Result<()> {
        check_len(self.ops.n_facets(), v.len())
    }

    fn check2(&self, w: &[f64]) -> Result<()> {
        check_len(self.ops.n_ridges(), w.len())
    }

    /// Gram (averaging) reconstruction at every dual vertex.
    pub fn reconstruct_velocity(&self, v: &[f64]) -> Result<Vec<Vec3>> {
        self.check1(v)?;
        Ok(self.gram.apply(v))
    }

    /// Pointwise reconstruction used by the 1-form contraction.
    pub fn reconstruct_pointwise(&self, v: &[f64]) -> Result<Vec<Vec3>> {
        self.check1(v)?;
        Ok(self.pointwise.apply(v))
    }

    /// Circulation reconstruction on every dual face.
    pub fn reconstruct_dual_faces(&self, v: &[f64]) -> Result<Vec<Vec3>> {
        self.check1(v)?;
        Ok(self.perot.apply(v))
    }

    /// Trapezoidal face average `u_j = (u_a + u_b)/2` of a cell
    /// reconstruction over the two dual endpoints of each dual edge.
    pub fn face_average(&self, cell_values: &[Vec3]) -> Vec<Vec3> {
        self.mesh()
            .facets
            .iter()
            .map(|f| match (f.tail, f.head) {
                (Some(a), Some(b)) => 0.5 * (cell_values[a] + cell_values[b]),
                (Some(a), None) | (None, Some(a)) => cell_values[a],
                (None, None) => Vec3::zeros(),
            })
            .collect()
    }

    /// The velocities entering `U~(v)`: one per dual face for the dual-cell
    /// scheme, one per facet for the face-average schemes.
    fn extrusion_velocity(&self, v: &[f64]) -> Vec<Vec3> {
        match self.scheme {
            Extrusion::DualCell => self.perot.apply(v),
            Extrusion::FaceAverage => self.face_average(&self.gram.apply(v)),
            Extrusion::ArithmeticMean => self.face_average(&self.mean.apply(v)),
        }
    }

    fn weight(&self, vel: &[Vec3], k: usize, j: usize, g: &Vec3) -> f64 {
        match self.scheme {
            Extrusion::DualCell => g.dot(&vel[k]),
            _ => g.dot(&vel[j]),
        }
    }

    /// `U~(v) w` for a dual 2-cochain `w`.
    pub fn extrude(&self, v: &[f64], w: &[f64]) -> Result<Vec<f64>> {
        self.check1(v)?;
        self.check2(w)?;
        let vel = self.extrusion_velocity(v);
        let mut out = vec![0.0; self.ops.n_facets()];
        for (k, row) in self.extrusion.iter().enumerate() {
            if w[k] == 0.0 {
                continue;
            }
            for (j, g) in row {
                out[*j] += self.weight(&vel, k, *j, g) * w[k];
            }
        }
        Ok(out)
    }

    /// `U~(v)^T x` for a dual 1-cochain `x`.
    pub fn extrude_transpose(&self, v: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        self.check1(v)?;
        self.check1(x)?;
        let vel = self.extrusion_velocity(v);
        Ok(self.extrude_transpose_with(&vel, x))
    }

    fn extrude_transpose_with(&self, vel: &[Vec3], x: &[f64]) -> Vec<f64> {
        self.extrusion.iter().enumerate().map(|(k, row)| row.iter().map(|(j, g)| self.weight(vel, k, *j, g) * x[*j]).sum()).collect()
    }

    fn extrude_with(&self, vel: &[Vec3], w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ops.n_facets()];
        for (k, row) in self.extrusion.iter().enumerate() {
            if w[k] == 0.0 {
                continue;
            }
            for (j, g) in row {
                out[*j] += self.weight(vel, k, *j, g) * w[k];
            }
        }
        out
    }

    /// The extrusion matrix `U~(v)` (facets by ridges), sparsity of `D~1^T`.
    pub fn extrusion_matrix(&self, v: &[f64]) -> Result<CsrMatrix> {
        self.check1(v)?;
        let vel = self.extrusion_velocity(v);
        let mut t = Vec::new();
        for (k, row) in self.extrusion.iter().enumerate() {
            for (j, g) in row {
                t.push((*j, k, self.weight(&vel, k, *j, g)));
            }
        }
        Ok(CsrMatrix::from_triplets(self.ops.n_facets(), self.ops.n_ridges(), &t))
    }

    fn m1_solve(&self, mut x: Vec<f64>) -> Vec<f64> {
        x.iter_mut().zip(&self.ops.m1).for_each(|(a, m)| *a /= m);
        x
    }

    /// Discrete contraction `I_v(w) = (1/2) M1^{-1} (U~(v) w - D~1^T U~(v)^T v)`.
    pub fn contraction(&self, v: &[f64], w: &[f64]) -> Result<Vec<f64>> {
        self.check1(v)?;
        self.check2(w)?;
        let vel = self.extrusion_velocity(v);
        let a = self.extrude_with(&vel, w);
        let b = self.ops.dt1.transpose_matvec(&self.extrude_transpose_with(&vel, v));
        Ok(self.m1_solve(a.iter().zip(&b).map(|(a, b)| 0.5 * (a - b)).collect()))
    }

    /// Lamb form `Q(v1, v2) = (1/2) M1^{-1} (U~(v1) D~1 v2 - D~1^T U~(v1)^T v2)`.
    pub fn lamb(&self, v1: &[f64], v2: &[f64]) -> Result<Vec<f64>> {
        self.check1(v1)?;
        self.check1(v2)?;
        let vel = self.extrusion_velocity(v1);
        let a = self.extrude_with(&vel, &self.ops.curl(v2));
        let b = self.ops.dt1.transpose_matvec(&self.extrude_transpose_with(&vel, v2));
        Ok(self.m1_solve(a.iter().zip(&b).map(|(a, b)| 0.5 * (a - b)).collect()))
    }

    /// 1-form contraction `(I1_v a)_i = u(v_i*) . a(v_i*)` with the pointwise
    /// reconstruction of both arguments.
    pub fn contraction_1form(&self, v: &[f64], a: &[f64]) -> Result<Vec<f64>> {
        self.check1(v)?;
        self.check1(a)?;
        let u = self.pointwise.apply(v);
        let b = self.pointwise.apply(a);
        Ok(u.iter().zip(&b).map(|(x, y)| x.dot(y)).collect())
    }

    /// Adjoint of `a -> I1_v a` under the unweighted pairings.
    pub fn contraction_1form_transpose(&self, v: &[f64], q: &[f64]) -> Result<Vec<f64>> {
        self.check1(v)?;
        check_len(self.ops.n_cells(), q.len())?;
        let u = self.pointwise.apply(v);
        let w: Vec<Vec3> = u.iter().zip(q).map(|(u, q)| u * *q).collect();
        Ok(self.pointwise.apply_transpose(&w))
    }

    /// Kinetic energy density `e_kin = (1/2) |u(v_i*)|^2`.
    pub fn kinetic_energy_density(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check1(v)?;
        Ok(self.pointwise.apply(v).iter().map(|u| 0.5 * u.norm_squared()).collect())
    }

    /// Cochain Lie derivative of a dual 1-cochain,
    /// `L_v a = D~0 (I1_v a) + (1/2) M1^{-1} U~(v) D~1 a`.
    pub fn lie_1form(&self, v: &[f64], a: &[f64]) -> Result<Vec<f64>> {
        let g = self.ops.grad(&self.contraction_1form(v, a)?);
        let e = self.extrude(v, &self.ops.curl(a))?;
        Ok(g.iter().zip(self.m1_solve(e)).map(|(g, e)| g + 0.5 * e).collect())
    }

    /// Lie derivative of a dual 0-cochain, `L_v f = I1_v (D~0 f)`.
    pub fn lie_0form(&self, v: &[f64], f: &[f64]) -> Result<Vec<f64>> {
        self.contraction_1form(v, &self.ops.grad(f))
    }

    /// Cochain Lie derivative of a dual 2-cochain,
    /// `L_v b = D~1 (I_v b) + I_v (D~2 b)` with the 2-form contraction
    /// `(1/2) M1^{-1} U~(v) b` and, in 3D, the 3-form contraction
    /// `A*_k rho_k (u_k . n_k)` on dual faces.
    pub fn lie_2form(&self, v: &[f64], b: &[f64]) -> Result<Vec<f64>> {
        let ib = self.m1_solve(self.extrude(v, b)?).into_iter().map(|x| 0.5 * x).collect::<Vec<_>>();
        let mut out = self.ops.curl(&ib);
        if self.mesh().dim == 3 {
            let rho = self.ops.dt2.matvec(b);
            let extra = self.contraction_3form(v, &rho);
            out.iter_mut().zip(extra).for_each(|(o, e)| *o += e);
        }
        Ok(out)
    }

    /// Contraction of a dual 3-cochain into dual 2-cochains (3D).
    fn contraction_3form(&self, v: &[f64], rho: &[f64]) -> Vec<f64> {
        let mesh = self.mesh();
        let u = self.gram.apply(v);
        mesh.ridges
            .iter()
            .map(|r| {
                let dens: f64 = r.verts.iter().map(|&m| rho[m] / mesh.peaks[m].dual_volume).sum::<f64>() / r.verts.len() as f64;
                let ubar = r.cells.iter().map(|(c, _)| u[*c]).sum::<Vec3>() / r.cells.len() as f64;
                r.dual_area * dens * ubar.dot(&r.tangent)
            })
            .collect()
    }

    /// Chain Lie derivative `(L_v)^T gamma` on dual 1-chains.
    pub fn chain_lie(&self, v: &[f64], gamma: &[f64]) -> Result<Vec<f64>> {
        self.check1(gamma)?;
        let q = self.ops.dt0.transpose_matvec(gamma);
        let mut out = self.contraction_1form_transpose(v, &q)?;
        let y = self.m1_solve(gamma.to_vec());
        let e = self.ops.dt1.transpose_matvec(&self.extrude_transpose(v, &y)?);
        out.iter_mut().zip(e).for_each(|(o, e)| *o += 0.5 * e);
        Ok(out)
    }

    /// Chain Lie derivative on dual 0-chains, `(L_v^0)^T`.
    pub fn chain_lie_0(&self, v: &[f64], c: &[f64]) -> Result<Vec<f64>> {
        Ok(self.ops.dt0.transpose_matvec(&self.contraction_1form_transpose(v, c)?))
    }

    /// Boundary of a dual 1-chain, `D~0^T gamma`.
    pub fn chain_boundary(&self, gamma: &[f64]) -> Vec<f64> {
        self.ops.dt0.transpose_matvec(gamma)
    }

    /// Wedge of two dual 1-cochains, `(1/2) M2^{-1} U~(a)^T b`.
    ///
    /// With the dual-cell extrusion, `<a ^ b, w>_2 = <b, I_a w>_1` for all
    /// `w` and the product is antisymmetric.
    pub fn wedge_11(&self, a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
        let t = self.extrude_transpose(a, b)?;
        Ok(t.iter().zip(&self.ops.m2).map(|(x, m)| 0.5 * x / m).collect())
    }

    /// Wedge of a dual 1-cochain with a dual 2-cochain onto dual 3-cells (3D):
    /// `|K*_m| a_m . b_m` with `a_m` the Gram reconstruction over the dual
    /// edges of the cell and `b_m = (1/|K*_m|) sum_k D~2[m,k] b_k (c(f*_k) - x_m)`.
    pub fn wedge_12(&self, a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
        let mesh = self.mesh();
        if mesh.dim != 3 {
            return Err(Error::Unsupported("the 1-2 wedge needs a 3D complex".into()));
        }
        self.check1(a)?;
        self.check2(b)?;
        let mut out = Vec::with_capacity(mesh.n_peaks());
        for p in &mesh.peaks {
            let mut g = Mat3::zeros();
            let mut rhs = Vec3::zeros();
            let mut bv = Vec3::zeros();
            let mut seen: Vec<usize> = Vec::new();
            for inc in &p.ridges {
                let r = &mesh.ridges[inc.index];
                bv += inc.sign * b[inc.index] * (r.dual_centroid + inc.shift - p.pos);
                for fi in &r.facets {
                    if seen.contains(&fi.index) {
                        continue;
                    }
                    seen.push(fi.index);
                    let f = &mesh.facets[fi.index];
                    g += f.normal * f.normal.transpose();
                    rhs += f.normal * (a[fi.index] / f.dual_length);
                }
            }
            let ginv = geom::gram_inverse(&g, false).ok_or_else(|| Error::InvalidComplex("singular dual-cell Gram matrix".into()))?;
            out.push((ginv * rhs).dot(&bv));
        }
        Ok(out)
    }

    /// Wedge of a dual 0-cochain with a dual 1-cochain: `(f_a + f_b)/2 b_j`.
    pub fn wedge_01(&self, f: &[f64], b: &[f64]) -> Result<Vec<f64>> {
        check_len(self.ops.n_cells(), f.len())?;
        self.check1(b)?;
        Ok(self
            .mesh()
            .facets
            .iter()
            .zip(b)
            .map(|(fc, bj)| {
                let (s, n) = [fc.tail, fc.head].iter().flatten().fold((0.0, 0.0), |(s, n), c| (s + f[*c], n + 1.0));
                s / n * bj
            })
            .collect())
    }

    /// Wedge of a dual 0-cochain with a dual 2-cochain: the mean of `f`
    /// over the dual vertices of each dual face, times `b_k`.
    pub fn wedge_02(&self, f: &[f64], b: &[f64]) -> Result<Vec<f64>> {
        check_len(self.ops.n_cells(), f.len())?;
        self.check2(b)?;
        Ok(self
            .mesh()
            .ridges
            .iter()
            .zip(b)
            .map(|(r, bk)| r.cells.iter().map(|(c, _)| f[*c]).sum::<f64>() / r.cells.len() as f64 * bk)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dec::{assemble_operators, de_rham_1};
    use crate::geom::vec3;
    use crate::mesh::{build_square_dirichlet, build_torus_mesh, extrude_prismatic, Family, Mesh};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ctx_for(mesh: Mesh, scheme: Extrusion) -> ReconstructionContext {
        ReconstructionContext::new(Arc::new(assemble_operators(Arc::new(mesh)).unwrap()), scheme).unwrap()
    }

    fn meshes() -> Vec<Mesh> {
        let tau = 2.0 * std::f64::consts::PI;
        let layer = build_torus_mesh(6, Family::Perturbed, 0.2, 3).unwrap();
        vec![
            build_torus_mesh(8, Family::Perturbed, 0.2, 1).unwrap(),
            build_torus_mesh(8, Family::Equilateral, 0.0, 0).unwrap(),
            build_square_dirichlet(6, Family::Perturbed, 0.2, 5).unwrap(),
            extrude_prismatic(&layer, 3, &[tau / 3.0]).unwrap(),
        ]
    }

    fn random(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    fn pair(c: &ReconstructionContext, a: &[f64], b: &[f64]) -> f64 {
        c.ops.inner(1, a, b)
    }

    #[test]
    fn reconstructions_exact_on_constants() {
        for mesh in meshes() {
            let c = ctx_for(mesh, Extrusion::DualCell);
            let k = if c.mesh().dim == 2 { vec3(0.7, -0.3, 0.0) } else { vec3(0.7, -0.3, 0.4) };
            let v = de_rham_1(c.mesh(), &|_| k);
            for u in c.reconstruct_velocity(&v).unwrap() {
                assert!((u - k).norm() < 1e-12);
            }
            for u in c.reconstruct_pointwise(&v).unwrap() {
                assert!((u - k).norm() < 1e-12);
            }
            for (r, u) in c.mesh().ridges.iter().zip(c.reconstruct_dual_faces(&v).unwrap()).filter(|(r, _)| !r.boundary) {
                let kt = k - r.tangent * k.dot(&r.tangent);
                assert!((u - kt).norm() < 1e-12);
            }
            for e in c.kinetic_energy_density(&v).unwrap() {
                assert!((e - 0.5 * k.norm_squared()).abs() < 1e-12);
            }
            let zero = vec![0.0; v.len()];
            assert!(c.reconstruct_velocity(&zero).unwrap().iter().all(|u| u.norm() == 0.0));
        }
    }

    #[test]
    fn constant_field_extrusion_entries() {
        let mesh = build_torus_mesh(8, Family::Equilateral, 0.0, 0).unwrap();
        for scheme in [Extrusion::DualCell, Extrusion::FaceAverage] {
            let c = ctx_for(mesh.clone(), scheme);
            let k = vec3(0.4, 1.1, 0.0);
            let u = c.extrusion_matrix(&de_rham_1(c.mesh(), &|_| k)).unwrap();
            for (j, kk, val) in u.triplets() {
                let f = &c.mesh().facets[j];
                let e = (f.corners[1] - f.corners[0]).normalize();
                let scale = f.area / c.mesh().ridges[kk].dual_area;
                assert!((val.abs() - scale * k.dot(&e).abs()).abs() < 1e-12);
                assert!(c.ops.dt1.get(kk, j) != 0.0);
            }
            let z = c.extrusion_matrix(&vec![0.0; c.ops.n_facets()]).unwrap();
            assert_eq!(z.nnz(), 0);
        }
    }

    #[test]
    fn dual_cell_extrusion_is_antisymmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for mesh in meshes() {
            let c = ctx_for(mesh, Extrusion::DualCell);
            for _ in 0..20 {
                let v = random(c.ops.n_facets(), &mut rng);
                let t = c.extrude_transpose(&v, &v).unwrap();
                let scale: f64 = v.iter().map(|x| x.abs()).sum::<f64>();
                assert!(t.iter().all(|x| x.abs() < 1e-13 * scale));
            }
        }
    }

    #[test]
    fn energy_identity_for_every_scheme() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for mesh in meshes() {
            for scheme in [Extrusion::DualCell, Extrusion::FaceAverage, Extrusion::ArithmeticMean] {
                let c = ctx_for(mesh.clone(), scheme);
                for _ in 0..20 {
                    let v = random(c.ops.n_facets(), &mut rng);
                    let q = c.contraction(&v, &c.ops.curl(&v)).unwrap();
                    let scale = c.ops.norm_l2h(&v) * c.ops.norm_l2h(&q);
                    assert!(pair(&c, &v, &q).abs() <= 1e-12 * scale);
                }
            }
        }
    }

    #[test]
    fn lamb_form_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for mesh in meshes() {
            for scheme in [Extrusion::DualCell, Extrusion::FaceAverage] {
                let c = ctx_for(mesh.clone(), scheme);
                let n = c.ops.n_facets();
                let (x, y, z) = (random(n, &mut rng), random(n, &mut rng), random(n, &mut rng));
                let q = c.lamb(&x, &x).unwrap();
                let d = c.contraction(&x, &c.ops.curl(&x)).unwrap();
                let qs = crate::sparse::max_abs(&q);
                assert!(q.iter().zip(&d).all(|(a, b)| (a - b).abs() <= 1e-13 * qs));

                let al = rng.random_range(-2.0..2.0);
                let xa: Vec<f64> = x.iter().map(|v| al * v).collect();
                let a = c.lamb(&xa, &y).unwrap();
                let b = c.lamb(&x, &y).unwrap();
                let bs = crate::sparse::max_abs(&b);
                assert!(a.iter().zip(&b).all(|(a, b)| (a - al * b).abs() <= 1e-13 * bs.max(1.0)));
                let ya: Vec<f64> = y.iter().map(|v| al * v).collect();
                let a = c.lamb(&x, &ya).unwrap();
                assert!(a.iter().zip(&b).all(|(a, b)| (a - al * b).abs() <= 1e-13 * bs.max(1.0)));

                let phi = |a: &[f64], b: &[f64], cc: &[f64]| pair(&c, a, &c.lamb(b, cc).unwrap());
                let terms = [phi(&x, &y, &z), phi(&x, &z, &y), phi(&y, &x, &z), phi(&y, &z, &x), phi(&z, &x, &y), phi(&z, &y, &x)];
                let scale: f64 = terms.iter().map(|t| t.abs()).sum();
                assert!(terms.iter().sum::<f64>().abs() <= 1e-12 * scale);
                let terms = [phi(&x, &x, &y), phi(&x, &y, &x), phi(&y, &x, &x)];
                let scale: f64 = terms.iter().map(|t| t.abs()).sum();
                assert!(terms.iter().sum::<f64>().abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn contraction_trivial_cases() {
        let c = ctx_for(build_torus_mesh(8, Family::Perturbed, 0.2, 2).unwrap(), Extrusion::FaceAverage);
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let v = random(c.ops.n_facets(), &mut rng);
        let w = random(c.ops.n_ridges(), &mut rng);
        let zero1 = vec![0.0; c.ops.n_facets()];
        assert!(c.contraction(&zero1, &w).unwrap().iter().all(|x| *x == 0.0));
        let g = c.contraction(&v, &vec![0.0; c.ops.n_ridges()]).unwrap();
        let t = c.ops.dt1.transpose_matvec(&c.extrude_transpose(&v, &v).unwrap());
        for (j, (g, t)) in g.iter().zip(&t).enumerate() {
            assert!((g + 0.5 * t / c.ops.m1[j]).abs() < 1e-14);
        }
        assert!(c.lie_1form(&zero1, &v).unwrap().iter().all(|x| *x == 0.0));
        assert!(c.wedge_11(&zero1, &v).unwrap().iter().all(|x| *x == 0.0));
    }

    #[test]
    fn wedge_pairs_with_contraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for mesh in meshes() {
            let c = ctx_for(mesh, Extrusion::DualCell);
            let (nf, nr) = (c.ops.n_facets(), c.ops.n_ridges());
            let (a, b, w) = (random(nf, &mut rng), random(nf, &mut rng), random(nr, &mut rng));
            let lhs = c.ops.inner(2, &c.wedge_11(&a, &b).unwrap(), &w);
            let rhs = pair(&c, &b, &c.contraction(&a, &w).unwrap());
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
            let ab = c.wedge_11(&a, &b).unwrap();
            let ba = c.wedge_11(&b, &a).unwrap();
            assert!(ab.iter().zip(&ba).all(|(x, y)| (x + y).abs() <= 1e-12 * x.abs().max(1.0)));
            let energy = c.ops.inner(2, &c.wedge_11(&a, &a).unwrap(), &c.ops.curl(&a));
            assert!(energy.abs() < 1e-12 * c.ops.norm_l2h(&a).powi(2));
        }
    }

    #[test]
    fn wedge_12_on_constants() {
        let tau = 2.0 * std::f64::consts::PI;
        let layer = build_torus_mesh(6, Family::Perturbed, 0.2, 3).unwrap();
        let c = ctx_for(extrude_prismatic(&layer, 3, &[tau / 3.0]).unwrap(), Extrusion::DualCell);
        let (a, b) = (vec3(0.3, -0.2, 0.5), vec3(-0.4, 0.1, 0.9));
        let alpha = de_rham_1(c.mesh(), &|_| a);
        let beta = crate::dec::de_rham_2(c.mesh(), &|_| b);
        let w = c.wedge_12(&alpha, &beta).unwrap();
        for (p, w) in c.mesh().peaks.iter().zip(&w) {
            assert!((w - p.dual_volume * a.dot(&b)).abs() < 1e-10 * p.dual_volume);
        }
        let c2 = ctx_for(build_torus_mesh(4, Family::Equilateral, 0.0, 0).unwrap(), Extrusion::DualCell);
        assert!(c2.wedge_12(&vec![0.0; c2.ops.n_facets()], &vec![0.0; c2.ops.n_ridges()]).is_err());
    }

    #[test]
    fn instantaneous_kelvin_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for mesh in meshes() {
            let c = ctx_for(mesh, Extrusion::DualCell);
            for _ in 0..10 {
                let v = random(c.ops.n_facets(), &mut rng);
                let z = random(c.ops.n_ridges(), &mut rng);
                let gamma = c.ops.dt1.transpose_matvec(&z);
                assert!(crate::sparse::max_abs(&c.chain_boundary(&gamma)) < 1e-12);
                let f: Vec<f64> = c.lamb(&v, &v).unwrap().iter().map(|x| -x).collect();
                let a = crate::sparse::dot(&f, &gamma);
                let b = crate::sparse::dot(&v, &c.chain_lie(&v, &gamma).unwrap());
                assert!((a + b).abs() <= 1e-11 * a.abs().max(b.abs()).max(1.0), "{a} {b}");
            }
        }
    }

    #[test]
    fn chain_lie_commutes_with_boundary() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for mesh in meshes() {
            let c = ctx_for(mesh, Extrusion::FaceAverage);
            let v = random(c.ops.n_facets(), &mut rng);
            let gamma = random(c.ops.n_facets(), &mut rng);
            let lhs = c.chain_boundary(&c.chain_lie(&v, &gamma).unwrap());
            let rhs = c.chain_lie_0(&v, &c.chain_boundary(&gamma)).unwrap();
            let s = crate::sparse::max_abs(&lhs).max(1.0);
            assert!(lhs.iter().zip(&rhs).all(|(a, b)| (a - b).abs() <= 1e-12 * s));
            let f = random(c.ops.n_cells(), &mut rng);
            let a = c.lie_1form(&v, &c.ops.grad(&f)).unwrap();
            let b = c.ops.grad(&c.lie_0form(&v, &f).unwrap());
            assert!(a.iter().zip(&b).all(|(a, b)| (a - b).abs() <= 1e-12 * s));
        }
    }

    #[test]
    fn lie_of_exact_2form_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        for mesh in meshes() {
            let c = ctx_for(mesh, Extrusion::DualCell);
            let v = random(c.ops.n_facets(), &mut rng);
            let a = random(c.ops.n_facets(), &mut rng);
            let beta = c.ops.curl(&a);
            let l = c.lie_2form(&v, &beta).unwrap();
            let i: Vec<f64> = c.extrude(&v, &beta).unwrap().iter().zip(&c.ops.m1).map(|(x, m)| 0.5 * x / m).collect();
            let d = c.ops.curl(&i);
            let s = crate::sparse::max_abs(&d).max(1.0);
            assert!(l.iter().zip(&d).all(|(a, b)| (a - b).abs() <= 1e-12 * s));
        }
    }
}
