//! Discrete helicity `H_h = int (Q1 v) . (Q2 D~1 v)` on prismatic complexes.
//!
//! Velocity and vorticity are reconstructed at the dual vertices (Gram
//! reconstructions over dual edges and dual faces respectively) and
//! extended piecewise linearly over a simplicial refinement of the dual
//! complex: each dual 3-cell is a polygonal prism between two horizontal
//! dual faces, fanned from the face centres into triangular prisms and
//! split into three tetrahedra each. The centre value is the mean of the
//! face's corner values. Products of P1 fields are integrated exactly.

use crate::dec::Operators;
use crate::error::{check_len, Error, Result};
use crate::geom::{self, Mat3, Vec3};
use crate::mesh::Mesh;
use crate::recon::{ReconstructionContext, VectorMap};

/// A node of the refinement: a weighted combination of dual vertices.
type Node = Vec<(usize, f64)>;

#[derive(Clone, Debug)]
struct Tet {
    nodes: [usize; 4],
    volume: f64,
}

/// Precomputed refinement and vorticity reconstruction.
#[derive(Debug)]
pub struct HelicityQuadrature {
    nodes: Vec<Node>,
    tets: Vec<Tet>,
    vorticity: VectorMap,
}

fn tet_volume(p: &[Vec3; 4]) -> f64 {
    ((p[1] - p[0]).dot(&(p[2] - p[0]).cross(&(p[3] - p[0])))).abs() / 6.0
}

impl HelicityQuadrature {
    pub fn new(mesh: &Mesh) -> Result<Self> {
        if mesh.dim != 3 {
            return Err(Error::Unsupported("helicity needs a 3D complex".into()));
        }
        let vorticity = vorticity_map(mesh)?;
        let mut nodes: Vec<Node> = (0..mesh.n_cells()).map(|i| vec![(i, 1.0)]).collect();
        let mut centre_node = vec![usize::MAX; mesh.n_ridges()];
        let mut tets = Vec::new();
        for p in &mesh.peaks {
            // Horizontal dual faces (vertical edges) above and below the vertex.
            let mut faces: Vec<(usize, Vec3, bool)> = Vec::new();
            for inc in &p.ridges {
                let r = &mesh.ridges[inc.index];
                if r.tangent.z.abs() > 0.5 {
                    let shift = inc.shift;
                    faces.push((inc.index, shift, r.pos.z + shift.z > p.pos.z));
                }
            }
            if faces.len() != 2 || faces[0].2 == faces[1].2 {
                return Err(Error::InvalidComplex("dual 3-cell is not a polygonal prism".into()));
            }
            let mut tris: [Vec<(Vec3, usize, Vec3, usize, Vec3, usize)>; 2] = [Vec::new(), Vec::new()];
            for (k, shift, top) in &faces {
                let r = &mesh.ridges[*k];
                if centre_node[*k] == usize::MAX {
                    let w = 1.0 / r.cells.len() as f64;
                    centre_node[*k] = nodes.len();
                    nodes.push(r.cells.iter().map(|(c, _)| (*c, w)).collect());
                }
                let centre_pos = r.cells.iter().map(|(c, s)| mesh.cells[*c].centre + s).sum::<Vec3>() / r.cells.len() as f64 + shift;
                for fi in &r.facets {
                    let f = &mesh.facets[fi.index];
                    let (a, b) = (f.tail.unwrap(), f.head.unwrap());
                    let pa = f.dual_tail + fi.shift + shift;
                    let pb = f.dual_head + fi.shift + shift;
                    tris[*top as usize].push((centre_pos, centre_node[*k], pa, a, pb, b));
                }
            }
            let [bottom, top] = tris;
            for (c0, n0, a0, ia0, b0, ib0) in &bottom {
                let m = top.iter().find(|t| {
                    let d1 = (t.2 - a0).xy().norm() + (t.4 - b0).xy().norm();
                    let d2 = (t.2 - b0).xy().norm() + (t.4 - a0).xy().norm();
                    d1.min(d2) < 1e-9 * (1.0 + a0.norm())
                });
                let Some(&(c1, n1, mut a1, mut ia1, mut b1, mut ib1)) = m else {
                    return Err(Error::InvalidComplex("unmatched dual edge in a dual 3-cell".into()));
                };
                if (a1 - a0).xy().norm() > (b1 - a0).xy().norm() {
                    std::mem::swap(&mut a1, &mut b1);
                    std::mem::swap(&mut ia1, &mut ib1);
                }
                let pts = [*c0, *a0, *b0, c1, a1, b1];
                let ids = [*n0, *ia0, *ib0, n1, ia1, ib1];
                for t in [[0, 1, 2, 3], [1, 2, 3, 4], [2, 3, 4, 5]] {
                    let p4 = [pts[t[0]], pts[t[1]], pts[t[2]], pts[t[3]]];
                    tets.push(Tet { nodes: [ids[t[0]], ids[t[1]], ids[t[2]], ids[t[3]]], volume: tet_volume(&p4) });
                }
            }
        }
        Ok(HelicityQuadrature { nodes, tets, vorticity })
    }

    /// Total volume of the refinement (equals the domain volume).
    pub fn volume(&self) -> f64 {
        self.tets.iter().map(|t| t.volume).sum()
    }

    fn node_values(&self, at_cells: &[Vec3]) -> Vec<Vec3> {
        self.nodes.iter().map(|n| n.iter().map(|(c, w)| at_cells[*c] * *w).sum()).collect()
    }

    /// Exact integral of the product of two P1 vector fields given at the
    /// dual vertices.
    pub fn integrate_product(&self, a: &[Vec3], b: &[Vec3]) -> f64 {
        let (na, nb) = (self.node_values(a), self.node_values(b));
        self.tets
            .iter()
            .map(|t| {
                let sa: Vec3 = t.nodes.iter().map(|&i| na[i]).sum();
                let sb: Vec3 = t.nodes.iter().map(|&i| nb[i]).sum();
                let diag: f64 = t.nodes.iter().map(|&i| na[i].dot(&nb[i])).sum();
                t.volume / 20.0 * (diag + sa.dot(&sb))
            })
            .sum()
    }

    /// Pointwise vorticity at the dual vertices from a dual 2-cochain.
    pub fn vorticity(&self, w: &[f64]) -> Vec<Vec3> {
        self.vorticity.apply(w)
    }

    /// Bilinear helicity `int (Q1 a) . (Q2 D~1 b)`.
    pub fn bilinear(&self, ops: &Operators, recon: &ReconstructionContext, a: &[f64], b: &[f64]) -> Result<f64> {
        check_len(ops.n_facets(), a.len())?;
        check_len(ops.n_facets(), b.len())?;
        let u = recon.gram.apply(a);
        let w = self.vorticity(&ops.curl(b));
        Ok(self.integrate_product(&u, &w))
    }
}

/// Gram reconstruction of a dual 2-cochain at the dual vertices:
/// `w_i = G_i^{-1} sum_k (w_k / A*_k) n_k` over the dual faces through `v_i*`.
fn vorticity_map(mesh: &Mesh) -> Result<VectorMap> {
    let mut per_cell: Vec<Vec<usize>> = vec![Vec::new(); mesh.n_cells()];
    for (k, r) in mesh.ridges.iter().enumerate() {
        for (c, _) in &r.cells {
            if !per_cell[*c].contains(&k) {
                per_cell[*c].push(k);
            }
        }
    }
    let mut t: [Vec<(usize, usize, f64)>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (i, ks) in per_cell.iter().enumerate() {
        let mut g = Mat3::zeros();
        for &k in ks {
            let n = mesh.ridges[k].tangent;
            g += n * n.transpose();
        }
        let ginv = geom::gram_inverse(&g, false).ok_or_else(|| Error::InvalidComplex(format!("singular face Gram matrix at dual vertex {i}")))?;
        for &k in ks {
            let r = &mesh.ridges[k];
            let col = ginv * r.tangent / r.dual_area;
            for (c, tc) in t.iter_mut().enumerate() {
                tc.push((i, k, col[c]));
            }
        }
    }
    Ok(VectorMap { comps: t.map(|tc| crate::sparse::CsrMatrix::from_triplets(mesh.n_cells(), mesh.n_ridges(), &tc)) })
}
