//! Mesh quality audit: regularity constants, well-centredness and the two
//! exact-symmetry properties that separate the mesh families.

use super::Mesh;
use crate::geom::{self, Mat3, Vec3};
use serde::{Deserialize, Serialize};

/// Quality report of a complex. Lengths are in domain units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshAudit {
    pub dim: usize,
    /// Primal cell counts by degree.
    pub counts: Vec<usize>,
    pub euler_characteristic: i64,
    /// `max_j l*_j`.
    pub h: f64,
    /// `min_j l*_j`.
    pub h_min: f64,
    pub quasi_uniformity: f64,
    /// Minimum inradius over diameter of the primal triangles (of their
    /// horizontal cross-sections for prisms, scaled by the layer aspect).
    pub shape_regularity: f64,
    /// Same minimum over cells touching the boundary (bounded domains).
    pub shape_regularity_boundary: Option<f64>,
    /// Same minimum over cells away from the boundary (bounded domains).
    pub shape_regularity_interior: Option<f64>,
    /// Maximum number of edges meeting at a primal vertex.
    pub max_valence: usize,
    /// Minimum signed distance from a circumcentre to the faces of its
    /// cell; negative means the circumcentre lies outside.
    pub containment_margin: f64,
    /// `max_j |mid(e*_j) - c(f_j)| + max_k |c(f*_k) - x(e_k)|`, over `h^2`.
    pub centroid_proximity: f64,
    /// Vertical part of the centroid-proximity deviation (3D), over `h^2`.
    pub centroid_proximity_vertical: f64,
    /// Largest entry of the third-moment tensor `sum l* t (x) t (x) t`
    /// summed over the two cells sharing a facet, over `h^2`.
    pub symmetry_residual: f64,
    /// Largest primal-dual orthogonality defect (sine of the angle).
    pub orthogonality_residual: f64,
    /// Largest condition number of the cell Gram matrices `sum t t^T`.
    pub gram_condition: f64,
    pub min_measure: f64,
}

/// Compute the audit of a complex. Never fails: violations are reported.
pub fn audit_mesh(m: &Mesh) -> MeshAudit {
    let h = m.h();
    let interior_lengths = m.facets.iter().map(|f| if f.boundary { 2.0 * f.dual_length } else { f.dual_length });
    let h_min = interior_lengths.fold(f64::INFINITY, f64::min);
    let h2 = h * h;

    // shape regularity
    let mut shape = f64::INFINITY;
    let mut shape_b = f64::INFINITY;
    let mut shape_i = f64::INFINITY;
    for c in &m.cells {
        let p = &c.corners;
        let (a, b, cc) = (p[0], p[1], p[2]);
        let diam = geom::diameter(&a, &b, &cc);
        let mut r = geom::inradius(&a, &b, &cc) / diam;
        if m.dim == 3 {
            let dz = (p[3].z - p[0].z).abs();
            r *= (dz / diam).min(diam / dz).min(1.0);
        }
        shape = shape.min(r);
        if c.facets.iter().any(|i| m.facets[i.index].boundary) {
            shape_b = shape_b.min(r);
        } else {
            shape_i = shape_i.min(r);
        }
    }
    let bounded = m.has_boundary();

    // containment margin
    let mut margin = f64::INFINITY;
    for c in &m.cells {
        for inc in &c.facets {
            let f = &m.facets[inc.index];
            let d = inc.sign * f.normal.dot(&(f.centroid + inc.shift - c.centre));
            margin = margin.min(d);
        }
    }

    // centroid proximity
    let mut dev_f: f64 = 0.0;
    let mut dev_r: f64 = 0.0;
    let mut dev_fz: f64 = 0.0;
    let mut dev_rz: f64 = 0.0;
    for f in &m.facets {
        let d = f.dual_midpoint() - f.centroid;
        dev_f = dev_f.max(d.norm());
        dev_fz = dev_fz.max(d.z.abs());
    }
    for r in &m.ridges {
        let d = r.dual_centroid - r.pos;
        dev_r = dev_r.max(d.norm());
        dev_rz = dev_rz.max(d.z.abs());
    }

    // reconstruction symmetry, per facet
    let moments: Vec<[f64; 27]> = m
        .cells
        .iter()
        .map(|c| {
            let mut t = [0.0; 27];
            for inc in &c.facets {
                let f = &m.facets[inc.index];
                let n = inc.sign * f.normal;
                for a in 0..3 {
                    for b in 0..3 {
                        for d in 0..3 {
                            t[9 * a + 3 * b + d] += f.dual_length * n[a] * n[b] * n[d];
                        }
                    }
                }
            }
            t
        })
        .collect();
    let mut sym: f64 = 0.0;
    for f in &m.facets {
        if let (Some(a), Some(b)) = (f.tail, f.head) {
            for q in 0..27 {
                sym = sym.max((moments[a][q] + moments[b][q]).abs());
            }
        }
    }

    // orthogonality
    let mut orth: f64 = 0.0;
    for f in &m.facets {
        let d = (f.dual_head - f.dual_tail) / f.dual_length;
        orth = orth.max(d.cross(&f.normal).norm());
    }
    for r in &m.ridges {
        for inc in &r.facets {
            let f = &m.facets[inc.index];
            orth = orth.max(((f.dual_head - f.dual_tail) / f.dual_length).dot(&r.tangent).abs());
        }
        if m.dim == 3 {
            for p in &r.corners[1..] {
                let e = (p - r.corners[0]).normalize();
                orth = orth.max(e.cross(&r.tangent).norm());
            }
        }
    }

    // Gram conditioning
    let mut cond: f64 = 1.0;
    for c in &m.cells {
        let mut g = Mat3::zeros();
        for inc in &c.facets {
            let n: Vec3 = m.facets[inc.index].normal;
            g += n * n.transpose();
        }
        cond = cond.max(geom::condition_number(&g, m.dim == 2));
    }

    let max_valence = if m.dim == 2 {
        m.ridges.iter().map(|r| r.facets.len()).max().unwrap_or(0)
    } else {
        m.peaks.iter().map(|p| p.ridges.len()).max().unwrap_or(0)
    };

    let mut min_measure = f64::INFINITY;
    for c in &m.cells {
        min_measure = min_measure.min(c.volume);
    }
    for f in &m.facets {
        min_measure = min_measure.min(f.area).min(f.dual_length);
    }
    for r in &m.ridges {
        min_measure = min_measure.min(r.length).min(r.dual_area);
    }
    for p in &m.peaks {
        min_measure = min_measure.min(p.dual_volume);
    }

    MeshAudit {
        dim: m.dim,
        counts: (0..=m.dim).map(|k| m.n_primal(k)).collect(),
        euler_characteristic: m.euler_characteristic(),
        h,
        h_min,
        quasi_uniformity: h / h_min,
        shape_regularity: shape,
        shape_regularity_boundary: bounded.then_some(shape_b),
        shape_regularity_interior: bounded.then_some(shape_i),
        max_valence,
        containment_margin: margin,
        centroid_proximity: (dev_f + dev_r) / h2,
        centroid_proximity_vertical: (dev_fz + dev_rz) / h2,
        symmetry_residual: sym / h2,
        orthogonality_residual: orth,
        gram_condition: cond,
        min_measure,
    }
}
