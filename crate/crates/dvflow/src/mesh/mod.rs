//! Delaunay-Voronoi cell complexes.
//!
//! A complex of dimension `d` pairs every primal `k`-cell with one dual
//! `(d-k)`-cell through its circumcentric dual. The names used below follow
//! the codimension, which is what the flow solver actually indexes:
//!
//! | name   | primal               | dual          | cochain carried |
//! |--------|----------------------|---------------|-----------------|
//! | cell   | triangle / prism     | dual vertex   | pressure (0)    |
//! | facet  | edge / face          | dual edge     | velocity (1)    |
//! | ridge  | vertex / edge        | dual face     | vorticity (2)   |
//! | peak   | - / vertex           | dual 3-cell   | density (3)     |
//!
//! Orientation conventions: primal edges point from the lower to the
//! higher vertex ID, except vertical prism edges, which always point along
//! `+z` (the wrap-around layer would otherwise flip). Triangles are
//! counterclockwise and a face normal follows its vertex loop by the right
//! hand rule. A dual edge points along its facet normal, from the cell
//! whose boundary contains the facet with sign `+1` (tail) to the cell with
//! sign `-1` (head). A dual face is oriented by its ridge tangent (`+z` for
//! 2D vertices) and a dual 3-cell outward. The dual coboundaries are then
//! `D~0 = -D_{d-1}^T`, `D~1 = s D_{d-2}^T` and `D~2 = -D_0^T`, with the
//! global sign `s` measured from the geometry at assembly time and stored
//! in [`Mesh::dual_sign`] (`s = +1` in 2D).
//!
//! Periodic images: every cell, facet, ridge and peak stores the corner
//! coordinates of its vertices in its own unwrapped frame. Incidence records
//! carry the translation between the two frames, found from a shared
//! vertex, so the incidence matrices stay purely combinatorial.

pub mod audit;
pub mod io;
mod prism;
mod square;
mod torus;

pub use audit::{audit_mesh, MeshAudit};
pub use io::{read_mesh, write_mesh};
pub use prism::extrude_prismatic;
pub use square::build_square_dirichlet;
pub use torus::{build_torus_mesh, build_torus_mesh_with, TorusOptions};

use crate::error::{Error, Result};
use crate::geom::{self, Vec3};
use crate::sparse::CsrMatrix;
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicU64, Ordering};

/// Mesh family: the exact lattice (reconstruction symmetry and centroid
/// proximity hold exactly) or a jittered lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Equilateral,
    Perturbed,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Equilateral => "equilateral",
            Family::Perturbed => "perturbed",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "equilateral" | "structured" | "B" | "b" => Ok(Family::Equilateral),
            "perturbed" | "A" | "a" => Ok(Family::Perturbed),
            _ => Err(Error::arg("family", format!("unknown family `{s}`"))),
        }
    }
}

/// Physical domain of a complex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    /// Flat periodic box; `period[2]` is unused in 2D.
    Torus { period: [f64; 3] },
    /// Bounded square `[0, side]^2` with no-slip walls.
    Square { side: f64 },
}

/// Primal edge with the translation that carries the canonical head vertex
/// to the image adjacent to the tail.
#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
    pub wrap: Vec3,
}

/// Incidence record: neighbour index, signed incidence number, and the
/// translation taking the neighbour's frame into this object's frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Incident {
    pub index: usize,
    pub sign: f64,
    pub shift: Vec3,
}

/// Top-dimensional primal cell and its dual vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub verts: Vec<usize>,
    pub corners: Vec<Vec3>,
    /// Circumcentre: the dual vertex.
    pub centre: Vec3,
    /// `|K_i|`.
    pub volume: f64,
    /// Boundary facets with their signs from `D_{d-1}`.
    pub facets: Vec<Incident>,
}

/// Codimension-one primal cell and its dual edge.
#[derive(Clone, Debug, PartialEq)]
pub struct Facet {
    pub verts: Vec<usize>,
    /// Vertex loop in the facet frame.
    pub corners: Vec<Vec3>,
    /// `A_j` (edge length in 2D, face area in 3D).
    pub area: f64,
    pub centroid: Vec3,
    /// Circumcentre of the facet: endpoint of a boundary half dual edge.
    pub foot: Vec3,
    /// Unit normal; equals the dual edge tangent.
    pub normal: Vec3,
    pub tail: Option<usize>,
    pub head: Option<usize>,
    /// Dual edge endpoints in the facet frame.
    pub dual_tail: Vec3,
    pub dual_head: Vec3,
    /// `l*_j`.
    pub dual_length: f64,
    pub boundary: bool,
}

impl Facet {
    pub fn dual_midpoint(&self) -> Vec3 {
        0.5 * (self.dual_tail + self.dual_head)
    }
}

/// Codimension-two primal cell and its dual face.
#[derive(Clone, Debug, PartialEq)]
pub struct Ridge {
    pub verts: Vec<usize>,
    pub corners: Vec<Vec3>,
    /// Frame origin: the vertex (2D) or edge midpoint (3D).
    pub pos: Vec3,
    /// Orientation of the dual face.
    pub tangent: Vec3,
    /// `|sigma_k|`: 1 for a 2D vertex, the edge length in 3D.
    pub length: f64,
    /// `A*_k`.
    pub dual_area: f64,
    pub dual_centroid: Vec3,
    /// Dual edges on the boundary of the dual face, signs from `D~1`.
    pub facets: Vec<Incident>,
    /// Dual vertices of the dual face, translated into the ridge frame.
    pub cells: Vec<(usize, Vec3)>,
    pub boundary: bool,
}

/// Primal vertex of a 3D complex and its dual 3-cell.
#[derive(Clone, Debug, PartialEq)]
pub struct Peak {
    pub vertex: usize,
    pub pos: Vec3,
    pub dual_volume: f64,
    /// Dual faces bounding the dual cell, signs from `D~2`.
    pub ridges: Vec<Incident>,
}

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

/// Immutable primal-dual complex with all measures assembled.
#[derive(Clone, Debug)]
pub struct Mesh {
    pub dim: usize,
    pub domain: Domain,
    pub family: Family,
    pub vertices: Vec<Vec3>,
    pub edges: Vec<Edge>,
    pub cells: Vec<Cell>,
    pub facets: Vec<Facet>,
    pub ridges: Vec<Ridge>,
    pub peaks: Vec<Peak>,
    /// Primal incidence `D_k` (rows: `(k+1)`-cells, columns: `k`-cells).
    pub incidence: Vec<CsrMatrix>,
    /// Global sign of `D~1` relative to `D_{d-2}^T`.
    pub dual_sign: f64,
    /// Layer thicknesses of an extruded complex.
    pub layers: Vec<f64>,
    /// Identity tag binding cochains to this complex.
    pub id: u64,
}

impl PartialEq for Mesh {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.domain == other.domain
            && self.family == other.family
            && self.vertices == other.vertices
            && self.edges == other.edges
            && self.cells == other.cells
            && self.facets == other.facets
            && self.ridges == other.ridges
            && self.peaks == other.peaks
            && self.incidence == other.incidence
            && self.layers == other.layers
    }
}

impl Mesh {
    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }
    pub fn n_facets(&self) -> usize {
        self.facets.len()
    }
    pub fn n_ridges(&self) -> usize {
        self.ridges.len()
    }
    pub fn n_peaks(&self) -> usize {
        self.peaks.len()
    }

    /// Number of dual `k`-cells (the length of a dual `k`-cochain).
    pub fn n_dual(&self, k: usize) -> usize {
        match k {
            0 => self.n_cells(),
            1 => self.n_facets(),
            2 => self.n_ridges(),
            3 if self.dim == 3 => self.n_peaks(),
            _ => 0,
        }
    }

    /// Number of primal `k`-cells.
    pub fn n_primal(&self, k: usize) -> usize {
        if k > self.dim {
            0
        } else {
            self.n_dual(self.dim - k)
        }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self.domain, Domain::Torus { .. })
    }

    /// `D_{d-1}`: cells by facets.
    pub fn d_top(&self) -> &CsrMatrix {
        &self.incidence[self.dim - 1]
    }

    /// `D_{d-2}`: facets by ridges.
    pub fn d_ridge(&self) -> &CsrMatrix {
        &self.incidence[self.dim - 2]
    }

    pub fn facet_boundary_mask(&self) -> Vec<bool> {
        self.facets.iter().map(|f| f.boundary).collect()
    }

    pub fn ridge_boundary_mask(&self) -> Vec<bool> {
        self.ridges.iter().map(|r| r.boundary).collect()
    }

    pub fn has_boundary(&self) -> bool {
        self.facets.iter().any(|f| f.boundary)
    }

    /// Domain size: the periods of a torus or the side of the square.
    pub fn extent(&self) -> Vec3 {
        match &self.domain {
            Domain::Torus { period } => Vec3::new(period[0], period[1], if self.dim == 3 { period[2] } else { 0.0 }),
            Domain::Square { side } => Vec3::new(*side, *side, 0.0),
        }
    }

    /// Mesh size `h = max_j l*_j` (for boundary half edges, twice the half length).
    pub fn h(&self) -> f64 {
        self.facets
            .iter()
            .map(|f| if f.boundary { 2.0 * f.dual_length } else { f.dual_length })
            .fold(0.0, f64::max)
    }

    /// Total volume of the primal cells.
    pub fn volume(&self) -> f64 {
        self.cells.iter().map(|c| c.volume).sum()
    }

    /// Euler characteristic of the primal complex.
    pub fn euler_characteristic(&self) -> i64 {
        (0..=self.dim).map(|k| if k % 2 == 0 { self.n_primal(k) as i64 } else { -(self.n_primal(k) as i64) }).sum()
    }

    /// Values of a field at the dual vertices in the fundamental frame.
    pub fn cell_centres(&self) -> Vec<Vec3> {
        self.cells.iter().map(|c| c.centre).collect()
    }
}

/// Raw description handed to [`assemble`] by the builders.
pub(crate) struct Skeleton {
    pub dim: usize,
    pub domain: Domain,
    pub family: Family,
    pub vertices: Vec<Vec3>,
    pub edges: Vec<Edge>,
    pub cells: Vec<Cell>,
    pub facets: Vec<Facet>,
    pub ridges: Vec<Ridge>,
    pub peaks: Vec<Peak>,
    pub incidence: Vec<CsrMatrix>,
    pub layers: Vec<f64>,
}

pub(crate) fn new_cell(verts: Vec<usize>, corners: Vec<Vec3>, centre: Vec3, volume: f64) -> Cell {
    Cell { verts, corners, centre, volume, facets: Vec::new() }
}

pub(crate) fn new_facet(verts: Vec<usize>, corners: Vec<Vec3>, area: f64, centroid: Vec3, foot: Vec3, normal: Vec3) -> Facet {
    Facet {
        verts,
        corners,
        area,
        centroid,
        foot,
        normal,
        tail: None,
        head: None,
        dual_tail: Vec3::zeros(),
        dual_head: Vec3::zeros(),
        dual_length: 0.0,
        boundary: false,
    }
}

pub(crate) fn new_ridge(verts: Vec<usize>, corners: Vec<Vec3>, pos: Vec3, tangent: Vec3, length: f64) -> Ridge {
    Ridge {
        verts,
        corners,
        pos,
        tangent,
        length,
        dual_area: 0.0,
        dual_centroid: pos,
        facets: Vec::new(),
        cells: Vec::new(),
        boundary: false,
    }
}

/// Translation taking object `b`'s frame into object `a`'s frame through a
/// shared vertex.
fn frame_shift(a_verts: &[usize], a_corners: &[Vec3], b_verts: &[usize], b_corners: &[Vec3]) -> Result<Vec3> {
    for (ia, va) in a_verts.iter().enumerate() {
        if let Some(ib) = b_verts.iter().position(|vb| vb == va) {
            return Ok(a_corners[ia] - b_corners[ib]);
        }
    }
    Err(Error::InvalidComplex("incident cells share no vertex".into()))
}

/// Relative orthogonality tolerance between primal and dual cells.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

/// Fill every derived measure and incidence record and check the
/// structural invariants.
pub(crate) fn assemble(sk: Skeleton) -> Result<Mesh> {
    let Skeleton { dim, domain, family, vertices, edges, mut cells, mut facets, mut ridges, mut peaks, incidence, layers } = sk;
    if incidence.len() != dim {
        return Err(Error::InvalidComplex(format!("expected {dim} incidence matrices")));
    }
    for k in 0..dim.saturating_sub(1) {
        let bad = incidence[k + 1].integer_product_nonzeros(&incidence[k]);
        if bad != 0 {
            return Err(Error::InvalidComplex(format!("D_{} D_{} has {bad} nonzero entries", k + 1, k)));
        }
    }
    let periodic = matches!(domain, Domain::Torus { .. });
    let top = &incidence[dim - 1];
    if top.nrows != cells.len() || top.ncols != facets.len() {
        return Err(Error::InvalidComplex("cell-facet incidence has the wrong shape".into()));
    }

    // cells -> facets, with frame shifts and outward-orientation check
    let mut facet_cells: Vec<Vec<(usize, f64, Vec3)>> = vec![Vec::new(); facets.len()];
    for (ci, cell) in cells.iter_mut().enumerate() {
        let mean = cell.corners.iter().sum::<Vec3>() / cell.corners.len() as f64;
        for (j, s) in top.row(ci) {
            let f = &facets[j];
            let shift = frame_shift(&cell.verts, &cell.corners, &f.verts, &f.corners)?;
            if s * f.normal.dot(&(f.centroid + shift - mean)) <= 0.0 {
                return Err(Error::InvalidComplex(format!("facet {j} is not outward-oriented in cell {ci}")));
            }
            cell.facets.push(Incident { index: j, sign: s, shift });
            facet_cells[j].push((ci, s, shift));
        }
        if cell.volume <= 0.0 {
            return Err(Error::InvalidComplex(format!("cell {ci} has nonpositive measure")));
        }
    }

    // dual edges
    for (j, f) in facets.iter_mut().enumerate() {
        let inc = &facet_cells[j];
        let tails: Vec<_> = inc.iter().filter(|e| e.1 > 0.0).collect();
        let heads: Vec<_> = inc.iter().filter(|e| e.1 < 0.0).collect();
        if tails.len() > 1 || heads.len() > 1 || inc.is_empty() {
            return Err(Error::InvalidComplex(format!("facet {j} has {} incident cells", inc.len())));
        }
        f.boundary = inc.len() == 1;
        if f.boundary && periodic {
            return Err(Error::InvalidComplex(format!("facet {j} has one side on a periodic domain")));
        }
        f.tail = tails.first().map(|e| e.0);
        f.head = heads.first().map(|e| e.0);
        f.dual_tail = tails.first().map(|e| cells[e.0].centre - e.2).unwrap_or(f.foot);
        f.dual_head = heads.first().map(|e| cells[e.0].centre - e.2).unwrap_or(f.foot);
        let d = f.dual_head - f.dual_tail;
        f.dual_length = d.norm();
        if d.dot(&f.normal) <= 0.0 || f.dual_length == 0.0 {
            return Err(Error::InvalidComplex(format!("dual edge {j} is degenerate or reversed")));
        }
        if d.cross(&f.normal).norm() > ORTHOGONALITY_TOL * f.dual_length {
            return Err(Error::InvalidComplex(format!("dual edge {j} is not orthogonal to its facet")));
        }
        if f.area <= 0.0 {
            return Err(Error::InvalidComplex(format!("facet {j} has nonpositive measure")));
        }
    }

    // dual faces
    let dr = &incidence[dim - 2];
    let drt = dr.transpose();
    let mut dual_sign = 0.0;
    for (k, r) in ridges.iter_mut().enumerate() {
        let mut area = 0.0;
        let mut moment = Vec3::zeros();
        for (j, s) in drt.row(k) {
            let f = &facets[j];
            let shift = frame_shift(&r.verts, &r.corners, &f.verts, &f.corners)?;
            let p = f.dual_tail + shift;
            let q = f.dual_head + shift;
            let a = geom::triangle_area(&r.pos, &p, &q, &r.tangent);
            if a == 0.0 {
                return Err(Error::InvalidComplex(format!("dual edge {j} passes through ridge {k}")));
            }
            let geo = a.signum() * s;
            if dual_sign == 0.0 {
                dual_sign = geo;
            } else if geo != dual_sign {
                return Err(Error::InvalidComplex(format!("inconsistent dual orientation at ridge {k}")));
            }
            let sigma = a.signum();
            area += sigma * a;
            moment += sigma * a * (r.pos + p + q) / 3.0;
            r.facets.push(Incident { index: j, sign: sigma, shift });
            r.boundary |= f.boundary;
            for c in [f.tail, f.head] {
                if let Some(c) = c {
                    let cshift = facet_cells[j].iter().find(|e| e.0 == c).map(|e| e.2).unwrap();
                    let sh = shift - cshift;
                    if !r.cells.iter().any(|(i, s)| *i == c && (s - sh).norm() < 1e-9) {
                        r.cells.push((c, sh));
                    }
                }
            }
        }
        if area <= 0.0 {
            return Err(Error::InvalidComplex(format!("dual face {k} has nonpositive area")));
        }
        r.dual_area = area;
        r.dual_centroid = moment / area;
        if r.length <= 0.0 {
            return Err(Error::InvalidComplex(format!("ridge {k} has nonpositive measure")));
        }
    }

    // dual 3-cells
    if dim == 3 {
        let d0t = incidence[0].transpose();
        for (v, p) in peaks.iter_mut().enumerate() {
            let mut vol = 0.0;
            for (k, s) in d0t.row(v) {
                let r = &ridges[k];
                let shift = frame_shift(&[p.vertex], &[p.pos], &r.verts, &r.corners)?;
                let sigma = -s;
                let term = sigma * r.dual_area * (r.dual_centroid + shift - p.pos).dot(&r.tangent) / 3.0;
                if term <= 0.0 {
                    return Err(Error::InvalidComplex(format!("dual face {k} is not outward on dual cell {v}")));
                }
                vol += term;
                p.ridges.push(Incident { index: k, sign: sigma, shift });
            }
            p.dual_volume = vol;
        }
    }

    Ok(Mesh {
        dim,
        domain,
        family,
        vertices,
        edges,
        cells,
        facets,
        ridges,
        peaks,
        incidence,
        dual_sign,
        layers,
        id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
    })
}

/// Corner of a planar triangle list: canonical vertex ID and the integer
/// period multiples that place it in the triangle's unwrapped frame.
pub(crate) type Corner = (usize, [i32; 2]);

/// Build a 2D complex from counterclockwise triangles.
pub(crate) fn from_triangles(domain: Domain, family: Family, vertices: Vec<Vec3>, tris: &[[Corner; 3]]) -> Result<Mesh> {
    let period = match &domain {
        Domain::Torus { period } => [period[0], period[1]],
        Domain::Square { .. } => [0.0, 0.0],
    };
    let place = |(v, s): Corner| vertices[v] + Vec3::new(s[0] as f64 * period[0], s[1] as f64 * period[1], 0.0);
    let mut edge_ids: std::collections::HashMap<(usize, usize, [i32; 2]), usize> = std::collections::HashMap::new();
    let mut edges = Vec::new();
    let mut d0 = Vec::new();
    let mut d1 = Vec::new();
    let mut cells = Vec::with_capacity(tris.len());
    for (t, tri) in tris.iter().enumerate() {
        for i in 0..3 {
            let p = tri[i];
            let q = tri[(i + 1) % 3];
            let (a, b, sign) = if p.0 < q.0 { (p, q, 1.0) } else { (q, p, -1.0) };
            let wrap = [b.1[0] - a.1[0], b.1[1] - a.1[1]];
            let key = (a.0, b.0, wrap);
            let e = *edge_ids.entry(key).or_insert_with(|| {
                edges.push(Edge { tail: a.0, head: b.0, wrap: Vec3::new(wrap[0] as f64 * period[0], wrap[1] as f64 * period[1], 0.0) });
                edges.len() - 1
            });
            d1.push((t, e, sign));
        }
        let corners: Vec<Vec3> = tri.iter().map(|&c| place(c)).collect();
        let area = geom::triangle_area(&corners[0], &corners[1], &corners[2], &geom::ez());
        let centre = geom::circumcentre_2d(&corners[0], &corners[1], &corners[2]);
        cells.push(new_cell(tri.iter().map(|c| c.0).collect(), corners, centre, area));
    }
    let mut facets = Vec::with_capacity(edges.len());
    for (e, edge) in edges.iter().enumerate() {
        d0.push((e, edge.tail, -1.0));
        d0.push((e, edge.head, 1.0));
        let a = vertices[edge.tail];
        let b = vertices[edge.head] + edge.wrap;
        let len = (b - a).norm();
        let mid = 0.5 * (a + b);
        let normal = geom::rot_cw(&((b - a) / len));
        facets.push(new_facet(vec![edge.tail, edge.head], vec![a, b], len, mid, mid, normal));
    }
    let ridges = vertices.iter().enumerate().map(|(v, x)| new_ridge(vec![v], vec![*x], *x, geom::ez(), 1.0)).collect();
    let nv = vertices.len();
    let ne = edges.len();
    let incidence = vec![CsrMatrix::from_triplets(ne, nv, &d0), CsrMatrix::from_triplets(tris.len(), ne, &d1)];
    assemble(Skeleton { dim: 2, domain, family, vertices, edges, cells, facets, ridges, peaks: Vec::new(), incidence, layers: Vec::new() })
}

/// Quality of a planar triangle: smallest signed circumcentre-to-edge
/// distance over the circumradius. Positive iff acute; 0 for a right angle.
pub fn triangle_quality(p: &[Vec3; 3]) -> f64 {
    let d = geom::circumcentre_edge_distances(p, &geom::ez());
    let c = geom::circumcentre_2d(&p[0], &p[1], &p[2]);
    let r = (c - p[0]).norm();
    d.iter().fold(f64::INFINITY, |m, v| m.min(*v)) / r
}

/// Minimum quality accepted by the jittered generators.
pub const MIN_TRIANGLE_QUALITY: f64 = 0.05;
