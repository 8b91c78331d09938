//! Versioned plain-text mesh format.
//!
//! ```text
//! dvflow-mesh 1
//! dim <d>
//! domain torus <Lx> <Ly> <Lz> | domain square <side>
//! family <equilateral|perturbed>
//! layers <n> <dz_0> ... <dz_{n-1}>
//! vertices <N>            then N lines: x y z
//! edges <N>               then N lines: tail head wx wy wz
//! cells <N>               then N lines: k v_1..v_k corners(3k) centre(3) volume
//! facets <N>              then N lines: k v_1..v_k corners(3k) area centroid(3) foot(3) normal(3)
//! ridges <N>              then N lines: k v_1..v_k corners(3k) pos(3) tangent(3) length
//! peaks <N>               then N lines: vertex pos(3)
//! incidence <k> <rows> <cols> <nnz>   then nnz lines: row col value
//! end
//! ```
//!
//! Reals are written in shortest round-trip form, so a write/read cycle
//! reproduces the complex bit for bit. Derived measures are recomputed on
//! read by the same assembly as the generators.

use super::{assemble, new_cell, new_facet, new_ridge, Domain, Edge, Family, Mesh, Peak, Skeleton};
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::sparse::CsrMatrix;
use std::fmt::Write as _;

pub const MESH_FORMAT_VERSION: u32 = 1;

fn push_vec(s: &mut String, v: &Vec3) {
    let _ = write!(s, " {} {} {}", v.x, v.y, v.z);
}

fn push_verts(s: &mut String, verts: &[usize], corners: &[Vec3]) {
    let _ = write!(s, "{}", verts.len());
    for v in verts {
        let _ = write!(s, " {v}");
    }
    for c in corners {
        push_vec(s, c);
    }
}

/// Serialize a complex.
pub fn write_mesh(m: &Mesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "dvflow-mesh {MESH_FORMAT_VERSION}");
    let _ = writeln!(s, "dim {}", m.dim);
    match &m.domain {
        Domain::Torus { period } => {
            let _ = writeln!(s, "domain torus {} {} {}", period[0], period[1], period[2]);
        }
        Domain::Square { side } => {
            let _ = writeln!(s, "domain square {side}");
        }
    }
    let _ = writeln!(s, "family {}", m.family.name());
    let _ = write!(s, "layers {}", m.layers.len());
    for h in &m.layers {
        let _ = write!(s, " {h}");
    }
    s.push('\n');
    let _ = writeln!(s, "vertices {}", m.vertices.len());
    for v in &m.vertices {
        let _ = writeln!(s, "{} {} {}", v.x, v.y, v.z);
    }
    let _ = writeln!(s, "edges {}", m.edges.len());
    for e in &m.edges {
        let _ = write!(s, "{} {}", e.tail, e.head);
        push_vec(&mut s, &e.wrap);
        s.push('\n');
    }
    let _ = writeln!(s, "cells {}", m.cells.len());
    for c in &m.cells {
        push_verts(&mut s, &c.verts, &c.corners);
        push_vec(&mut s, &c.centre);
        let _ = writeln!(s, " {}", c.volume);
    }
    let _ = writeln!(s, "facets {}", m.facets.len());
    for f in &m.facets {
        push_verts(&mut s, &f.verts, &f.corners);
        let _ = write!(s, " {}", f.area);
        push_vec(&mut s, &f.centroid);
        push_vec(&mut s, &f.foot);
        push_vec(&mut s, &f.normal);
        s.push('\n');
    }
    let _ = writeln!(s, "ridges {}", m.ridges.len());
    for r in &m.ridges {
        push_verts(&mut s, &r.verts, &r.corners);
        push_vec(&mut s, &r.pos);
        push_vec(&mut s, &r.tangent);
        let _ = writeln!(s, " {}", r.length);
    }
    let _ = writeln!(s, "peaks {}", m.peaks.len());
    for p in &m.peaks {
        let _ = write!(s, "{}", p.vertex);
        push_vec(&mut s, &p.pos);
        s.push('\n');
    }
    for (k, d) in m.incidence.iter().enumerate() {
        let _ = writeln!(s, "incidence {k} {} {} {}", d.nrows, d.ncols, d.nnz());
        for (i, j, v) in d.triplets() {
            let _ = writeln!(s, "{i} {j} {v}");
        }
    }
    s.push_str("end\n");
    s
}

struct Lines<'a> {
    it: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<Vec<&'a str>> {
        loop {
            match self.it.next() {
                Some((i, l)) => {
                    self.line = i + 1;
                    let l = l.trim();
                    if l.is_empty() || l.starts_with('#') {
                        continue;
                    }
                    return Ok(l.split_whitespace().collect());
                }
                None => return Err(self.err("unexpected end of file")),
            }
        }
    }
    fn err(&self, reason: &str) -> Error {
        Error::Parse { line: self.line, reason: reason.to_string() }
    }
    fn keyword(&mut self, key: &str) -> Result<Vec<&'a str>> {
        let t = self.next()?;
        if t.first() != Some(&key) {
            return Err(self.err(&format!("expected `{key}`")));
        }
        Ok(t[1..].to_vec())
    }
    fn count(&mut self, key: &str) -> Result<usize> {
        let t = self.keyword(key)?;
        if t.len() != 1 {
            return Err(self.err(&format!("`{key}` takes one count")));
        }
        self.parse(t[0])
    }
    fn parse<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.parse().map_err(|_| self.err(&format!("cannot parse `{s}`")))
    }
}

struct Fields<'a, 'b> {
    toks: Vec<&'a str>,
    pos: usize,
    lines: &'b Lines<'a>,
}

impl Fields<'_, '_> {
    fn take<T: std::str::FromStr>(&mut self) -> Result<T> {
        let t = self.toks.get(self.pos).ok_or_else(|| self.lines.err("missing field"))?;
        self.pos += 1;
        self.lines.parse(t)
    }
    fn vec(&mut self) -> Result<Vec3> {
        Ok(Vec3::new(self.take()?, self.take()?, self.take()?))
    }
    fn verts(&mut self) -> Result<(Vec<usize>, Vec<Vec3>)> {
        let k: usize = self.take()?;
        let verts = (0..k).map(|_| self.take()).collect::<Result<Vec<usize>>>()?;
        let corners = (0..k).map(|_| self.vec()).collect::<Result<Vec<Vec3>>>()?;
        Ok((verts, corners))
    }
    fn done(&self) -> Result<()> {
        if self.pos == self.toks.len() {
            Ok(())
        } else {
            Err(self.lines.err("trailing fields"))
        }
    }
}

/// Parse a complex written by [`write_mesh`].
pub fn read_mesh(text: &str) -> Result<Mesh> {
    let mut ls = Lines { it: text.lines().enumerate(), line: 0 };
    let head = ls.keyword("dvflow-mesh")?;
    let version: u32 = ls.parse(head.first().copied().unwrap_or(""))?;
    if version != MESH_FORMAT_VERSION {
        return Err(ls.err(&format!("unsupported mesh format version {version}")));
    }
    let dim = ls.count("dim")?;
    if dim != 2 && dim != 3 {
        return Err(ls.err("dimension must be 2 or 3"));
    }
    let d = ls.keyword("domain")?;
    let domain = match d.first().copied() {
        Some("torus") if d.len() == 4 => Domain::Torus { period: [ls.parse(d[1])?, ls.parse(d[2])?, ls.parse(d[3])?] },
        Some("square") if d.len() == 2 => Domain::Square { side: ls.parse(d[1])? },
        _ => return Err(ls.err("malformed domain")),
    };
    let f = ls.keyword("family")?;
    let family: Family = f.first().copied().unwrap_or("").parse().map_err(|_| ls.err("unknown family"))?;
    let l = ls.keyword("layers")?;
    let nl: usize = ls.parse(l.first().copied().unwrap_or(""))?;
    if l.len() != nl + 1 {
        return Err(ls.err("layer count does not match thicknesses"));
    }
    let layers = l[1..].iter().map(|t| ls.parse(t)).collect::<Result<Vec<f64>>>()?;

    macro_rules! fields {
        () => {{
            let toks = ls.next()?;
            Fields { toks, pos: 0, lines: &ls }
        }};
    }

    let nv = ls.count("vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let mut f = fields!();
        vertices.push(f.vec()?);
        f.done()?;
    }
    let ne = ls.count("edges")?;
    let mut edges = Vec::with_capacity(ne);
    for _ in 0..ne {
        let mut f = fields!();
        edges.push(Edge { tail: f.take()?, head: f.take()?, wrap: f.vec()? });
        f.done()?;
    }
    let nc = ls.count("cells")?;
    let mut cells = Vec::with_capacity(nc);
    for _ in 0..nc {
        let mut f = fields!();
        let (v, c) = f.verts()?;
        let centre = f.vec()?;
        let vol = f.take()?;
        f.done()?;
        cells.push(new_cell(v, c, centre, vol));
    }
    let nf = ls.count("facets")?;
    let mut facets = Vec::with_capacity(nf);
    for _ in 0..nf {
        let mut f = fields!();
        let (v, c) = f.verts()?;
        let area = f.take()?;
        let (centroid, foot, normal) = (f.vec()?, f.vec()?, f.vec()?);
        f.done()?;
        facets.push(new_facet(v, c, area, centroid, foot, normal));
    }
    let nr = ls.count("ridges")?;
    let mut ridges = Vec::with_capacity(nr);
    for _ in 0..nr {
        let mut f = fields!();
        let (v, c) = f.verts()?;
        let (pos, tangent) = (f.vec()?, f.vec()?);
        let length = f.take()?;
        f.done()?;
        ridges.push(new_ridge(v, c, pos, tangent, length));
    }
    let np = ls.count("peaks")?;
    let mut peaks = Vec::with_capacity(np);
    for _ in 0..np {
        let mut f = fields!();
        let vertex = f.take()?;
        let pos = f.vec()?;
        f.done()?;
        peaks.push(Peak { vertex, pos, dual_volume: 0.0, ridges: Vec::new() });
    }
    let mut incidence = Vec::with_capacity(dim);
    for k in 0..dim {
        let h = ls.keyword("incidence")?;
        if h.len() != 4 || ls.parse::<usize>(h[0])? != k {
            return Err(ls.err(&format!("expected incidence {k} <rows> <cols> <nnz>")));
        }
        let (rows, cols, nnz): (usize, usize, usize) = (ls.parse(h[1])?, ls.parse(h[2])?, ls.parse(h[3])?);
        let mut t = Vec::with_capacity(nnz);
        for _ in 0..nnz {
            let mut f = fields!();
            let (i, j, v): (usize, usize, f64) = (f.take()?, f.take()?, f.take()?);
            f.done()?;
            if i >= rows || j >= cols {
                return Err(ls.err("incidence index out of range"));
            }
            t.push((i, j, v));
        }
        incidence.push(CsrMatrix::from_triplets(rows, cols, &t));
    }
    ls.keyword("end")?;
    let check = |ok: bool, what: &str| if ok { Ok(()) } else { Err(Error::InvalidComplex(what.to_string())) };
    check(incidence[0].ncols == nv, "vertex count disagrees with D_0")?;
    check(incidence[0].nrows == ne, "edge count disagrees with D_0")?;
    check(cells.iter().all(|c| c.verts.iter().all(|&v| v < nv)), "cell vertex out of range")?;
    check(facets.iter().all(|c| c.verts.iter().all(|&v| v < nv)), "facet vertex out of range")?;
    check(ridges.iter().all(|c| c.verts.iter().all(|&v| v < nv)), "ridge vertex out of range")?;
    check(incidence[dim - 2].ncols == nr && incidence[dim - 1].nrows == nc && incidence[dim - 1].ncols == nf, "cell counts disagree with incidence")?;
    check(dim == 2 || np == nv, "3D complex needs one peak per vertex")?;
    assemble(Skeleton { dim, domain, family, vertices, edges, cells, facets, ridges, peaks, incidence, layers })
}
