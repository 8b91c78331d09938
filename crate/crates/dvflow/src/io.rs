//! Cochain files, CSV tables, JSON reports and Matrix Market export.
//!
//! Cochain format, version 1:
//!
//! ```text
//! dvflow-cochain 1
//! degree <k>
//! complex <dim> <cells> <facets> <ridges> <peaks>
//! values <N>              then N lines, one real each
//! end
//! ```
//!
//! Lines starting with `#` are comments. Reals in cochain files use shortest round-trip formatting; CSV cells
//! and Matrix Market entries carry 17 significant digits.

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::sparse::CsrMatrix;
use serde::Serialize;
use std::fmt::Write as _;

pub const COCHAIN_FORMAT_VERSION: u32 = 1;
/// Version of every JSON report envelope.
pub const REPORT_SCHEMA_VERSION: u32 = 1;
/// Version of the CSV column layouts documented in INTERFACES.md.
pub const CSV_SCHEMA_VERSION: u32 = 1;

/// Dual cochain with the shape of the complex it lives on.
#[derive(Clone, Debug, PartialEq)]
pub struct CochainFile {
    pub degree: usize,
    /// `[dim, cells, facets, ridges, peaks]`.
    pub shape: [usize; 5],
    pub values: Vec<f64>,
}

fn shape_of(mesh: &Mesh) -> [usize; 5] {
    [mesh.dim, mesh.n_cells(), mesh.n_facets(), mesh.n_ridges(), mesh.n_peaks()]
}

impl CochainFile {
    pub fn new(mesh: &Mesh, degree: usize, values: Vec<f64>) -> Result<Self> {
        if degree > mesh.dim {
            return Err(Error::arg("degree", format!("{degree} exceeds the dimension {}", mesh.dim)));
        }
        crate::error::check_len(mesh.n_dual(degree), values.len())?;
        Ok(CochainFile { degree, shape: shape_of(mesh), values })
    }

    /// Reject a cochain written on a complex of different shape.
    pub fn check_mesh(&self, mesh: &Mesh) -> Result<()> {
        if self.shape != shape_of(mesh) {
            return Err(Error::InvalidComplex(format!("cochain was written on a complex of shape {:?}, not {:?}", self.shape, shape_of(mesh))));
        }
        Ok(())
    }

    pub fn write(&self) -> String {
        self.write_with_comment("")
    }

    /// Serialize with `comment` as `#` lines after the header.
    pub fn write_with_comment(&self, comment: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "dvflow-cochain {COCHAIN_FORMAT_VERSION}");
        for line in comment.lines() {
            let _ = writeln!(s, "# {line}");
        }
        let _ = writeln!(s, "degree {}", self.degree);
        let [d, c, f, r, p] = self.shape;
        let _ = writeln!(s, "complex {d} {c} {f} {r} {p}");
        let _ = writeln!(s, "values {}", self.values.len());
        for v in &self.values {
            let _ = writeln!(s, "{v:?}");
        }
        s.push_str("end\n");
        s
    }

    pub fn read(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let mut next = |what: &str| lines.next().ok_or_else(|| Error::Parse { line: 0, reason: format!("unexpected end of file, expected {what}") });
        let bad = |line: usize, reason: String| Error::Parse { line, reason };
        let (ln, header) = next("header")?;
        let version = header.strip_prefix("dvflow-cochain ").ok_or_else(|| bad(ln, "missing `dvflow-cochain` header".into()))?;
        if version.trim() != COCHAIN_FORMAT_VERSION.to_string() {
            return Err(bad(ln, format!("unsupported cochain format version {version}")));
        }
        let fields = |ln: usize, l: &str, key: &str, n: usize| -> Result<Vec<usize>> {
            let rest = l.strip_prefix(key).ok_or_else(|| bad(ln, format!("expected `{key}`")))?;
            let v: Vec<usize> = rest.split_whitespace().map(|t| t.parse().map_err(|_| bad(ln, format!("bad integer `{t}`")))).collect::<Result<_>>()?;
            if v.len() != n {
                return Err(bad(ln, format!("`{key}` takes {n} integers")));
            }
            Ok(v)
        };
        let (ln, l) = next("degree")?;
        let degree = fields(ln, l, "degree", 1)?[0];
        let (ln, l) = next("complex")?;
        let c = fields(ln, l, "complex", 5)?;
        let (ln, l) = next("values")?;
        let n = fields(ln, l, "values", 1)?[0];
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            let (ln, l) = next("value")?;
            values.push(l.parse::<f64>().map_err(|_| bad(ln, format!("bad real `{l}`")))?);
        }
        let (ln, l) = next("end")?;
        if l != "end" {
            return Err(bad(ln, "expected `end`".into()));
        }
        let shape = [c[0], c[1], c[2], c[3], c[4]];
        let expected = match degree {
            0 => shape[1],
            1 => shape[2],
            2 => shape[3],
            3 => shape[4],
            _ => return Err(bad(0, format!("degree {degree} out of range"))),
        };
        if expected != n {
            return Err(Error::ShapeMismatch { expected, got: n });
        }
        Ok(CochainFile { degree, shape, values })
    }
}

/// A real with 17 significant digits.
pub fn format_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// Cell of a CSV row.
#[derive(Clone, Debug, PartialEq)]
pub enum Field {
    Int(i64),
    Real(f64),
    Text(String),
}

impl From<f64> for Field {
    fn from(x: f64) -> Self {
        Field::Real(x)
    }
}
impl From<usize> for Field {
    fn from(x: usize) -> Self {
        Field::Int(x as i64)
    }
}
impl From<&str> for Field {
    fn from(x: &str) -> Self {
        Field::Text(x.to_string())
    }
}
impl From<String> for Field {
    fn from(x: String) -> Self {
        Field::Text(x)
    }
}

/// Header line followed by rows in fixed column order.
pub fn write_csv(header: &[&str], rows: &[Vec<Field>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(header).map_err(io)?;
    for (i, r) in rows.iter().enumerate() {
        if r.len() != header.len() {
            return Err(Error::arg("csv", format!("row {i} has {} fields, header has {}", r.len(), header.len())));
        }
        w.write_record(r.iter().map(|f| match f {
            Field::Int(v) => v.to_string(),
            Field::Real(v) => format_real(*v),
            Field::Text(s) => s.clone(),
        }))
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(std::io::Error::other(e)))
}

/// JSON report envelope: schema name and version, the configuration that
/// produced it, and the result body.
#[derive(Serialize)]
pub struct Report<'a, C: Serialize, R: Serialize> {
    pub schema: &'a str,
    pub schema_version: u32,
    pub config: &'a C,
    pub result: &'a R,
}

/// Pretty-printed report; non-finite reals become `null`.
pub fn write_report<C: Serialize, R: Serialize>(schema: &str, config: &C, result: &R) -> Result<String> {
    let r = Report { schema, schema_version: REPORT_SCHEMA_VERSION, config, result };
    let mut s = serde_json::to_string_pretty(&r).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    s.push('\n');
    Ok(s)
}

/// Matrix Market coordinate file (1-based indices, 17 significant digits).
pub fn write_matrix_market(m: &CsrMatrix, comment: &str) -> String {
    let mut s = String::from("%%MatrixMarket matrix coordinate real general\n");
    for line in comment.lines() {
        let _ = writeln!(s, "% {line}");
    }
    let nnz = m.indptr.last().copied().unwrap_or(0);
    let _ = writeln!(s, "{} {} {}", m.nrows, m.ncols, nnz);
    for i in 0..m.nrows {
        for p in m.indptr[i]..m.indptr[i + 1] {
            let _ = writeln!(s, "{} {} {}", i + 1, m.indices[p] + 1, format_real(m.values[p]));
        }
    }
    s
}

/// Diagonal matrix in Matrix Market form.
pub fn write_matrix_market_diagonal(d: &[f64], comment: &str) -> String {
    write_matrix_market(&CsrMatrix::diag(d), comment)
}

/// Parse a Matrix Market coordinate file written by [`write_matrix_market`].
pub fn read_matrix_market(text: &str) -> Result<CsrMatrix> {
    let bad = |line: usize, reason: &str| Error::Parse { line, reason: reason.to_string() };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.starts_with('%') && !l.trim().is_empty());
    let (ln, size) = lines.next().ok_or_else(|| bad(0, "missing size line"))?;
    let dims: Vec<usize> = size.split_whitespace().map(|t| t.parse().map_err(|_| bad(ln + 1, "bad size line"))).collect::<Result<_>>()?;
    if dims.len() != 3 {
        return Err(bad(ln + 1, "size line needs rows, columns and entries"));
    }
    let mut trip = Vec::with_capacity(dims[2]);
    for (ln, l) in lines {
        let t: Vec<&str> = l.split_whitespace().collect();
        if t.len() != 3 {
            return Err(bad(ln + 1, "entry needs row, column and value"));
        }
        let i: usize = t[0].parse().map_err(|_| bad(ln + 1, "bad row"))?;
        let j: usize = t[1].parse().map_err(|_| bad(ln + 1, "bad column"))?;
        let v: f64 = t[2].parse().map_err(|_| bad(ln + 1, "bad value"))?;
        if i == 0 || j == 0 || i > dims[0] || j > dims[1] {
            return Err(bad(ln + 1, "index out of range"));
        }
        trip.push((i - 1, j - 1, v));
    }
    if trip.len() != dims[2] {
        return Err(bad(0, "entry count does not match the size line"));
    }
    Ok(CsrMatrix::from_triplets(dims[0], dims[1], &trip))
}
