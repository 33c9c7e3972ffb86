//! Plain-text field export.
//!
//! Layout:
//! ```text
//! # eyeheat field
//! dim <d>
//! vertices <n>
//! x y [z] T          (n lines)
//! cells <m>
//! v0 v1 v2 [v3] region   (m lines, 0-based vertex indices)
//! ```

use std::io::{BufRead, Write};

use super::DiscreteField;
use crate::error::{Error, Result};
use crate::mesh::Mesh;

pub fn write_field(mesh: &Mesh, field: &DiscreteField, mut w: impl Write) -> Result<()> {
    if field.mesh_id() != mesh.id() {
        return Err(Error::MeshMismatch("field was computed on another mesh".into()));
    }
    writeln!(w, "# eyeheat field")?;
    writeln!(w, "dim {}", mesh.dim())?;
    writeln!(w, "vertices {}", mesh.n_vertices())?;
    for (v, t) in field.values().iter().enumerate() {
        for x in mesh.vertex(v) {
            write!(w, "{x} ")?;
        }
        writeln!(w, "{t}")?;
    }
    writeln!(w, "cells {}", mesh.n_cells())?;
    for c in 0..mesh.n_cells() {
        for v in mesh.cell(c) {
            write!(w, "{v} ")?;
        }
        writeln!(w, "{}", mesh.cell_region(c))?;
    }
    Ok(())
}

/// Reads back the vertex block of an exported field: coordinates and values.
pub fn read_field(r: impl BufRead) -> Result<(usize, Vec<f64>, Vec<f64>)> {
    let bad = |msg: &str| Error::Validation(format!("field file: {msg}"));
    let mut lines = r.lines().filter(|l| !matches!(l, Ok(s) if s.starts_with('#')));
    let mut header = |key: &str| -> Result<usize> {
        let l = lines.next().ok_or_else(|| bad("truncated header"))??;
        l.strip_prefix(key)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| bad(&format!("expected `{key} <n>`")))
    };
    let dim = header("dim")?;
    let n = header("vertices")?;
    let mut coords = Vec::with_capacity(n * dim);
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        let l = lines.next().ok_or_else(|| bad("truncated vertex block"))??;
        let v: Vec<f64> = l
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad("malformed number")))
            .collect::<Result<_>>()?;
        if v.len() != dim + 1 {
            return Err(bad("vertex line has the wrong number of fields"));
        }
        coords.extend_from_slice(&v[..dim]);
        values.push(v[dim]);
    }
    Ok((dim, coords, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate::unit_square;
    use crate::mesh::BoundaryLabel;

    #[test]
    fn export_roundtrip() {
        let m = unit_square(2, "lens", BoundaryLabel::Amb).unwrap();
        let vals: Vec<f64> = (0..m.n_vertices()).map(|v| 300.0 + v as f64 / 3.0).collect();
        let f = DiscreteField::new(&m, vals.clone()).unwrap();
        let mut buf = Vec::new();
        write_field(&m, &f, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("cells 8\n"));
        let (dim, coords, back) = read_field(&buf[..]).unwrap();
        assert_eq!(dim, 2);
        assert_eq!(coords, m.coords());
        assert_eq!(back, vals);
    }
}
