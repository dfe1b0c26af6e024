//! Plain-text mesh files and legacy VTK output.
//!
//! The native format is
//!
//! ```text
//! stmesh <dim> <nv> <ne>
//! x_1 .. x_d t        (nv lines)
//! i_0 .. i_dim        (ne lines, 0-based)
//! ```
//!
//! where `dim = d + 1`. Blank lines and lines starting with `#` are skipped.

use std::io::{BufRead, Write};

use super::SpaceTimeMesh;
use crate::error::{Error, Result};

pub fn write_stmesh<W: Write>(mesh: &SpaceTimeMesh, mut out: W) -> Result<()> {
    let dim = mesh.dim();
    writeln!(
        out,
        "stmesh {} {} {}",
        dim,
        mesh.n_vertices(),
        mesh.n_elements()
    )?;
    for p in mesh.vertices() {
        let coords: Vec<String> = p[..dim].iter().map(|c| format!("{c:.17e}")).collect();
        writeln!(out, "{}", coords.join(" "))?;
    }
    for k in 0..mesh.n_elements() {
        let ids: Vec<String> = mesh.element(k).iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", ids.join(" "))?;
    }
    Ok(())
}

pub fn read_stmesh<R: BufRead>(input: R) -> Result<SpaceTimeMesh> {
    let mut lines = input
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| match l {
            Ok(s) => {
                let s = s.trim();
                !s.is_empty() && !s.starts_with('#')
            }
            Err(_) => true,
        });
    let parse_err = |line: usize, msg: &str| Error::Parse {
        line,
        msg: msg.to_string(),
    };

    let (lno, header) = lines.next().ok_or_else(|| parse_err(0, "empty file"))?;
    let header = header?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 || fields[0] != "stmesh" {
        return Err(parse_err(lno, "expected header 'stmesh <dim> <nv> <ne>'"));
    }
    let num = |s: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| parse_err(lno, &format!("bad integer '{s}'")))
    };
    let (dim, nv, ne) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
    if !(2..=3).contains(&dim) {
        return Err(parse_err(lno, "dim must be 2 or 3"));
    }

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (lno, line) = lines
            .next()
            .ok_or_else(|| parse_err(0, "unexpected end of file in vertex block"))?;
        let line = line?;
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(lno, &e.to_string()))?;
        if vals.len() != dim {
            return Err(parse_err(lno, &format!("expected {dim} coordinates")));
        }
        let mut p = [0.0; 3];
        p[..dim].copy_from_slice(&vals);
        vertices.push(p);
    }

    let mut cells = Vec::with_capacity(ne);
    for _ in 0..ne {
        let (lno, line) = lines
            .next()
            .ok_or_else(|| parse_err(0, "unexpected end of file in element block"))?;
        let line = line?;
        let ids: Vec<usize> = line
            .split_whitespace()
            .map(|s| s.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(lno, &e.to_string()))?;
        if ids.len() != dim + 1 {
            return Err(parse_err(
                lno,
                &format!("expected {} vertex indices", dim + 1),
            ));
        }
        cells.push(ids);
    }
    SpaceTimeMesh::from_raw(dim, vertices, cells)
}

/// A named scalar field attached to points or cells.
pub struct VtkField<'a> {
    pub name: &'a str,
    pub values: &'a [f64],
}

/// Legacy ASCII unstructured grid. Point fields must have one value per
/// vertex, cell fields one per element.
pub fn write_vtk<W: Write>(
    mesh: &SpaceTimeMesh,
    point_data: &[VtkField<'_>],
    cell_data: &[VtkField<'_>],
    mut out: W,
) -> Result<()> {
    for f in point_data {
        if f.values.len() != mesh.n_vertices() {
            return Err(Error::DimensionMismatch {
                expected: mesh.n_vertices(),
                found: f.values.len(),
            });
        }
    }
    for f in cell_data {
        if f.values.len() != mesh.n_elements() {
            return Err(Error::DimensionMismatch {
                expected: mesh.n_elements(),
                found: f.values.len(),
            });
        }
    }
    let dim = mesh.dim();
    let nloc = dim + 1;
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "space-time mesh")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {} double", mesh.n_vertices())?;
    for p in mesh.vertices() {
        writeln!(out, "{:e} {:e} {:e}", p[0], p[1], p[2])?;
    }
    writeln!(
        out,
        "CELLS {} {}",
        mesh.n_elements(),
        mesh.n_elements() * (nloc + 1)
    )?;
    for k in 0..mesh.n_elements() {
        let ids: Vec<String> = mesh.element(k).iter().map(|v| v.to_string()).collect();
        writeln!(out, "{} {}", nloc, ids.join(" "))?;
    }
    writeln!(out, "CELL_TYPES {}", mesh.n_elements())?;
    let cell_type = if dim == 2 { 5 } else { 10 };
    for _ in 0..mesh.n_elements() {
        writeln!(out, "{cell_type}")?;
    }
    if !point_data.is_empty() {
        writeln!(out, "POINT_DATA {}", mesh.n_vertices())?;
        for f in point_data {
            write_scalars(&mut out, f)?;
        }
    }
    if !cell_data.is_empty() {
        writeln!(out, "CELL_DATA {}", mesh.n_elements())?;
        for f in cell_data {
            write_scalars(&mut out, f)?;
        }
    }
    Ok(())
}

fn write_scalars<W: Write>(out: &mut W, f: &VtkField<'_>) -> Result<()> {
    writeln!(out, "SCALARS {} double 1", f.name)?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for v in f.values {
        writeln!(out, "{v:e}")?;
    }
    Ok(())
}
