//! Legacy ASCII VTK unstructured grids.

use std::io::{self, Write};

use crate::geom::{SymTensor2, Vec2};

pub enum PointField<'a> {
    Scalar(&'a [f64]),
    Vector(&'a [Vec2<f64>]),
    Tensor(&'a [SymTensor2<f64>]),
}

/// Cell types used here: 5 = triangle, 9 = quad.
pub struct Grid<'a> {
    pub title: &'a str,
    pub points: &'a [Vec2<f64>],
    pub cells: &'a [Vec<usize>],
}

fn cell_type(n: usize) -> io::Result<u8> {
    match n {
        3 => Ok(5),
        4 => Ok(9),
        _ => Err(io::Error::new(io::ErrorKind::InvalidInput, format!("unsupported cell with {n} points"))),
    }
}

pub fn write_vtk(mut out: impl Write, grid: &Grid<'_>, fields: &[(&str, PointField<'_>)]) -> io::Result<()> {
    let n = grid.points.len();
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "{}", grid.title.lines().next().unwrap_or(""))?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {n} double")?;
    for p in grid.points {
        writeln!(out, "{:.15e} {:.15e} 0", p.x, p.y)?;
    }
    let size: usize = grid.cells.iter().map(|c| c.len() + 1).sum();
    writeln!(out, "CELLS {} {size}", grid.cells.len())?;
    for c in grid.cells {
        if let Some(&bad) = c.iter().find(|&&i| i >= n) {
            return Err(io::Error::new(io::ErrorKind::InvalidInput, format!("cell references point {bad} of {n}")));
        }
        write!(out, "{}", c.len())?;
        for i in c {
            write!(out, " {i}")?;
        }
        writeln!(out)?;
    }
    writeln!(out, "CELL_TYPES {}", grid.cells.len())?;
    for c in grid.cells {
        writeln!(out, "{}", cell_type(c.len())?)?;
    }
    if fields.is_empty() {
        return Ok(());
    }
    writeln!(out, "POINT_DATA {n}")?;
    for (name, f) in fields {
        let len = match f {
            PointField::Scalar(v) => v.len(),
            PointField::Vector(v) => v.len(),
            PointField::Tensor(v) => v.len(),
        };
        if len != n {
            return Err(io::Error::new(io::ErrorKind::InvalidInput, format!("field `{name}` has {len} values for {n} points")));
        }
        match f {
            PointField::Scalar(v) => {
                writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default")?;
                for x in *v {
                    writeln!(out, "{x:.15e}")?;
                }
            }
            PointField::Vector(v) => {
                writeln!(out, "VECTORS {name} double")?;
                for x in *v {
                    writeln!(out, "{:.15e} {:.15e} 0", x.x, x.y)?;
                }
            }
            PointField::Tensor(v) => {
                writeln!(out, "TENSORS {name} double")?;
                for s in *v {
                    writeln!(out, "{:.15e} {:.15e} 0\n{:.15e} {:.15e} 0\n0 0 0", s.xx, s.xy, s.xy, s.yy)?;
                }
            }
        }
    }
    Ok(())
}
