//! Plain-text mesh format.
//!
//! ```text
//! vertices <n>
//! x y            (n lines)
//! triangles <m>
//! i j k r        (m lines; r = local index of the vertex opposite the refinement edge)
//! ```
//!
//! Coordinates are written with the shortest decimal representation that
//! parses back to the same `f64`, so export followed by import is bit-exact.

use super::{Point, Triangulation};
use crate::error::{FemError, Result};
use std::fmt::Write as _;
use std::path::Path;

pub fn write_mesh(mesh: &Triangulation) -> String {
    let mut out = String::new();
    writeln!(out, "vertices {}", mesh.num_vertices()).unwrap();
    for v in mesh.vertices() {
        writeln!(out, "{:?} {:?}", v[0], v[1]).unwrap();
    }
    writeln!(out, "triangles {}", mesh.num_triangles()).unwrap();
    for (tri, r) in mesh.triangles().iter().zip(mesh.refinement_edges()) {
        writeln!(out, "{} {} {} {}", tri[0], tri[1], tri[2], r).unwrap();
    }
    out
}

pub fn read_mesh(text: &str) -> Result<Triangulation> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let n = header(lines.next(), "vertices")?;
    let mut vertices: Vec<Point> = Vec::with_capacity(n);
    for _ in 0..n {
        let (line, fields) = fields(lines.next(), 2)?;
        let x = parse::<f64>(line, fields[0])?;
        let y = parse::<f64>(line, fields[1])?;
        vertices.push([x, y]);
    }
    let m = header(lines.next(), "triangles")?;
    let mut triangles = Vec::with_capacity(m);
    let mut refinement = Vec::with_capacity(m);
    for _ in 0..m {
        let (line, f) = fields(lines.next(), 4)?;
        triangles.push([
            parse::<usize>(line, f[0])?,
            parse::<usize>(line, f[1])?,
            parse::<usize>(line, f[2])?,
        ]);
        let r = parse::<u8>(line, f[3])?;
        if r > 2 {
            return Err(FemError::Parse {
                line,
                message: format!("refinement edge index {r} not in 0..=2"),
            });
        }
        refinement.push(r);
    }
    if let Some((line, _)) = lines.next() {
        return Err(FemError::Parse {
            line,
            message: "trailing content after triangle list".into(),
        });
    }
    Triangulation::build_initial(vertices, triangles, refinement)
}

pub fn read_mesh_file(path: impl AsRef<Path>) -> Result<Triangulation> {
    read_mesh(&std::fs::read_to_string(path)?)
}

fn header(line: Option<(usize, &str)>, keyword: &str) -> Result<usize> {
    let (line, text) = line.ok_or_else(|| FemError::Parse {
        line: 0,
        message: format!("missing '{keyword}' header"),
    })?;
    let mut parts = text.split_whitespace();
    if parts.next() != Some(keyword) {
        return Err(FemError::Parse {
            line,
            message: format!("expected '{keyword} <count>'"),
        });
    }
    let count = parts.next().ok_or_else(|| FemError::Parse {
        line,
        message: format!("missing count after '{keyword}'"),
    })?;
    parse(line, count)
}

fn fields(line: Option<(usize, &str)>, n: usize) -> Result<(usize, Vec<&str>)> {
    let (line, text) = line.ok_or_else(|| FemError::Parse {
        line: 0,
        message: "unexpected end of file".into(),
    })?;
    let f: Vec<&str> = text.split_whitespace().collect();
    if f.len() != n {
        return Err(FemError::Parse {
            line,
            message: format!("expected {n} fields, found {}", f.len()),
        });
    }
    Ok((line, f))
}

fn parse<T: std::str::FromStr>(line: usize, s: &str) -> Result<T> {
    s.parse().map_err(|_| FemError::Parse {
        line,
        message: format!("cannot parse '{s}'"),
    })
}
