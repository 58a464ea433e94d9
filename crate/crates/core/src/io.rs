//! ASCII OFF and OBJ import/export.
//!
//! Triangles become surfaces (`n = 2`); two-vertex faces in OFF or `l`
//! records in OBJ become curves (`n = 1`). Coordinates are written with the
//! shortest round-trip representation, so export → import is lossless.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::{Point, SurfaceMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    Obj,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("off") => Ok(Self::Off),
            Some("obj") => Ok(Self::Obj),
            _ => Err(Error::InvalidInput(format!(
                "cannot infer mesh format from '{}' (expected .off or .obj)",
                path.display()
            ))),
        }
    }
}

pub fn write_off(mesh: &SurfaceMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "OFF");
    let _ = writeln!(s, "{} {} 0", mesh.n_vertices(), mesh.n_faces());
    for p in mesh.vertices() {
        let _ = writeln!(s, "{} {} {}", p.x, p.y, p.z);
    }
    for face in mesh.faces() {
        let _ = write!(s, "{}", face.len());
        for i in face {
            let _ = write!(s, " {i}");
        }
        s.push('\n');
    }
    s
}

pub fn write_obj(mesh: &SurfaceMesh) -> String {
    let mut s = String::new();
    for p in mesh.vertices() {
        let _ = writeln!(s, "v {} {} {}", p.x, p.y, p.z);
    }
    let tag = if mesh.dim() == 1 { 'l' } else { 'f' };
    for face in mesh.faces() {
        s.push(tag);
        for i in face {
            let _ = write!(s, " {}", i + 1);
        }
        s.push('\n');
    }
    s
}

pub fn read_off(text: &str) -> Result<SurfaceMesh> {
    // Tokens with their line numbers, comments stripped.
    let mut tokens = text.lines().enumerate().flat_map(|(ln, line)| {
        let body = line.split('#').next().unwrap_or("");
        body.split_whitespace().map(move |t| (ln + 1, t)).collect::<Vec<_>>()
    });
    match tokens.next() {
        Some((_, "OFF")) => {}
        Some((line, t)) => return Err(Error::Parse { line, message: format!("expected OFF header, found '{t}'") }),
        None => return Err(Error::Parse { line: 0, message: "empty file".into() }),
    }
    let mut next_num = |what: &str| -> Result<(usize, String)> {
        tokens
            .next()
            .map(|(l, t)| (l, t.to_string()))
            .ok_or_else(|| Error::Parse { line: 0, message: format!("unexpected end of file reading {what}") })
    };
    let parse_usize = |(line, t): (usize, String)| -> Result<usize> {
        t.parse().map_err(|_| Error::Parse { line, message: format!("expected integer, found '{t}'") })
    };
    let parse_f64 = |(line, t): (usize, String)| -> Result<f64> {
        t.parse().map_err(|_| Error::Parse { line, message: format!("expected number, found '{t}'") })
    };
    let nv = parse_usize(next_num("vertex count")?)?;
    let nf = parse_usize(next_num("face count")?)?;
    let _ne = parse_usize(next_num("edge count")?)?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let x = parse_f64(next_num("vertex")?)?;
        let y = parse_f64(next_num("vertex")?)?;
        let z = parse_f64(next_num("vertex")?)?;
        vertices.push(Point::new(x, y, z));
    }
    let mut faces = Vec::new();
    let mut arity = None;
    for _ in 0..nf {
        let tok = next_num("face")?;
        let line = tok.0;
        let k = parse_usize(tok)?;
        if !(2..=3).contains(&k) {
            return Err(Error::Parse { line, message: format!("only segments and triangles are supported, found {k}-gon") });
        }
        if *arity.get_or_insert(k) != k {
            return Err(Error::Parse { line, message: "mixed segment and triangle faces".into() });
        }
        for _ in 0..k {
            faces.push(parse_usize(next_num("face index")?)?);
        }
    }
    SurfaceMesh::new(arity.unwrap_or(3) - 1, vertices, faces)
}

pub fn read_obj(text: &str) -> Result<SurfaceMesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut arity = None;
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let mut parts = raw.split('#').next().unwrap_or("").split_whitespace();
        let Some(tag) = parts.next() else { continue };
        match tag {
            "v" => {
                let coords: Vec<f64> = parts
                    .take(3)
                    .map(|t| t.parse().map_err(|_| Error::Parse { line, message: format!("bad coordinate '{t}'") }))
                    .collect::<Result<_>>()?;
                if coords.len() != 3 {
                    return Err(Error::Parse { line, message: "vertex needs three coordinates".into() });
                }
                vertices.push(Point::new(coords[0], coords[1], coords[2]));
            }
            "f" | "l" => {
                let idx: Vec<usize> = parts
                    .map(|t| {
                        let head = t.split('/').next().unwrap_or("");
                        match head.parse::<i64>() {
                            Ok(i) if i > 0 => Ok(i as usize - 1),
                            Ok(i) if i < 0 && (-i) as usize <= vertices.len() => Ok(vertices.len() - (-i) as usize),
                            _ => Err(Error::Parse { line, message: format!("bad index '{t}'") }),
                        }
                    })
                    .collect::<Result<_>>()?;
                let k = idx.len();
                let expected = if tag == "f" { 3 } else { 2 };
                if k != expected {
                    return Err(Error::Parse {
                        line,
                        message: format!("'{tag}' record needs {expected} indices, found {k}"),
                    });
                }
                if *arity.get_or_insert(k) != k {
                    return Err(Error::Parse { line, message: "mixed line and face records".into() });
                }
                faces.extend(idx);
            }
            _ => {}
        }
    }
    SurfaceMesh::new(arity.unwrap_or(3) - 1, vertices, faces)
}

pub fn load(path: &Path) -> Result<SurfaceMesh> {
    let text = fs::read_to_string(path)?;
    match MeshFormat::from_path(path)? {
        MeshFormat::Off => read_off(&text),
        MeshFormat::Obj => read_obj(&text),
    }
}

pub fn save(mesh: &SurfaceMesh, path: &Path) -> Result<()> {
    let text = match MeshFormat::from_path(path)? {
        MeshFormat::Off => write_off(mesh),
        MeshFormat::Obj => write_obj(mesh),
    };
    fs::write(path, text)?;
    Ok(())
}
