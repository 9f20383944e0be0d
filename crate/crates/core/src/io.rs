//! Wavefront OBJ and OFF reading, OBJ writing with texture coordinates.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::mesh::TriMesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Off,
}

impl MeshFormat {
    /// Guesses the format from the file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "obj" => Some(MeshFormat::Obj),
            "off" => Some(MeshFormat::Off),
            _ => None,
        }
    }
}

pub fn load_mesh(path: &Path, format: MeshFormat) -> Result<TriMesh> {
    let file = File::open(path)?;
    read_mesh(BufReader::new(file), format)
}

pub fn read_mesh<R: Read>(reader: R, format: MeshFormat) -> Result<TriMesh> {
    let (vertices, faces) = match format {
        MeshFormat::Obj => parse_obj(reader)?,
        MeshFormat::Off => parse_off(reader)?,
    };
    TriMesh::new(vertices, faces)
}

type Raw = (Vec<[f64; 3]>, Vec<[usize; 3]>);

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn parse_f64(tok: Option<&str>, line: usize) -> Result<f64> {
    let tok = tok.ok_or_else(|| parse_err(line, "missing coordinate"))?;
    tok.parse::<f64>().map_err(|_| parse_err(line, format!("invalid number '{tok}'")))
}

fn parse_obj<R: Read>(reader: R) -> Result<Raw> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("v") => {
                let x = parse_f64(toks.next(), lineno)?;
                let y = parse_f64(toks.next(), lineno)?;
                let z = match toks.next() {
                    Some(t) => parse_f64(Some(t), lineno)?,
                    None => 0.0,
                };
                vertices.push([x, y, z]);
            }
            Some("f") => {
                let idx: Vec<usize> = toks
                    .map(|t| obj_index(t, vertices.len(), lineno))
                    .collect::<Result<_>>()?;
                if idx.len() != 3 {
                    return Err(Error::NonTriangular { face: faces.len(), count: idx.len() });
                }
                faces.push([idx[0], idx[1], idx[2]]);
            }
            _ => {}
        }
    }
    Ok((vertices, faces))
}

/// Resolves a 1-based (or negative, relative) OBJ vertex reference.
fn obj_index(tok: &str, count: usize, line: usize) -> Result<usize> {
    let head = tok.split('/').next().unwrap_or("");
    let i: i64 = head.parse().map_err(|_| parse_err(line, format!("invalid index '{tok}'")))?;
    let resolved = if i > 0 { i - 1 } else { count as i64 + i };
    if i == 0 || resolved < 0 || resolved >= count as i64 {
        return Err(parse_err(line, format!("vertex index {i} out of range")));
    }
    Ok(resolved as usize)
}

fn parse_off<R: Read>(reader: R) -> Result<Raw> {
    let mut tokens: Vec<(usize, String)> = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let content = line.split('#').next().unwrap_or("");
        tokens.extend(content.split_whitespace().map(|t| (i + 1, t.to_string())));
    }
    let mut it = tokens.into_iter();
    let mut next = |what: &str| it.next().ok_or_else(|| parse_err(0, format!("unexpected end of file reading {what}")));

    let (l, header) = next("header")?;
    if header != "OFF" {
        return Err(parse_err(l, "missing OFF header"));
    }
    let mut count = |what: &str| -> Result<usize> {
        let (l, t) = next(what)?;
        t.parse().map_err(|_| parse_err(l, format!("invalid {what} '{t}'")))
    };
    let nv = count("vertex count")?;
    let nf = count("face count")?;
    let _ne = count("edge count")?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let mut c = [0.0; 3];
        for x in &mut c {
            let (l, t) = next("vertex")?;
            *x = parse_f64(Some(&t), l)?;
        }
        vertices.push(c);
    }
    let mut faces = Vec::with_capacity(nf);
    for j in 0..nf {
        let (l, t) = next("face")?;
        let k: usize = t.parse().map_err(|_| parse_err(l, "invalid face size"))?;
        if k != 3 {
            return Err(Error::NonTriangular { face: j, count: k });
        }
        let mut f = [0usize; 3];
        for v in &mut f {
            let (l, t) = next("face index")?;
            *v = t.parse().map_err(|_| parse_err(l, format!("invalid index '{t}'")))?;
            if *v >= nv {
                return Err(parse_err(l, format!("vertex index {v} out of range")));
            }
        }
        faces.push(f);
    }
    Ok((vertices, faces))
}

/// Writes `mesh` as OBJ. With `uv`, each vertex gets a `vt` record and faces
/// reference `v/vt`.
pub fn write_obj<W: Write>(mut w: W, mesh: &TriMesh, uv: Option<&[C64]>) -> Result<()> {
    if let Some(uv) = uv {
        if uv.len() != mesh.vertex_count() {
            return Err(Error::Mismatch(format!(
                "{} texture coordinates for {} vertices",
                uv.len(),
                mesh.vertex_count()
            )));
        }
    }
    for v in mesh.vertices() {
        writeln!(w, "v {} {} {}", v[0], v[1], v[2])?;
    }
    if let Some(uv) = uv {
        for t in uv {
            writeln!(w, "vt {} {}", t.re, t.im)?;
        }
    }
    for f in mesh.faces() {
        let [a, b, c] = f.map(|i| i + 1);
        if uv.is_some() {
            writeln!(w, "f {a}/{a} {b}/{b} {c}/{c}")?;
        } else {
            writeln!(w, "f {a} {b} {c}")?;
        }
    }
    Ok(())
}

pub fn save_obj(path: &Path, mesh: &TriMesh, uv: Option<&[C64]>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_obj(&mut w, mesh, uv)?;
    w.flush()?;
    Ok(())
}

pub fn write_off<W: Write>(mut w: W, mesh: &TriMesh) -> Result<()> {
    writeln!(w, "OFF")?;
    writeln!(w, "{} {} 0", mesh.vertex_count(), mesh.face_count())?;
    for v in mesh.vertices() {
        writeln!(w, "{} {} {}", v[0], v[1], v[2])?;
    }
    for f in mesh.faces() {
        writeln!(w, "3 {} {} {}", f[0], f[1], f[2])?;
    }
    Ok(())
}
