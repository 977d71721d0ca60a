//! Triangle mesh and point cloud files: ASCII OBJ and PLY in its ASCII and
//! binary little-endian flavors. Coordinates are written as doubles so
//! write-then-read is exact.

use crate::error::CliError;
use crate::io::{atomic_write, fmt_f64, read_bytes};
use aggmorph::TriangleMesh;
use nalgebra::Point3;
use std::path::Path;

/// Vertices plus triangular faces, before mesh validation.
pub struct MeshDocument {
    pub vertices: Vec<Point3<f64>>,
    pub faces: Vec<[usize; 3]>,
}

/// Reads an OBJ or PLY file (by extension) and validates it into a mesh.
pub fn parse_mesh(path: &Path) -> Result<TriangleMesh, CliError> {
    let doc = parse_document(path)?;
    TriangleMesh::new(doc.vertices, doc.faces)
        .map_err(|e| CliError::invalid(path.display().to_string(), e))
}

/// Reads only the vertex positions of an OBJ or PLY file; faces may be
/// absent entirely.
pub fn parse_point_cloud(path: &Path) -> Result<Vec<Point3<f64>>, CliError> {
    Ok(parse_document(path)?.vertices)
}

pub fn parse_document(path: &Path) -> Result<MeshDocument, CliError> {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .as_deref()
    {
        Some("obj") => parse_obj(path),
        Some("ply") => parse_ply(path),
        other => Err(CliError::UnsupportedFormat {
            path: path.display().to_string(),
            reason: match other {
                Some(ext) => format!("unknown mesh extension .{ext}"),
                None => "missing file extension".to_string(),
            },
        }),
    }
}

fn parse_obj(path: &Path) -> Result<MeshDocument, CliError> {
    let text = crate::io::read_to_string(path)?;
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let at = |line: usize, reason: String| CliError::MalformedRecord {
        path: path.display().to_string(),
        line,
        reason,
    };
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let mut tokens = raw.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut coords = [0.0f64; 3];
                for c in &mut coords {
                    let tok = tokens
                        .next()
                        .ok_or_else(|| at(line_no, "vertex needs 3 coordinates".into()))?;
                    *c = tok
                        .parse()
                        .map_err(|_| at(line_no, format!("bad coordinate {tok:?}")))?;
                }
                vertices.push(Point3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let refs: Vec<&str> = tokens.collect();
                if refs.len() != 3 {
                    return Err(CliError::NonTriangular {
                        path: path.display().to_string(),
                        arity: refs.len(),
                    });
                }
                let mut face = [0usize; 3];
                for (slot, tok) in face.iter_mut().zip(&refs) {
                    let first = tok.split('/').next().unwrap_or("");
                    let one_based: usize = first
                        .parse()
                        .map_err(|_| at(line_no, format!("bad vertex reference {tok:?}")))?;
                    if one_based == 0 {
                        return Err(at(line_no, "vertex references are 1-based".into()));
                    }
                    *slot = one_based - 1;
                }
                faces.push(face);
            }
            // Normals, texture coordinates, groups, and comments are
            // irrelevant to geometry and skipped.
            _ => {}
        }
    }
    Ok(MeshDocument { vertices, faces })
}

/// Serializes a mesh as ASCII OBJ.
pub fn write_obj(path: &Path, mesh: &TriangleMesh) -> Result<(), CliError> {
    let mut out = String::new();
    for v in mesh.vertices() {
        out.push_str(&format!(
            "v {} {} {}\n",
            fmt_f64(v.x),
            fmt_f64(v.y),
            fmt_f64(v.z)
        ));
    }
    for f in mesh.faces() {
        out.push_str(&format!("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1));
    }
    atomic_write(path, out.as_bytes())
}

#[derive(Clone, Copy, PartialEq)]
enum ScalarType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl ScalarType {
    fn parse(token: &str) -> Option<ScalarType> {
        Some(match token {
            "char" | "int8" => ScalarType::I8,
            "uchar" | "uint8" => ScalarType::U8,
            "short" | "int16" => ScalarType::I16,
            "ushort" | "uint16" => ScalarType::U16,
            "int" | "int32" => ScalarType::I32,
            "uint" | "uint32" => ScalarType::U32,
            "float" | "float32" => ScalarType::F32,
            "double" | "float64" => ScalarType::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            ScalarType::I8 | ScalarType::U8 => 1,
            ScalarType::I16 | ScalarType::U16 => 2,
            ScalarType::I32 | ScalarType::U32 | ScalarType::F32 => 4,
            ScalarType::F64 => 8,
        }
    }
}

enum PlyProperty {
    Scalar {
        kind: ScalarType,
        name: String,
    },
    List {
        count: ScalarType,
        item: ScalarType,
        name: String,
    },
}

struct PlyElement {
    name: String,
    count: usize,
    properties: Vec<PlyProperty>,
}

struct PlyHeader {
    binary: bool,
    elements: Vec<PlyElement>,
    body_offset: usize,
}

fn parse_ply_header(path: &Path, bytes: &[u8]) -> Result<PlyHeader, CliError> {
    let unsupported = |reason: String| CliError::UnsupportedFormat {
        path: path.display().to_string(),
        reason,
    };
    let truncated = |reason: &str| CliError::TruncatedFile {
        path: path.display().to_string(),
        reason: reason.to_string(),
    };

    let mut offset = 0usize;
    let mut next_line = || -> Result<String, CliError> {
        if offset >= bytes.len() {
            return Err(truncated("header has no end_header line"));
        }
        let rest = &bytes[offset..];
        let end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| truncated("header has no end_header line"))?;
        let line = String::from_utf8_lossy(&rest[..end])
            .trim_end_matches('\r')
            .to_string();
        offset += end + 1;
        Ok(line)
    };

    if next_line()? != "ply" {
        return Err(unsupported("missing ply magic line".to_string()));
    }
    let mut binary = None;
    let mut elements: Vec<PlyElement> = Vec::new();
    loop {
        let line = next_line()?;
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("comment") | Some("obj_info") | None => {}
            Some("format") => {
                binary = match tok.next() {
                    Some("ascii") => Some(false),
                    Some("binary_little_endian") => Some(true),
                    Some(other) => {
                        return Err(unsupported(format!("format {other} is not supported")))
                    }
                    None => return Err(unsupported("format line is incomplete".to_string())),
                };
            }
            Some("element") => {
                let name = tok
                    .next()
                    .ok_or_else(|| unsupported("element without a name".to_string()))?;
                let count: usize = tok
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| unsupported(format!("element {name} without a count")))?;
                if name != "vertex" && name != "face" {
                    return Err(unsupported(format!("element {name} is not supported")));
                }
                elements.push(PlyElement {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            Some("property") => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| unsupported("property before any element".to_string()))?;
                let first = tok
                    .next()
                    .ok_or_else(|| unsupported("property without a type".to_string()))?;
                if first == "list" {
                    let count = tok.next().and_then(ScalarType::parse);
                    let item = tok.next().and_then(ScalarType::parse);
                    let name = tok.next();
                    match (count, item, name) {
                        (Some(count), Some(item), Some(name)) => {
                            element.properties.push(PlyProperty::List {
                                count,
                                item,
                                name: name.to_string(),
                            })
                        }
                        _ => return Err(unsupported("malformed list property".to_string())),
                    }
                } else {
                    let kind = ScalarType::parse(first)
                        .ok_or_else(|| unsupported(format!("property type {first}")))?;
                    let name = tok
                        .next()
                        .ok_or_else(|| unsupported("property without a name".to_string()))?;
                    element.properties.push(PlyProperty::Scalar {
                        kind,
                        name: name.to_string(),
                    });
                }
            }
            Some("end_header") => break,
            Some(other) => return Err(unsupported(format!("header keyword {other}"))),
        }
    }
    Ok(PlyHeader {
        binary: binary.ok_or_else(|| unsupported("header has no format line".to_string()))?,
        elements,
        body_offset: offset,
    })
}

struct ByteCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteCursor<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let chunk = self.bytes.get(self.pos..self.pos + n)?;
        self.pos += n;
        Some(chunk)
    }

    fn scalar(&mut self, kind: ScalarType) -> Option<f64> {
        let raw = self.take(kind.size())?;
        Some(match kind {
            ScalarType::I8 => raw[0] as i8 as f64,
            ScalarType::U8 => raw[0] as f64,
            ScalarType::I16 => i16::from_le_bytes([raw[0], raw[1]]) as f64,
            ScalarType::U16 => u16::from_le_bytes([raw[0], raw[1]]) as f64,
            ScalarType::I32 => i32::from_le_bytes(raw.try_into().unwrap()) as f64,
            ScalarType::U32 => u32::from_le_bytes(raw.try_into().unwrap()) as f64,
            ScalarType::F32 => f32::from_le_bytes(raw.try_into().unwrap()) as f64,
            ScalarType::F64 => f64::from_le_bytes(raw.try_into().unwrap()),
        })
    }
}

fn parse_ply(path: &Path) -> Result<MeshDocument, CliError> {
    let bytes = read_bytes(path)?;
    let header = parse_ply_header(path, &bytes)?;
    let truncated = |reason: &str| CliError::TruncatedFile {
        path: path.display().to_string(),
        reason: reason.to_string(),
    };
    let non_tri = |arity: usize| CliError::NonTriangular {
        path: path.display().to_string(),
        arity,
    };

    let mut vertices: Vec<Point3<f64>> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();

    if header.binary {
        let mut cursor = ByteCursor {
            bytes: &bytes,
            pos: header.body_offset,
        };
        for element in &header.elements {
            for _ in 0..element.count {
                let mut xyz = [f64::NAN; 3];
                let mut face: Option<Vec<usize>> = None;
                for prop in &element.properties {
                    match prop {
                        PlyProperty::Scalar { kind, name } => {
                            let value = cursor
                                .scalar(*kind)
                                .ok_or_else(|| truncated("body ends inside an element"))?;
                            match name.as_str() {
                                "x" => xyz[0] = value,
                                "y" => xyz[1] = value,
                                "z" => xyz[2] = value,
                                _ => {}
                            }
                        }
                        PlyProperty::List { count, item, name } => {
                            let n = cursor
                                .scalar(*count)
                                .ok_or_else(|| truncated("body ends inside a list"))?
                                as usize;
                            let mut items = Vec::with_capacity(n);
                            for _ in 0..n {
                                let v = cursor
                                    .scalar(*item)
                                    .ok_or_else(|| truncated("body ends inside a list"))?;
                                items.push(v);
                            }
                            if element.name == "face"
                                && (name == "vertex_indices" || name == "vertex_index")
                            {
                                face = Some(items.iter().map(|v| *v as usize).collect());
                            }
                        }
                    }
                }
                store_row(
                    element,
                    xyz,
                    face,
                    &mut vertices,
                    &mut faces,
                    &non_tri,
                    || truncated("vertex element lacks x, y, z"),
                )?;
            }
        }
    } else {
        let body = String::from_utf8_lossy(&bytes[header.body_offset..]).into_owned();
        let mut lines = body.lines().filter(|l| !l.trim().is_empty());
        for element in &header.elements {
            for _ in 0..element.count {
                let line = lines
                    .next()
                    .ok_or_else(|| truncated("fewer data rows than the header declares"))?;
                let mut tok = line.split_whitespace();
                let mut next_value = |what: &str| -> Result<f64, CliError> {
                    tok.next()
                        .and_then(|t| t.parse::<f64>().ok())
                        .ok_or_else(|| truncated(what))
                };
                let mut xyz = [f64::NAN; 3];
                let mut face: Option<Vec<usize>> = None;
                for prop in &element.properties {
                    match prop {
                        PlyProperty::Scalar { name, .. } => {
                            let value = next_value("row has fewer values than properties")?;
                            match name.as_str() {
                                "x" => xyz[0] = value,
                                "y" => xyz[1] = value,
                                "z" => xyz[2] = value,
                                _ => {}
                            }
                        }
                        PlyProperty::List { name, .. } => {
                            let n = next_value("row is missing its list count")? as usize;
                            let mut items = Vec::with_capacity(n);
                            for _ in 0..n {
                                items.push(next_value("row ends inside a list")?);
                            }
                            if element.name == "face"
                                && (name == "vertex_indices" || name == "vertex_index")
                            {
                                face = Some(items.iter().map(|v| *v as usize).collect());
                            }
                        }
                    }
                }
                store_row(
                    element,
                    xyz,
                    face,
                    &mut vertices,
                    &mut faces,
                    &non_tri,
                    || truncated("vertex element lacks x, y, z"),
                )?;
            }
        }
    }
    Ok(MeshDocument { vertices, faces })
}

fn store_row(
    element: &PlyElement,
    xyz: [f64; 3],
    face: Option<Vec<usize>>,
    vertices: &mut Vec<Point3<f64>>,
    faces: &mut Vec<[usize; 3]>,
    non_tri: &impl Fn(usize) -> CliError,
    missing_xyz: impl Fn() -> CliError,
) -> Result<(), CliError> {
    match element.name.as_str() {
        "vertex" => {
            if xyz.iter().any(|v| v.is_nan()) {
                return Err(missing_xyz());
            }
            vertices.push(Point3::new(xyz[0], xyz[1], xyz[2]));
        }
        "face" => {
            if let Some(items) = face {
                if items.len() != 3 {
                    return Err(non_tri(items.len()));
                }
                faces.push([items[0], items[1], items[2]]);
            }
        }
        _ => {}
    }
    Ok(())
}

fn ply_header_text(binary: bool, n_vertices: usize, n_faces: usize) -> String {
    let format = if binary {
        "binary_little_endian"
    } else {
        "ascii"
    };
    format!(
        "ply\nformat {format} 1.0\nelement vertex {n_vertices}\nproperty double x\nproperty double y\nproperty double z\nelement face {n_faces}\nproperty list uchar int vertex_indices\nend_header\n"
    )
}

/// Serializes vertices and faces as ASCII PLY with double precision.
pub fn write_ply_ascii(
    path: &Path,
    vertices: &[Point3<f64>],
    faces: &[[usize; 3]],
) -> Result<(), CliError> {
    let mut out = ply_header_text(false, vertices.len(), faces.len());
    for v in vertices {
        out.push_str(&format!(
            "{} {} {}\n",
            fmt_f64(v.x),
            fmt_f64(v.y),
            fmt_f64(v.z)
        ));
    }
    for f in faces {
        out.push_str(&format!("3 {} {} {}\n", f[0], f[1], f[2]));
    }
    atomic_write(path, out.as_bytes())
}

/// Serializes vertices and faces as binary little-endian PLY.
pub fn write_ply_binary(
    path: &Path,
    vertices: &[Point3<f64>],
    faces: &[[usize; 3]],
) -> Result<(), CliError> {
    let mut out = ply_header_text(true, vertices.len(), faces.len()).into_bytes();
    for v in vertices {
        for c in [v.x, v.y, v.z] {
            out.extend_from_slice(&c.to_le_bytes());
        }
    }
    for f in faces {
        out.push(3);
        for &i in f {
            out.extend_from_slice(&(i as i32).to_le_bytes());
        }
    }
    atomic_write(path, &out)
}

/// Serializes a bare point cloud as ASCII PLY.
pub fn write_point_cloud_ply(path: &Path, points: &[Point3<f64>]) -> Result<(), CliError> {
    write_ply_ascii(path, points, &[])
}
