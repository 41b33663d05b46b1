//! ASCII mesh exchange in the OFF and Wavefront OBJ formats.
//!
//! The readers accept arbitrary untrusted bytes: they never panic, never
//! preallocate from header-declared counts beyond a fixed cap, and report
//! the offending line on failure. Polygonal faces are fan-triangulated.
//! Connectivity and geometry validation is [`TriMesh::new`]'s job; the
//! readers only enforce what the formats themselves promise.

use super::{MeshError, TriMesh};
use nalgebra::Vector3;
use std::path::Path;
use thiserror::Error;

/// Preallocation cap for header-declared element counts.
const PREALLOC_CAP: usize = 1 << 16;

#[derive(Debug, Error)]
pub enum MeshParseError {
    #[error("input is not valid UTF-8")]
    NotUtf8,
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("header declares {declared} {what}, input ends after {found}")]
    Truncated { what: &'static str, declared: usize, found: usize },
    #[error("input contains no faces")]
    NoFaces,
    #[error("unsupported mesh extension {0:?}, expected .off or .obj")]
    UnknownExtension(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

fn malformed(line: usize, msg: impl Into<String>) -> MeshParseError {
    MeshParseError::Malformed { line: line + 1, msg: msg.into() }
}

/// Strip a trailing `#` comment and split into tokens.
fn tokens(line: &str) -> impl Iterator<Item = &str> {
    let body = match line.find('#') {
        Some(pos) => &line[..pos],
        None => line,
    };
    body.split_whitespace()
}

fn parse_f64(tok: &str, line: usize) -> Result<f64, MeshParseError> {
    tok.parse::<f64>()
        .map_err(|_| malformed(line, format!("expected a real number, got {tok:?}")))
}

fn parse_count(tok: &str, line: usize) -> Result<usize, MeshParseError> {
    tok.parse::<usize>()
        .map_err(|_| malformed(line, format!("expected a non-negative count, got {tok:?}")))
}

/// Append triangles (v0, vi, vi+1) for a polygon given as a vertex cycle.
fn fan_triangulate(
    poly: &[usize],
    faces: &mut Vec<[usize; 3]>,
    line: usize,
) -> Result<(), MeshParseError> {
    if poly.len() < 3 {
        return Err(malformed(line, format!("face with {} vertices", poly.len())));
    }
    for i in 1..poly.len() - 1 {
        faces.push([poly[0], poly[i], poly[i + 1]]);
    }
    Ok(())
}

/// Parse an OFF document into raw vertex and (triangulated) face lists.
///
/// Accepts the counts on the `OFF` line or on the following one, `#`
/// comments, blank lines, and trailing per-element attributes such as
/// colors, which are ignored.
pub fn read_off(input: &str) -> Result<(Vec<Vector3<f64>>, Vec<[usize; 3]>), MeshParseError> {
    let mut lines = input.lines().enumerate().filter(|(_, l)| tokens(l).next().is_some());

    let (header_no, header) = lines.next().ok_or_else(|| malformed(0, "empty input"))?;
    let mut head_toks: Vec<&str> = tokens(header).collect();
    match head_toks.first() {
        Some(&"OFF") => {
            head_toks.remove(0);
        }
        _ => return Err(malformed(header_no, "missing OFF keyword")),
    }
    let counts: Vec<&str> = if head_toks.is_empty() {
        let (no, line) = lines
            .next()
            .ok_or_else(|| malformed(header_no, "missing element counts"))?;
        let toks: Vec<&str> = tokens(line).collect();
        if toks.len() < 2 {
            return Err(malformed(no, "counts line needs vertex and face counts"));
        }
        toks
    } else {
        head_toks
    };
    let count_line = header_no;
    let nv = parse_count(counts[0], count_line)?;
    let nf = parse_count(counts.get(1).copied().unwrap_or("0"), count_line)?;

    let mut vertices = Vec::with_capacity(nv.min(PREALLOC_CAP));
    for _ in 0..nv {
        let (no, line) = lines
            .next()
            .ok_or(MeshParseError::Truncated { what: "vertices", declared: nv, found: vertices.len() })?;
        let mut t = tokens(line);
        let mut coord = [0.0f64; 3];
        for c in coord.iter_mut() {
            let tok = t.next().ok_or_else(|| malformed(no, "vertex line needs 3 coordinates"))?;
            *c = parse_f64(tok, no)?;
        }
        vertices.push(Vector3::new(coord[0], coord[1], coord[2]));
    }

    let mut faces = Vec::with_capacity(nf.min(PREALLOC_CAP));
    let mut polys = 0usize;
    for _ in 0..nf {
        let (no, line) = lines
            .next()
            .ok_or(MeshParseError::Truncated { what: "faces", declared: nf, found: polys })?;
        let mut t = tokens(line);
        let k = parse_count(t.next().ok_or_else(|| malformed(no, "empty face line"))?, no)?;
        let mut poly = Vec::with_capacity(k.min(PREALLOC_CAP));
        for _ in 0..k {
            let tok = t
                .next()
                .ok_or_else(|| malformed(no, format!("face declares {k} indices, line has fewer")))?;
            let idx = parse_count(tok, no)?;
            if idx >= vertices.len() {
                return Err(malformed(no, format!("vertex index {idx} out of range (< {})", vertices.len())));
            }
            poly.push(idx);
        }
        fan_triangulate(&poly, &mut faces, no)?;
        polys += 1;
    }
    if faces.is_empty() {
        return Err(MeshParseError::NoFaces);
    }
    Ok((vertices, faces))
}

/// Parse a Wavefront OBJ document into raw vertex and face lists.
///
/// Understands `v` and `f` records, `v/vt/vn`-style face references,
/// 1-based and negative indices, and ignores normals, texture coordinates,
/// groups, and material statements.
pub fn read_obj(input: &str) -> Result<(Vec<Vector3<f64>>, Vec<[usize; 3]>), MeshParseError> {
    let mut vertices: Vec<Vector3<f64>> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();
    for (no, line) in input.lines().enumerate() {
        let mut t = tokens(line);
        let Some(keyword) = t.next() else { continue };
        match keyword {
            "v" => {
                let mut coord = [0.0f64; 3];
                for c in coord.iter_mut() {
                    let tok =
                        t.next().ok_or_else(|| malformed(no, "v record needs 3 coordinates"))?;
                    *c = parse_f64(tok, no)?;
                }
                vertices.push(Vector3::new(coord[0], coord[1], coord[2]));
            }
            "f" => {
                let mut poly = Vec::new();
                for refr in t {
                    let vtok = refr.split('/').next().unwrap_or("");
                    let raw: i64 = vtok.parse().map_err(|_| {
                        malformed(no, format!("expected a vertex index, got {vtok:?}"))
                    })?;
                    let resolved = if raw > 0 {
                        (raw - 1) as usize
                    } else if raw < 0 {
                        let back = (-raw) as usize;
                        if back > vertices.len() {
                            return Err(malformed(no, format!("relative index {raw} underflows")));
                        }
                        vertices.len() - back
                    } else {
                        return Err(malformed(no, "vertex index 0 is not valid"));
                    };
                    if resolved >= vertices.len() {
                        return Err(malformed(
                            no,
                            format!("vertex index {raw} out of range (have {})", vertices.len()),
                        ));
                    }
                    poly.push(resolved);
                }
                fan_triangulate(&poly, &mut faces, no)?;
            }
            // Normals, texture coordinates, smoothing, grouping, materials.
            "vn" | "vt" | "vp" | "s" | "g" | "o" | "usemtl" | "mtllib" | "l" | "p" => {}
            other => {
                return Err(malformed(no, format!("unknown record type {other:?}")));
            }
        }
    }
    if faces.is_empty() {
        return Err(MeshParseError::NoFaces);
    }
    Ok((vertices, faces))
}

/// Byte-level entry points; these are what the fuzz harness drives.
pub fn read_off_bytes(bytes: &[u8]) -> Result<(Vec<Vector3<f64>>, Vec<[usize; 3]>), MeshParseError> {
    read_off(std::str::from_utf8(bytes).map_err(|_| MeshParseError::NotUtf8)?)
}

pub fn read_obj_bytes(bytes: &[u8]) -> Result<(Vec<Vector3<f64>>, Vec<[usize; 3]>), MeshParseError> {
    read_obj(std::str::from_utf8(bytes).map_err(|_| MeshParseError::NotUtf8)?)
}

/// Serialize as OFF. `{}` float formatting emits the shortest string that
/// parses back to the identical f64, so write/read round-trips are exact.
pub fn write_off(mesh: &TriMesh) -> String {
    let mut out = String::new();
    out.push_str("OFF\n");
    out.push_str(&format!("{} {} {}\n", mesh.vertex_count(), mesh.face_count(), mesh.edge_count()));
    for v in mesh.vertices() {
        out.push_str(&format!("{} {} {}\n", v.x, v.y, v.z));
    }
    for f in mesh.faces() {
        out.push_str(&format!("3 {} {} {}\n", f[0], f[1], f[2]));
    }
    out
}

/// Serialize as OBJ with 1-based indices.
pub fn write_obj(mesh: &TriMesh) -> String {
    let mut out = String::new();
    for v in mesh.vertices() {
        out.push_str(&format!("v {} {} {}\n", v.x, v.y, v.z));
    }
    for f in mesh.faces() {
        out.push_str(&format!("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1));
    }
    out
}

/// Read a mesh file, dispatching on the extension, and validate it.
pub fn load_mesh(path: &Path) -> Result<TriMesh, MeshError> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    let bytes = std::fs::read(path).map_err(MeshParseError::Io)?;
    let (vertices, faces) = match ext.as_str() {
        "off" => read_off_bytes(&bytes)?,
        "obj" => read_obj_bytes(&bytes)?,
        other => return Err(MeshParseError::UnknownExtension(other.to_string()).into()),
    };
    TriMesh::new(vertices, faces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate::icosphere;

    const TETRA_OFF: &str = "OFF\n4 4 6\n1 1 1\n1 -1 -1\n-1 1 -1\n-1 -1 1\n3 0 1 2\n3 0 3 1\n3 0 2 3\n3 1 3 2\n";

    #[test]
    fn off_round_trip_is_bit_exact() {
        let (v, f) = read_off(TETRA_OFF).unwrap();
        let mesh = TriMesh::new(v, f).unwrap();
        let spun = write_off(&mesh);
        let (v2, f2) = read_off(&spun).unwrap();
        assert_eq!(mesh.vertices(), &v2[..]);
        assert_eq!(mesh.faces(), &f2[..]);

        let sphere = icosphere(1.0, 2).unwrap();
        let (v3, f3) = read_off(&write_off(&sphere)).unwrap();
        assert_eq!(sphere.vertices(), &v3[..]);
        assert_eq!(sphere.faces(), &f3[..]);
    }

    #[test]
    fn obj_round_trip_is_bit_exact() {
        let sphere = icosphere(0.75, 2).unwrap();
        let (v, f) = read_obj(&write_obj(&sphere)).unwrap();
        assert_eq!(sphere.vertices(), &v[..]);
        assert_eq!(sphere.faces(), &f[..]);
    }

    #[test]
    fn off_tolerates_comments_inline_counts_and_colors() {
        let src = "# a tetrahedron\nOFF 4 4 6\n\n1 1 1 255 0 0\n1 -1 -1\n-1 1 -1\n-1 -1 1\n3 0 1 2\n3 0 3 1\n3 0 2 3\n3 1 3 2 # last\n";
        let (v, f) = read_off(src).unwrap();
        assert_eq!(v.len(), 4);
        assert_eq!(f.len(), 4);
    }

    #[test]
    fn off_quads_are_fan_triangulated() {
        let src = "OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n";
        let (_, f) = read_off(src).unwrap();
        assert_eq!(f, vec![[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn off_rejects_bad_inputs_without_panicking() {
        assert!(matches!(read_off(""), Err(MeshParseError::Malformed { .. })));
        assert!(matches!(read_off("NOFF\n1 1 1\n"), Err(MeshParseError::Malformed { .. })));
        assert!(matches!(
            read_off("OFF\n2 1 0\n0 0 0\n"),
            Err(MeshParseError::Truncated { what: "vertices", .. })
        ));
        assert!(matches!(
            read_off("OFF\n1 2 0\n0 0 0\n3 0 0 0\n"),
            Err(MeshParseError::Truncated { what: "faces", .. })
        ));
        // Non-numeric coordinate.
        assert!(matches!(read_off("OFF\n1 1 0\n0 zero 0\n3 0 0 0\n"), Err(MeshParseError::Malformed { .. })));
        // Out-of-range face index.
        assert!(matches!(
            read_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 7\n"),
            Err(MeshParseError::Malformed { .. })
        ));
        // Two-vertex face.
        assert!(matches!(
            read_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n2 0 1\n"),
            Err(MeshParseError::Malformed { .. })
        ));
        // Header count too large to satisfy; must not try to preallocate it.
        assert!(matches!(
            read_off("OFF\n99999999999 1 0\n0 0 0\n"),
            Err(MeshParseError::Truncated { .. })
        ));
    }

    #[test]
    fn obj_handles_slash_forms_and_negative_indices() {
        let src = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nvt 0 0\nf 1/1/1 2/2/1 3//1\nf -4 -2 -1\n";
        let (v, f) = read_obj(src).unwrap();
        assert_eq!(v.len(), 4);
        assert_eq!(f, vec![[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn obj_rejects_bad_inputs_without_panicking() {
        assert!(matches!(read_obj(""), Err(MeshParseError::NoFaces)));
        assert!(matches!(read_obj("v 0 0\n"), Err(MeshParseError::Malformed { .. })));
        assert!(matches!(read_obj("v 0 0 0\nf 1 2 9\n"), Err(MeshParseError::Malformed { .. })));
        assert!(matches!(read_obj("v 0 0 0\nf 0 1 1\n"), Err(MeshParseError::Malformed { .. })));
        assert!(matches!(read_obj("v 0 0 0\nf -5 1 1\n"), Err(MeshParseError::Malformed { .. })));
        assert!(matches!(read_obj("vertex 0 0 0\n"), Err(MeshParseError::Malformed { .. })));
    }

    #[test]
    fn readers_reject_non_utf8_bytes() {
        let bytes = [0x4f, 0x46, 0x46, 0xff, 0xfe];
        assert!(matches!(read_off_bytes(&bytes), Err(MeshParseError::NotUtf8)));
        assert!(matches!(read_obj_bytes(&bytes), Err(MeshParseError::NotUtf8)));
    }

    #[test]
    fn load_mesh_dispatches_on_extension() {
        let dir = tempfile::tempdir().unwrap();
        let off_path = dir.path().join("tetra.off");
        std::fs::write(&off_path, TETRA_OFF).unwrap();
        let mesh = load_mesh(&off_path).unwrap();
        assert_eq!(mesh.vertex_count(), 4);

        let obj_path = dir.path().join("tetra.obj");
        std::fs::write(&obj_path, write_obj(&mesh)).unwrap();
        let mesh2 = load_mesh(&obj_path).unwrap();
        assert_eq!(mesh2.face_count(), 4);

        let bad = dir.path().join("tetra.stl");
        std::fs::write(&bad, "x").unwrap();
        assert!(load_mesh(&bad).is_err());
    }
}
