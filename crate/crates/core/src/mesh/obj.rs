use std::fmt::Write as _;
use std::io::BufRead;

use nalgebra::Point3;

use super::{MeshError, TriangleMesh};

/// Parses ASCII Wavefront OBJ. Only `v` and `f` records are interpreted;
/// polygons with more than three corners are fan-triangulated.
pub fn load_obj<R: BufRead>(reader: R) -> Result<TriangleMesh, MeshError> {
    let mut vertices = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::new();
    // (line, raw 1-based or negative indices) resolved once all vertices are known
    let mut pending: Vec<(usize, Vec<i64>, usize)> = Vec::new();

    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| MeshError::Io(e.to_string()))?;
        let line = line.split('#').next().unwrap_or("").trim();
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut xyz = [0.0f64; 3];
                for c in &mut xyz {
                    let tok = tokens.next().ok_or_else(|| MeshError::Parse {
                        line: lineno,
                        message: "vertex needs three coordinates".into(),
                    })?;
                    *c = tok.parse().map_err(|_| MeshError::Parse {
                        line: lineno,
                        message: format!("invalid coordinate {tok:?}"),
                    })?;
                }
                vertices.push(Point3::new(xyz[0], xyz[1], xyz[2]));
            }
            Some("f") => {
                let mut idx = Vec::new();
                for tok in tokens {
                    let head = tok.split('/').next().unwrap_or("");
                    let v: i64 = head.parse().map_err(|_| MeshError::Parse {
                        line: lineno,
                        message: format!("invalid face index {tok:?}"),
                    })?;
                    if v == 0 {
                        return Err(MeshError::Parse {
                            line: lineno,
                            message: "face index 0 is not valid in OBJ".into(),
                        });
                    }
                    idx.push(v);
                }
                if idx.len() < 3 {
                    return Err(MeshError::Parse {
                        line: lineno,
                        message: "face needs at least three vertices".into(),
                    });
                }
                pending.push((lineno, idx, vertices.len()));
            }
            _ => {}
        }
    }

    let n = vertices.len() as i64;
    for (lineno, idx, seen) in pending {
        let mut resolved = Vec::with_capacity(idx.len());
        for v in idx {
            // negative indices are relative to the vertices defined so far
            let abs = if v < 0 { seen as i64 + v } else { v - 1 };
            if abs < 0 || abs >= n {
                return Err(MeshError::Parse {
                    line: lineno,
                    message: format!("vertex index {v} out of range ({n} vertices)"),
                });
            }
            resolved.push(abs as u32);
        }
        for k in 1..resolved.len() - 1 {
            let f = [resolved[0], resolved[k], resolved[k + 1]];
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(MeshError::Parse {
                    line: lineno,
                    message: "degenerate face repeats a vertex".into(),
                });
            }
            faces.push(f);
        }
    }

    if faces.is_empty() {
        return Err(MeshError::Empty);
    }
    TriangleMesh::new(vertices, faces)
}

/// Serializes a mesh as OBJ text with 1-based indices. Coordinates use the
/// shortest representation that parses back to the same `f64`.
pub fn write_obj(mesh: &TriangleMesh) -> String {
    let mut out = String::with_capacity(mesh.vertex_count() * 32 + mesh.face_count() * 16);
    for p in mesh.vertices() {
        let _ = writeln!(out, "v {} {} {}", p.x, p.y, p.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    out
}
