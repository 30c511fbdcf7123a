//! Wavefront OBJ export and a minimal reader (positions and faces only).

use thiserror::Error;

use crate::math::vec3;
use crate::polytope::{Mesh, MeshVertex};

#[derive(Error, Debug, Clone, PartialEq)]
#[error("line {line}: {message}")]
pub struct ObjParseError {
    pub line: usize,
    pub message: String,
}

/// Writes all meshes into one OBJ string, one object group per convex,
/// 1-based global vertex indices.
pub fn write_obj(meshes: &[Mesh]) -> String {
    let mut out = String::from("# cvxfit mesh export\n");
    let mut base = 1usize;
    for (i, mesh) in meshes.iter().enumerate() {
        let name = mesh.convex_id.unwrap_or(i);
        out.push_str(&format!("o convex_{name}\n"));
        for v in &mesh.vertices {
            let p = v.position;
            out.push_str(&format!("v {} {} {}\n", p.x, p.y, p.z));
        }
        for t in &mesh.triangles {
            out.push_str(&format!("f {} {} {}\n", base + t[0], base + t[1], base + t[2]));
        }
        base += mesh.vertices.len();
    }
    out
}

/// Reads positions and faces; normals, texcoords, groups and materials are
/// ignored. Polygon faces are fan-triangulated.
pub fn parse_obj(text: &str) -> Result<Mesh, ObjParseError> {
    let mut mesh = Mesh::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let err = |message: String| ObjParseError { line, message };
        let mut tokens = raw.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut vals = [0.0f64; 3];
                for v in &mut vals {
                    let tok = tokens
                        .next()
                        .ok_or_else(|| err("vertex needs 3 coordinates".into()))?;
                    *v = tok
                        .parse()
                        .map_err(|_| err(format!("bad coordinate '{tok}'")))?;
                }
                mesh.vertices.push(MeshVertex {
                    position: vec3(vals[0], vals[1], vals[2]),
                    source: None,
                });
            }
            Some("f") => {
                let mut ids = Vec::new();
                for tok in tokens {
                    let first = tok.split('/').next().unwrap_or(tok);
                    let id: i64 = first
                        .parse()
                        .map_err(|_| err(format!("bad face index '{tok}'")))?;
                    if id < 1 {
                        return Err(err(format!("unsupported face index {id}")));
                    }
                    let id = id as usize - 1;
                    if id >= mesh.vertices.len() {
                        return Err(err(format!("face index {} out of range", id + 1)));
                    }
                    ids.push(id);
                }
                if ids.len() < 3 {
                    return Err(err("face needs at least 3 vertices".into()));
                }
                for k in 1..ids.len() - 1 {
                    mesh.triangles.push([ids[0], ids[k], ids[k + 1]]);
                    mesh.tri_planes.push(None);
                }
            }
            // Comments, groups, normals, materials: skipped.
            _ => {}
        }
    }
    Ok(mesh)
}
