//! The `.cvx` scene format, reminiscent of `.obj`: one geometric entity per
//! line. A `p` line holds a hyperplane (nx ny nz offset), a `c` line lists
//! the plane indices of one convex polyhedron, and the i-th `t` line is the
//! translation of the i-th convex. Missing translations default to zero.
//!
//! Plane indices may be shared between convexes on read; the writer always
//! emits each convex's planes privately.

use thiserror::Error;

use crate::math::{vec3, Vec3};
use crate::polytope::{ConvexPolyhedron, Hyperplane};

#[derive(Error, Debug, Clone, PartialEq)]
#[error("line {line}: {message}")]
pub struct CvxParseError {
    pub line: usize,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CvxDocument {
    /// Global plane list: (normal, offset).
    pub planes: Vec<(Vec3, f64)>,
    /// Per-convex indices into `planes`.
    pub convexes: Vec<Vec<usize>>,
    /// One translation per convex.
    pub translations: Vec<Vec3>,
    /// Non-fatal oddities found while parsing (for example non-positive
    /// offsets in hand-authored files).
    pub warnings: Vec<String>,
}

pub fn parse_cvx(text: &str) -> Result<CvxDocument, CvxParseError> {
    let mut doc = CvxDocument::default();
    let mut pending_convexes: Vec<(usize, Vec<usize>)> = Vec::new(); // (line, ids)
    let mut t_count = 0usize;

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let err = |message: String| CvxParseError { line, message };
        let mut tokens = raw.split_whitespace();
        let Some(tag) = tokens.next() else {
            return Err(err("blank line".into()));
        };
        let rest: Vec<&str> = tokens.collect();
        match tag {
            "p" => {
                if rest.len() != 4 {
                    return Err(err(format!("expected 4 numbers after 'p', got {}", rest.len())));
                }
                let mut vals = [0.0f64; 4];
                for (v, tok) in vals.iter_mut().zip(&rest) {
                    *v = tok
                        .parse()
                        .map_err(|_| err(format!("bad number '{tok}'")))?;
                }
                if vals[3] <= 0.0 {
                    doc.warnings
                        .push(format!("line {line}: plane offset {} is not positive", vals[3]));
                }
                doc.planes.push((vec3(vals[0], vals[1], vals[2]), vals[3]));
            }
            "c" => {
                if rest.is_empty() {
                    return Err(err("'c' line lists no plane indices".into()));
                }
                let mut ids = Vec::with_capacity(rest.len());
                for tok in &rest {
                    let id: usize = tok
                        .parse()
                        .map_err(|_| err(format!("bad plane index '{tok}'")))?;
                    ids.push(id);
                }
                pending_convexes.push((line, ids));
            }
            "t" => {
                if rest.len() != 3 {
                    return Err(err(format!("expected 3 numbers after 't', got {}", rest.len())));
                }
                if t_count >= pending_convexes.len() {
                    return Err(err("'t' line without a matching 'c' line".into()));
                }
                let mut vals = [0.0f64; 3];
                for (v, tok) in vals.iter_mut().zip(&rest) {
                    *v = tok
                        .parse()
                        .map_err(|_| err(format!("bad number '{tok}'")))?;
                }
                doc.translations.push(vec3(vals[0], vals[1], vals[2]));
                t_count += 1;
            }
            other => {
                return Err(err(format!("unknown leading token '{other}'")));
            }
        }
    }

    // Index validation against the final plane list.
    for (line, ids) in &pending_convexes {
        for &id in ids {
            if id >= doc.planes.len() {
                return Err(CvxParseError {
                    line: *line,
                    message: format!(
                        "plane index {id} out of range (have {} planes)",
                        doc.planes.len()
                    ),
                });
            }
        }
    }
    doc.convexes = pending_convexes.into_iter().map(|(_, ids)| ids).collect();
    // Missing translations default to zero.
    while doc.translations.len() < doc.convexes.len() {
        doc.translations.push(Vec3::ZERO);
    }
    Ok(doc)
}

/// Emits `p` lines, then `c` lines, then `t` lines, in document order.
/// Numbers use Rust's shortest round-trip decimal formatting, so
/// `parse(write(doc))` reproduces the document exactly.
pub fn write_cvx(doc: &CvxDocument) -> String {
    let mut out = String::new();
    for (n, b) in &doc.planes {
        out.push_str(&format!("p {} {} {} {}\n", n.x, n.y, n.z, b));
    }
    for ids in &doc.convexes {
        out.push('c');
        for id in ids {
            out.push_str(&format!(" {id}"));
        }
        out.push('\n');
    }
    for t in &doc.translations {
        out.push_str(&format!("t {} {} {}\n", t.x, t.y, t.z));
    }
    out
}

/// Instantiates the document's convexes. Ids follow document order.
pub fn document_to_polyhedra(doc: &CvxDocument) -> Vec<ConvexPolyhedron> {
    doc.convexes
        .iter()
        .enumerate()
        .map(|(i, ids)| {
            let planes = ids
                .iter()
                .map(|&id| {
                    let (n, b) = doc.planes[id];
                    Hyperplane::new(n, b)
                })
                .collect();
            ConvexPolyhedron::new(i, planes, doc.translations[i])
        })
        .collect()
}

/// Serializes convexes into a document; planes are never shared on write.
pub fn polyhedra_to_document(convexes: &[ConvexPolyhedron]) -> CvxDocument {
    let mut doc = CvxDocument::default();
    for c in convexes {
        let ids: Vec<usize> = c
            .planes
            .iter()
            .map(|p| {
                doc.planes.push((p.normal, p.offset));
                doc.planes.len() - 1
            })
            .collect();
        doc.convexes.push(ids);
        doc.translations.push(c.translation);
    }
    doc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hull::DEFAULT_TOLERANCE;
    use crate::polytope::{build_mesh, intersect_halfspaces, signed_volume};
    use crate::rng::Rng;

    /// Two axis-aligned cubes of side 2 whose centers sit 4 apart.
    pub(crate) fn two_cube_text() -> &'static str {
        "p  0  0  1  1\n\
         p  0  0 -1  1\n\
         p  0  1  0  1\n\
         p  0 -1  0  1\n\
         p  1  0  0  1\n\
         p -1  0  0  1\n\
         p  0  0  1  1\n\
         p  0  0 -1  1\n\
         p  0  1  0  1\n\
         p  0 -1  0  1\n\
         p  1  0  0  1\n\
         p -1  0  0  1\n\
         c  0  1  2  3  4  5\n\
         c  6  7  8  9 10 11 \n\
         t  0.0  0.0  0.0\n\
         t  4.0  0.0  0.0\n"
    }

    #[test]
    fn two_cube_document_parses() {
        let doc = parse_cvx(two_cube_text()).unwrap();
        assert_eq!(doc.planes.len(), 12);
        assert_eq!(doc.convexes.len(), 2);
        assert_eq!(doc.convexes[0].len(), 6);
        assert_eq!(doc.convexes[1].len(), 6);
        assert_eq!(doc.translations[0], Vec3::ZERO);
        assert_eq!(doc.translations[1], vec3(4.0, 0.0, 0.0));
        assert!(doc.warnings.is_empty());
    }

    #[test]
    fn two_cubes_have_volume_8_centers_4_apart() {
        let doc = parse_cvx(two_cube_text()).unwrap();
        let polys = document_to_polyhedra(&doc);
        let mut centers = Vec::new();
        for p in &polys {
            let topo = intersect_halfspaces(&p.planes, DEFAULT_TOLERANCE).unwrap();
            let mesh = build_mesh(p, &topo).unwrap();
            assert!((signed_volume(&mesh) - 8.0).abs() < 1e-12);
            let c = mesh
                .positions()
                .fold(Vec3::ZERO, |a, p| a + p)
                / mesh.vertices.len() as f64;
            centers.push(c);
        }
        assert!((centers[0].distance(centers[1]) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn empty_string_is_empty_document() {
        let doc = parse_cvx("").unwrap();
        assert!(doc.planes.is_empty());
        assert!(doc.convexes.is_empty());
        assert!(doc.translations.is_empty());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_cvx("p 0 0 1 1\n\nc 0\n").unwrap_err();
        assert_eq!(err.line, 2);
        let err = parse_cvx("q 1 2 3\n").unwrap_err();
        assert_eq!(err.line, 1);
        let err = parse_cvx("p 0 0 1 abc\n").unwrap_err();
        assert_eq!(err.line, 1);
        let err = parse_cvx("p 0 0 1 1\nc 0 7\n").unwrap_err();
        assert_eq!(err.line, 2);
        let err = parse_cvx("p 0 0 1 1\nt 0 0 0\n").unwrap_err();
        assert_eq!(err.line, 2);
        let err = parse_cvx("p 0 0 1 1\nc 0\nt 0 0 0\nt 1 0 0\n").unwrap_err();
        assert_eq!(err.line, 4);
    }

    #[test]
    fn non_positive_offsets_warn_not_fail() {
        let doc = parse_cvx("p 0 0 1 -2\nc 0\n").unwrap();
        assert_eq!(doc.warnings.len(), 1);
        assert_eq!(doc.planes.len(), 1);
    }

    #[test]
    fn missing_translation_defaults_to_zero() {
        let doc = parse_cvx("p 0 0 1 1\nc 0\nc 0\nt 1 2 3\n").unwrap();
        assert_eq!(doc.translations, vec![vec3(1.0, 2.0, 3.0), Vec3::ZERO]);
    }

    #[test]
    fn single_tetra_document_lines() {
        let polys = vec![ConvexPolyhedron::new(
            0,
            vec![
                Hyperplane::new(vec3(1.0, 1.0, 1.0).normalized(), 1.0),
                Hyperplane::new(vec3(1.0, -1.0, -1.0).normalized(), 1.0),
                Hyperplane::new(vec3(-1.0, 1.0, -1.0).normalized(), 1.0),
                Hyperplane::new(vec3(-1.0, -1.0, 1.0).normalized(), 1.0),
            ],
            Vec3::ZERO,
        )];
        let text = write_cvx(&polyhedra_to_document(&polys));
        let p_lines = text.lines().filter(|l| l.starts_with("p ")).count();
        let c_lines = text.lines().filter(|l| l.starts_with("c ")).count();
        let t_lines = text.lines().filter(|l| l.starts_with("t ")).count();
        assert_eq!((p_lines, c_lines, t_lines), (4, 1, 1));
    }

    #[test]
    fn randomized_roundtrip_is_lossless() {
        let mut rng = Rng::new(314);
        for _ in 0..50 {
            let n_planes = 4 + (rng.next_u64() % 12) as usize;
            let n_convex = 1 + (rng.next_u64() % 4) as usize;
            let mut doc = CvxDocument::default();
            for _ in 0..n_planes {
                doc.planes
                    .push((rng.unit_vector() * rng.range(0.01, 100.0), rng.range(1e-6, 10.0)));
            }
            for _ in 0..n_convex {
                let k = 1 + (rng.next_u64() % 8) as usize;
                doc.convexes.push(
                    (0..k)
                        .map(|_| (rng.next_u64() % n_planes as u64) as usize)
                        .collect(),
                );
                doc.translations.push(rng.unit_vector() * rng.range(0.0, 50.0));
            }
            let text = write_cvx(&doc);
            let parsed = parse_cvx(&text).unwrap();
            assert_eq!(parsed.planes, doc.planes);
            assert_eq!(parsed.convexes, doc.convexes);
            assert_eq!(parsed.translations, doc.translations);
            // Idempotent after one pass.
            assert_eq!(write_cvx(&parsed), text);
        }
    }
}
