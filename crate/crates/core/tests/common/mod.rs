#![allow(dead_code)] // each integration target uses its own subset

//! Shared oracles and fixtures for the integration suites. Everything here
//! deliberately avoids the library's fast paths: the halfspace oracle
//! enumerates all plane triples, the silhouette oracle ray-casts every
//! pixel, and meshes are constructed by hand.

use cvxfit::hull::{convex_hull_3d, point_in_hull, PointClass, DEFAULT_TOLERANCE};
use cvxfit::math::{vec3, Vec3};
use cvxfit::polytope::{Hyperplane, Mesh, MeshVertex};
use cvxfit::render::{Camera, Image};
use cvxfit::rng::Rng;

/// Brute-force halfspace-intersection vertices: solve every plane triple by
/// Cramer's rule and keep solutions satisfying all halfspaces within
/// `slack`, deduplicated by `merge_eps`.
pub fn oracle_vertices(planes: &[Hyperplane], slack: f64, merge_eps: f64) -> Vec<Vec3> {
    let n = planes.len();
    let mut verts: Vec<Vec3> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let rhs = vec3(planes[i].offset, planes[j].offset, planes[k].offset);
                let Some(x) = solve3(planes[i].normal, planes[j].normal, planes[k].normal, rhs)
                else {
                    continue;
                };
                if planes.iter().all(|p| p.violation(x) <= slack)
                    && !verts.iter().any(|v| v.distance(x) < merge_eps)
                {
                    verts.push(x);
                }
            }
        }
    }
    verts
}

/// Independent 3x3 solve by explicit cofactor expansion.
fn solve3(r0: Vec3, r1: Vec3, r2: Vec3, b: Vec3) -> Option<Vec3> {
    let det = r0.dot(r1.cross(r2));
    if det.abs() < 1e-14 {
        return None;
    }
    // x_i = det(A with column i replaced by b) / det, computed by swapping
    // into row space: det(A) = det(A^T), replace rows of A^T.
    let c0 = vec3(r0.x, r1.x, r2.x);
    let c1 = vec3(r0.y, r1.y, r2.y);
    let c2 = vec3(r0.z, r1.z, r2.z);
    Some(vec3(
        b.dot(c1.cross(c2)) / det,
        c0.dot(b.cross(c2)) / det,
        c0.dot(c1.cross(b)) / det,
    ))
}

/// Vertex sets equal within `tol` (both directions).
pub fn vertex_sets_match(a: &[Vec3], b: &[Vec3], tol: f64) -> bool {
    a.iter().all(|x| b.iter().any(|y| x.distance(*y) < tol))
        && b.iter().all(|y| a.iter().any(|x| x.distance(*y) < tol))
}

/// Random planes with unit normals and offsets in [0.5, 1.5].
pub fn random_planes(rng: &mut Rng, n: usize) -> Vec<Hyperplane> {
    (0..n)
        .map(|_| Hyperplane::new(rng.unit_vector(), rng.range(0.5, 1.5)))
        .collect()
}

/// Bounded iff the normals positively span space, i.e. the origin is
/// strictly inside the hull of the normal directions.
pub fn is_bounded_instance(planes: &[Hyperplane]) -> bool {
    let dirs: Vec<Vec3> = planes.iter().map(|p| p.normal).collect();
    match convex_hull_3d(&dirs, DEFAULT_TOLERANCE) {
        Ok(h) => point_in_hull(&h, Vec3::ZERO, 1e-6) == PointClass::StrictlyInside,
        Err(_) => false,
    }
}

/// Per-pixel ray-cast silhouette/depth oracle (Moeller-Trumbore).
pub fn raycast_reference(meshes: &[Mesh], camera: &Camera) -> (Image, Image) {
    let (right, up, forward) = camera.basis();
    let f = camera.focal_px();
    let mut sil = Image::zeros(camera.width, camera.height);
    let mut depth = Image::constant(camera.width, camera.height, camera.far);
    for py in 0..camera.height {
        for px in 0..camera.width {
            let xc = (px as f64 + 0.5) - camera.width as f64 / 2.0;
            let yc = camera.height as f64 / 2.0 - (py as f64 + 0.5);
            let dir = (right * (xc / f) + up * (yc / f) + forward).normalized();
            let mut best = f64::INFINITY;
            for mesh in meshes {
                for t in 0..mesh.triangles.len() {
                    let [a, b, c] = mesh.triangle_corners(t);
                    if let Some(tray) = ray_triangle(camera.position, dir, a, b, c) {
                        let hit = camera.position + dir * tray;
                        let d = (hit - camera.position).dot(forward);
                        if d > camera.near && d < best {
                            best = d;
                        }
                    }
                }
            }
            if best < f64::INFINITY {
                sil.set(px, py, 1.0);
                depth.set(px, py, best);
            }
        }
    }
    (sil, depth)
}

fn ray_triangle(orig: Vec3, dir: Vec3, a: Vec3, b: Vec3, c: Vec3) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let pvec = dir.cross(e2);
    let det = e1.dot(pvec);
    if det.abs() < 1e-14 {
        return None;
    }
    let inv_det = 1.0 / det;
    let tvec = orig - a;
    let u = tvec.dot(pvec) * inv_det;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let qvec = tvec.cross(e1);
    let v = dir.dot(qvec) * inv_det;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(qvec) * inv_det;
    (t > 0.0).then_some(t)
}

/// Axis-aligned box as a closed triangle mesh.
pub fn box_mesh(min: Vec3, max: Vec3) -> Mesh {
    let corners = [
        vec3(min.x, min.y, min.z),
        vec3(max.x, min.y, min.z),
        vec3(max.x, max.y, min.z),
        vec3(min.x, max.y, min.z),
        vec3(min.x, min.y, max.z),
        vec3(max.x, min.y, max.z),
        vec3(max.x, max.y, max.z),
        vec3(min.x, max.y, max.z),
    ];
    // Outward-wound quads, split into triangles.
    let quads = [
        [0, 3, 2, 1], // -z
        [4, 5, 6, 7], // +z
        [0, 1, 5, 4], // -y
        [2, 3, 7, 6], // +y
        [1, 2, 6, 5], // +x
        [0, 4, 7, 3], // -x
    ];
    let mut mesh = Mesh {
        convex_id: None,
        vertices: corners
            .iter()
            .map(|&position| MeshVertex {
                position,
                source: None,
            })
            .collect(),
        triangles: Vec::new(),
        tri_planes: Vec::new(),
    };
    for q in quads {
        mesh.triangles.push([q[0], q[1], q[2]]);
        mesh.triangles.push([q[0], q[2], q[3]]);
        mesh.tri_planes.push(None);
        mesh.tri_planes.push(None);
    }
    mesh
}

/// Unit sphere triangulation: subdivided icosahedron with vertices
/// re-projected onto the sphere.
pub fn sphere_mesh(radius: f64, subdivisions: usize) -> Mesh {
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let mut verts = vec![
        vec3(-1.0, phi, 0.0),
        vec3(1.0, phi, 0.0),
        vec3(-1.0, -phi, 0.0),
        vec3(1.0, -phi, 0.0),
        vec3(0.0, -1.0, phi),
        vec3(0.0, 1.0, phi),
        vec3(0.0, -1.0, -phi),
        vec3(0.0, 1.0, -phi),
        vec3(phi, 0.0, -1.0),
        vec3(phi, 0.0, 1.0),
        vec3(-phi, 0.0, -1.0),
        vec3(-phi, 0.0, 1.0),
    ];
    for v in &mut verts {
        *v = v.normalized();
    }
    let mut tris: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoint: std::collections::HashMap<(usize, usize), usize> =
            std::collections::HashMap::new();
        let mut next = Vec::with_capacity(tris.len() * 4);
        for t in &tris {
            let mut mid = [0usize; 3];
            for e in 0..3 {
                let (a, b) = (t[e], t[(e + 1) % 3]);
                let key = (a.min(b), a.max(b));
                mid[e] = *midpoint.entry(key).or_insert_with(|| {
                    verts.push(((verts[a] + verts[b]) * 0.5).normalized());
                    verts.len() - 1
                });
            }
            next.push([t[0], mid[0], mid[2]]);
            next.push([t[1], mid[1], mid[0]]);
            next.push([t[2], mid[2], mid[1]]);
            next.push([mid[0], mid[1], mid[2]]);
        }
        tris = next;
    }
    let triangles = tris;
    Mesh {
        convex_id: None,
        vertices: verts
            .iter()
            .map(|&v| MeshVertex {
                position: v * radius,
                source: None,
            })
            .collect(),
        tri_planes: vec![None; triangles.len()],
        triangles,
    }
}
