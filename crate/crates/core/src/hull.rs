//! Robust-enough 3D convex hull (quickhull) with merged coplanar facets.
//!
//! The hull is used twice: in dual space, where facets enumerate the plane
//! triples forming polytope vertices, and in primal space for densification
//! refits. Facets are polygons (coplanar triangle fans merged), wound
//! counter-clockwise as seen from outside, with symmetric neighbor links.
//!
//! No exact arithmetic. Degenerate inputs are rejected with
//! [`HullError::DegenerateInput`]; callers decide the fallback.

use std::collections::{BTreeSet, HashMap, VecDeque};

use thiserror::Error;

use crate::math::{Aabb, Vec3};

/// Default relative tolerance, scaled internally by the input bounding-box
/// diagonal.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum HullError {
    /// Fewer than 4 points, or all points coincident/collinear/coplanar
    /// within tolerance.
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
    /// Inconsistency in the hull construction itself; indicates an input at
    /// the edge of the tolerance model.
    #[error("hull construction failed: {0}")]
    Internal(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointClass {
    StrictlyInside,
    OnBoundary,
    Outside,
}

/// One polygonal facet of the hull.
#[derive(Clone, Debug)]
pub struct HullFacet {
    /// Input-point indices on this facet, an ordered closed loop, CCW seen
    /// from outside.
    pub vertex_ids: Vec<usize>,
    /// Outward unit normal.
    pub normal: Vec3,
    /// `normal . p = offset` for points on the facet plane.
    pub offset: f64,
    /// Adjacent facet across edge `vertex_ids[i] -> vertex_ids[i+1]`.
    pub neighbor_ids: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct Hull {
    pub points: Vec<Vec3>,
    pub facets: Vec<HullFacet>,
    /// Indices of input points that are hull vertices (corners, not interior
    /// to a facet or an edge).
    pub hull_vertex_ids: BTreeSet<usize>,
    /// Absolute epsilon used during construction.
    pub epsilon: f64,
    /// Bounding-box diagonal of the input.
    pub diagonal: f64,
}

impl Hull {
    /// Divergence-theorem volume over fan-triangulated facets.
    pub fn volume(&self) -> f64 {
        let mut six_vol = 0.0;
        for f in &self.facets {
            let p0 = self.points[f.vertex_ids[0]];
            for w in f.vertex_ids[1..].windows(2) {
                let p1 = self.points[w[0]];
                let p2 = self.points[w[1]];
                six_vol += p0.dot(p1.cross(p2));
            }
        }
        six_vol / 6.0
    }
}

/// Classifies `p` against the hull. `tolerance` is relative to the hull's
/// bounding-box diagonal, like in [`convex_hull_3d`].
pub fn point_in_hull(hull: &Hull, p: Vec3, tolerance: f64) -> PointClass {
    let eps = tolerance * hull.diagonal;
    let mut near_boundary = false;
    for f in &hull.facets {
        let d = f.normal.dot(p) - f.offset;
        if d > eps {
            return PointClass::Outside;
        }
        if d >= -eps {
            near_boundary = true;
        }
    }
    if near_boundary {
        PointClass::OnBoundary
    } else {
        PointClass::StrictlyInside
    }
}

// ---------------------------------------------------------------------------
// Quickhull
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
struct Tri {
    v: [usize; 3],
    normal: Vec3,
    offset: f64,
    /// Neighbor across edge (v[i], v[(i+1)%3]).
    adj: [usize; 3],
    outside: Vec<usize>,
    far_point: usize,
    far_dist: f64,
    alive: bool,
}

impl Tri {
    fn dist(&self, p: Vec3) -> f64 {
        self.normal.dot(p) - self.offset
    }

    fn edge_slot(&self, a: usize, b: usize) -> Option<usize> {
        (0..3).find(|&s| self.v[s] == a && self.v[(s + 1) % 3] == b)
    }
}

fn tri_plane(points: &[Vec3], a: usize, b: usize, c: usize) -> Option<(Vec3, f64)> {
    let n = (points[b] - points[a]).cross(points[c] - points[a]);
    let len = n.norm();
    if len == 0.0 || !len.is_finite() {
        return None;
    }
    let n = n / len;
    // Offset from the centroid reduces the worst-case error over the three
    // corners.
    let centroid = (points[a] + points[b] + points[c]) / 3.0;
    Some((n, n.dot(centroid)))
}

/// Computes the convex hull of `points`. `tolerance` is relative; the
/// absolute epsilon is `tolerance * bounding-box diagonal`
/// ([`DEFAULT_TOLERANCE`] by default). Coplanar adjacent facets are merged
/// into single polygons. Deterministic: identical input yields identical
/// facet structure, ties broken by lowest index.
pub fn convex_hull_3d(points: &[Vec3], tolerance: f64) -> Result<Hull, HullError> {
    if points.len() < 4 {
        return Err(HullError::DegenerateInput("fewer than 4 points"));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(HullError::DegenerateInput("non-finite coordinates"));
    }
    let bb = Aabb::from_points(points.iter().copied()).unwrap();
    let diag = bb.diagonal();
    if diag == 0.0 {
        return Err(HullError::DegenerateInput("all points coincident"));
    }
    let eps = tolerance.max(f64::EPSILON) * diag;

    let mut tris = initial_tetrahedron(points, eps)?;

    // Conflict assignment for every point not on the initial tetrahedron.
    let tetra_verts: BTreeSet<usize> = tris.iter().flat_map(|t| t.v).collect();
    for i in 0..points.len() {
        if !tetra_verts.contains(&i) {
            assign_point(&mut tris, i, points[i], eps, 0..4);
        }
    }

    let mut work: VecDeque<usize> = (0..tris.len()).collect();
    let mut stamp = vec![0u32; tris.len()];
    let mut epoch = 0u32;

    while let Some(fi) = work.pop_front() {
        if !tris[fi].alive || tris[fi].outside.is_empty() {
            continue;
        }
        let eye_idx = tris[fi].far_point;
        let eye = points[eye_idx];

        // Flood-fill the visible region.
        epoch += 1;
        stamp.resize(tris.len(), 0);
        let mut visible = vec![fi];
        stamp[fi] = epoch;
        let mut horizon: Vec<(usize, usize, usize)> = Vec::new(); // (a, b, hidden tri)
        let mut cursor = 0;
        while cursor < visible.len() {
            let t = visible[cursor];
            cursor += 1;
            for s in 0..3 {
                let nb = tris[t].adj[s];
                if stamp[nb] == epoch {
                    continue;
                }
                if tris[nb].dist(eye) > eps {
                    stamp[nb] = epoch;
                    visible.push(nb);
                } else {
                    horizon.push((tris[t].v[s], tris[t].v[(s + 1) % 3], nb));
                }
            }
        }

        // Build the fan of new faces around the eye point.
        let mut orphans: Vec<usize> = Vec::new();
        for &t in &visible {
            tris[t].alive = false;
            orphans.append(&mut tris[t].outside);
        }
        let mut side_edges: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        let first_new = tris.len();
        for &(a, b, hidden) in &horizon {
            let (normal, offset) = tri_plane(points, a, b, eye_idx)
                .ok_or(HullError::Internal("degenerate horizon face"))?;
            let ti = tris.len();
            let hidden_slot = tris[hidden]
                .edge_slot(b, a)
                .ok_or(HullError::Internal("broken horizon adjacency"))?;
            tris[hidden].adj[hidden_slot] = ti;
            tris.push(Tri {
                v: [a, b, eye_idx],
                normal,
                offset,
                adj: [hidden, usize::MAX, usize::MAX],
                outside: Vec::new(),
                far_point: usize::MAX,
                far_dist: 0.0,
                alive: true,
            });
            side_edges.insert((b, eye_idx), (ti, 1));
            side_edges.insert((eye_idx, a), (ti, 2));
        }
        for ti in first_new..tris.len() {
            let [a, b, _] = tris[ti].v;
            let (n1, _) = *side_edges
                .get(&(eye_idx, b))
                .ok_or(HullError::Internal("open horizon loop"))?;
            let (n2, _) = *side_edges
                .get(&(a, eye_idx))
                .ok_or(HullError::Internal("open horizon loop"))?;
            tris[ti].adj[1] = n1;
            tris[ti].adj[2] = n2;
        }

        let last_new = tris.len();
        for &p in &orphans {
            if p != eye_idx {
                assign_point(&mut tris, p, points[p], eps, first_new..last_new);
            }
        }
        work.extend(first_new..last_new);
    }

    merge_facets(points, &tris, eps, tolerance, diag)
}

/// Assigns a conflict point to whichever candidate face it is farthest
/// outside of; points inside every face are dropped.
fn assign_point(
    tris: &mut [Tri],
    idx: usize,
    p: Vec3,
    eps: f64,
    candidates: std::ops::Range<usize>,
) {
    let mut best = eps;
    let mut best_tri = usize::MAX;
    for t in candidates {
        if !tris[t].alive {
            continue;
        }
        let d = tris[t].dist(p);
        if d > best {
            best = d;
            best_tri = t;
        }
    }
    if best_tri != usize::MAX {
        let t = &mut tris[best_tri];
        t.outside.push(idx);
        if best > t.far_dist {
            t.far_dist = best;
            t.far_point = idx;
        }
    }
}

fn initial_tetrahedron(points: &[Vec3], eps: f64) -> Result<Vec<Tri>, HullError> {
    // Extremes per axis, lowest index on ties.
    let mut extremes: Vec<usize> = Vec::with_capacity(6);
    for k in 0..3 {
        let mut imin = 0;
        let mut imax = 0;
        for (i, p) in points.iter().enumerate() {
            if p.component(k) < points[imin].component(k) {
                imin = i;
            }
            if p.component(k) > points[imax].component(k) {
                imax = i;
            }
        }
        extremes.push(imin);
        extremes.push(imax);
    }

    let mut i0 = extremes[0];
    let mut i1 = extremes[1];
    let mut best = -1.0;
    for (a, &ea) in extremes.iter().enumerate() {
        for &eb in &extremes[a + 1..] {
            let d = points[ea].distance_squared(points[eb]);
            if d > best {
                best = d;
                i0 = ea;
                i1 = eb;
            }
        }
    }
    if best.sqrt() <= eps {
        return Err(HullError::DegenerateInput("all points coincident"));
    }

    let dir = (points[i1] - points[i0]).normalized();
    let mut i2 = usize::MAX;
    let mut best = eps;
    for (i, p) in points.iter().enumerate() {
        let d = (*p - points[i0]).cross(dir).norm();
        if d > best {
            best = d;
            i2 = i;
        }
    }
    if i2 == usize::MAX {
        return Err(HullError::DegenerateInput("all points collinear"));
    }

    let (plane_n, plane_o) =
        tri_plane(points, i0, i1, i2).ok_or(HullError::DegenerateInput("all points collinear"))?;
    let mut i3 = usize::MAX;
    let mut best = eps;
    for (i, p) in points.iter().enumerate() {
        let d = (plane_n.dot(*p) - plane_o).abs();
        if d > best {
            best = d;
            i3 = i;
        }
    }
    if i3 == usize::MAX {
        return Err(HullError::DegenerateInput("all points coplanar"));
    }

    let corners = [i0, i1, i2, i3];
    let centroid =
        (points[i0] + points[i1] + points[i2] + points[i3]) / 4.0;
    let face_ids = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];
    let mut tris = Vec::with_capacity(4);
    for ids in face_ids {
        let mut v = [corners[ids[0]], corners[ids[1]], corners[ids[2]]];
        let (mut n, mut o) =
            tri_plane(points, v[0], v[1], v[2]).ok_or(HullError::Internal("flat tetrahedron"))?;
        if n.dot(centroid) > o {
            v.swap(1, 2);
            n = -n;
            o = -o;
        }
        tris.push(Tri {
            v,
            normal: n,
            offset: o,
            adj: [usize::MAX; 3],
            outside: Vec::new(),
            far_point: usize::MAX,
            far_dist: 0.0,
            alive: true,
        });
    }
    for a in 0..4 {
        for s in 0..3 {
            let (u, w) = (tris[a].v[s], tris[a].v[(s + 1) % 3]);
            for b in 0..4 {
                if b != a && tris[b].edge_slot(w, u).is_some() {
                    tris[a].adj[s] = b;
                }
            }
        }
    }
    Ok(tris)
}

// ---------------------------------------------------------------------------
// Coplanar facet merging
// ---------------------------------------------------------------------------

fn merge_facets(
    points: &[Vec3],
    tris: &[Tri],
    eps: f64,
    tolerance: f64,
    diag: f64,
) -> Result<Hull, HullError> {
    // Angular merge threshold derived from the relative tolerance
    // (1e-9 default -> 1e-7 rad).
    let angle_tol = (tolerance * 100.0).max(1e-12);

    let alive: Vec<usize> = (0..tris.len()).filter(|&i| tris[i].alive).collect();
    let mut group_of = vec![usize::MAX; tris.len()];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &seed in &alive {
        if group_of[seed] != usize::MAX {
            continue;
        }
        let gid = groups.len();
        let seed_n = tris[seed].normal;
        let mut members = vec![seed];
        group_of[seed] = gid;
        let mut cursor = 0;
        while cursor < members.len() {
            let t = members[cursor];
            cursor += 1;
            for s in 0..3 {
                let nb = tris[t].adj[s];
                if group_of[nb] != usize::MAX || !tris[nb].alive {
                    continue;
                }
                let n = tris[nb].normal;
                if seed_n.dot(n) > 0.0 && seed_n.cross(n).norm() < angle_tol {
                    group_of[nb] = gid;
                    members.push(nb);
                }
            }
        }
        groups.push(members);
    }

    let mut facets: Vec<HullFacet> = Vec::with_capacity(groups.len());
    let mut neighbor_tris: Vec<Vec<usize>> = Vec::with_capacity(groups.len());
    for (gid, members) in groups.iter().enumerate() {
        // Directed boundary edges of the group, keyed by start vertex.
        let mut next: HashMap<usize, (usize, usize)> = HashMap::new(); // a -> (b, neighbor tri)
        let mut edge_count = 0usize;
        let mut start = usize::MAX;
        for &t in members {
            for s in 0..3 {
                let nb = tris[t].adj[s];
                if group_of[nb] == gid {
                    continue;
                }
                let a = tris[t].v[s];
                let b = tris[t].v[(s + 1) % 3];
                if next.insert(a, (b, nb)).is_some() {
                    return Err(HullError::Internal("non-simple merged facet"));
                }
                edge_count += 1;
                start = start.min(a);
            }
        }
        if edge_count < 3 {
            return Err(HullError::Internal("merged facet swallowed the hull"));
        }
        let mut loop_ids = Vec::with_capacity(edge_count);
        let mut loop_nbs = Vec::with_capacity(edge_count);
        let mut cur = start;
        loop {
            let &(nxt, nb) = next
                .get(&cur)
                .ok_or(HullError::Internal("open facet boundary"))?;
            loop_ids.push(cur);
            loop_nbs.push(nb);
            cur = nxt;
            if cur == start {
                break;
            }
            if loop_ids.len() > edge_count {
                return Err(HullError::Internal("facet boundary does not close"));
            }
        }
        if loop_ids.len() != edge_count {
            return Err(HullError::Internal("disconnected facet boundary"));
        }

        // Area-weighted plane of the group.
        let mut n_sum = Vec3::ZERO;
        for &t in members {
            let [a, b, c] = tris[t].v;
            n_sum += (points[b] - points[a]).cross(points[c] - points[a]);
        }
        let normal = n_sum.normalized();
        let offset =
            loop_ids.iter().map(|&i| normal.dot(points[i])).sum::<f64>() / loop_ids.len() as f64;

        facets.push(HullFacet {
            vertex_ids: loop_ids,
            normal,
            offset,
            neighbor_ids: Vec::new(),
        });
        neighbor_tris.push(loop_nbs);
    }

    // Drop loop vertices that merging left collinear on a boundary edge
    // (both adjacent edges must border the same neighbor group).
    for (f, nbs) in facets.iter_mut().zip(neighbor_tris.iter_mut()) {
        loop {
            let n = f.vertex_ids.len();
            if n <= 3 {
                break;
            }
            let mut removed = false;
            for i in 0..n {
                let prev = (i + n - 1) % n;
                if group_of[nbs[prev]] != group_of[nbs[i]] {
                    continue;
                }
                let a = points[f.vertex_ids[prev]];
                let v = points[f.vertex_ids[i]];
                let b = points[f.vertex_ids[(i + 1) % n]];
                if point_segment_distance(v, a, b) < eps {
                    // The merged edge (a,b) borders the same neighbor group,
                    // so dropping the entry at i keeps edges aligned.
                    f.vertex_ids.remove(i);
                    nbs.remove(i);
                    removed = true;
                    break;
                }
            }
            if !removed {
                break;
            }
        }
    }

    for (fi, nbs) in neighbor_tris.iter().enumerate() {
        facets[fi].neighbor_ids = nbs.iter().map(|&t| group_of[t]).collect();
    }

    let hull_vertex_ids: BTreeSet<usize> = facets
        .iter()
        .flat_map(|f| f.vertex_ids.iter().copied())
        .collect();

    Ok(Hull {
        points: points.to_vec(),
        facets,
        hull_vertex_ids,
        epsilon: eps,
        diagonal: diag,
    })
}

fn point_segment_distance(p: Vec3, a: Vec3, b: Vec3) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::vec3;
    use crate::rng::Rng;

    fn cube_corners(scale: f64) -> Vec<Vec3> {
        let mut v = Vec::new();
        for &x in &[-scale, scale] {
            for &y in &[-scale, scale] {
                for &z in &[-scale, scale] {
                    v.push(vec3(x, y, z));
                }
            }
        }
        v
    }

    /// Structural sanity: symmetric neighbors, closed edge pairing, Euler
    /// characteristic 2 after fan triangulation, all points behind facets.
    fn validate(hull: &Hull) {
        let mut dir_edges = std::collections::HashMap::new();
        for (fi, f) in hull.facets.iter().enumerate() {
            assert!(f.vertex_ids.len() >= 3);
            assert_eq!(f.vertex_ids.len(), f.neighbor_ids.len());
            assert!((f.normal.norm() - 1.0).abs() < 1e-9);
            let n = f.vertex_ids.len();
            for i in 0..n {
                let a = f.vertex_ids[i];
                let b = f.vertex_ids[(i + 1) % n];
                assert!(dir_edges.insert((a, b), fi).is_none(), "duplicate edge");
                let nb = f.neighbor_ids[i];
                assert!(hull.facets[nb]
                    .vertex_ids
                    .iter()
                    .any(|&v| v == a || v == b));
            }
        }
        for (&(a, b), &fi) in &dir_edges {
            let opp = dir_edges.get(&(b, a));
            assert!(opp.is_some(), "unpaired edge");
            assert_ne!(*opp.unwrap(), fi, "edge pairs within one facet");
        }
        let v = hull.hull_vertex_ids.len() as i64;
        let e = dir_edges.len() as i64 / 2;
        let tri_f: i64 = hull
            .facets
            .iter()
            .map(|f| f.vertex_ids.len() as i64 - 2)
            .sum();
        let extra_e: i64 = hull
            .facets
            .iter()
            .map(|f| f.vertex_ids.len() as i64 - 3)
            .sum();
        assert_eq!(v - (e + extra_e) + tri_f, 2, "Euler characteristic");
        for p in &hull.points {
            for f in &hull.facets {
                assert!(
                    f.normal.dot(*p) <= f.offset + 8.0 * hull.epsilon,
                    "input point outside a facet plane"
                );
            }
        }
        // Winding: Newell normal of each loop agrees with the facet normal.
        for f in &hull.facets {
            let mut newell = Vec3::ZERO;
            let n = f.vertex_ids.len();
            for i in 0..n {
                let a = hull.points[f.vertex_ids[i]];
                let b = hull.points[f.vertex_ids[(i + 1) % n]];
                newell += a.cross(b);
            }
            assert!(newell.dot(f.normal) > 0.0, "facet wound clockwise");
        }
    }

    #[test]
    fn cube_has_six_quads() {
        let hull = convex_hull_3d(&cube_corners(1.0), DEFAULT_TOLERANCE).unwrap();
        validate(&hull);
        assert_eq!(hull.facets.len(), 6);
        assert!(hull.facets.iter().all(|f| f.vertex_ids.len() == 4));
        assert_eq!(hull.hull_vertex_ids.len(), 8);
        let edges: usize = hull.facets.iter().map(|f| f.vertex_ids.len()).sum();
        assert_eq!(edges / 2, 12);
        assert!((hull.volume() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn octahedron_has_eight_triangles() {
        let pts = vec![
            vec3(1.0, 0.0, 0.0),
            vec3(-1.0, 0.0, 0.0),
            vec3(0.0, 1.0, 0.0),
            vec3(0.0, -1.0, 0.0),
            vec3(0.0, 0.0, 1.0),
            vec3(0.0, 0.0, -1.0),
        ];
        let hull = convex_hull_3d(&pts, DEFAULT_TOLERANCE).unwrap();
        validate(&hull);
        assert_eq!(hull.facets.len(), 8);
        assert!(hull.facets.iter().all(|f| f.vertex_ids.len() == 3));
        assert_eq!(hull.hull_vertex_ids.len(), 6);
    }

    #[test]
    fn interior_points_are_excluded() {
        // 100 random points inside the unit ball plus cube corners at scale 2:
        // the corners are exactly the hull vertices.
        let mut pts = Vec::new();
        let mut rng = Rng::new(42);
        while pts.len() < 100 {
            let p = vec3(
                rng.range(-1.0, 1.0),
                rng.range(-1.0, 1.0),
                rng.range(-1.0, 1.0),
            );
            if p.norm() < 1.0 {
                pts.push(p);
            }
        }
        let corner_start = pts.len();
        pts.extend(cube_corners(2.0));
        let hull = convex_hull_3d(&pts, DEFAULT_TOLERANCE).unwrap();
        validate(&hull);
        let expect: BTreeSet<usize> = (corner_start..corner_start + 8).collect();
        assert_eq!(hull.hull_vertex_ids, expect);
        // Oracle: every interior point must lie strictly behind every facet.
        for (i, p) in pts.iter().enumerate() {
            if !expect.contains(&i) {
                for f in &hull.facets {
                    assert!(f.normal.dot(*p) < f.offset - hull.epsilon);
                }
            }
        }
    }

    #[test]
    fn edge_midpoints_are_not_hull_vertices() {
        let mut pts = cube_corners(1.0);
        pts.push(vec3(1.0, 1.0, 0.0)); // midpoint of a cube edge
        pts.push(vec3(0.0, 0.0, 1.0)); // center of a cube face
        let hull = convex_hull_3d(&pts, DEFAULT_TOLERANCE).unwrap();
        validate(&hull);
        assert_eq!(hull.hull_vertex_ids.len(), 8);
        assert!(!hull.hull_vertex_ids.contains(&8));
        assert!(!hull.hull_vertex_ids.contains(&9));
        assert_eq!(hull.facets.len(), 6);
    }

    #[test]
    fn point_classification_on_cube() {
        let hull = convex_hull_3d(&cube_corners(1.0), DEFAULT_TOLERANCE).unwrap();
        assert_eq!(
            point_in_hull(&hull, vec3(0.0, 0.0, 0.0), 1e-9),
            PointClass::StrictlyInside
        );
        assert_eq!(
            point_in_hull(&hull, vec3(1.0, 0.0, 0.0), 1e-9),
            PointClass::OnBoundary
        );
        assert_eq!(
            point_in_hull(&hull, vec3(2.0, 0.0, 0.0), 1e-9),
            PointClass::Outside
        );
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        let p = vec3(0.0, 0.0, 0.0);
        assert!(matches!(
            convex_hull_3d(&[p, p, p], DEFAULT_TOLERANCE),
            Err(HullError::DegenerateInput(_))
        ));
        assert!(matches!(
            convex_hull_3d(&[p; 8], DEFAULT_TOLERANCE),
            Err(HullError::DegenerateInput(_))
        ));
        let line: Vec<Vec3> = (0..6).map(|i| vec3(i as f64, 0.0, 0.0)).collect();
        assert!(matches!(
            convex_hull_3d(&line, DEFAULT_TOLERANCE),
            Err(HullError::DegenerateInput(_))
        ));
        let plane: Vec<Vec3> = (0..9)
            .map(|i| vec3((i % 3) as f64, (i / 3) as f64, 0.0))
            .collect();
        assert!(matches!(
            convex_hull_3d(&plane, DEFAULT_TOLERANCE),
            Err(HullError::DegenerateInput(_))
        ));
    }

    #[test]
    fn deterministic_facet_structure() {
        let mut rng = Rng::new(9);
        let pts: Vec<Vec3> = (0..60).map(|_| rng.unit_vector() * rng.range(0.5, 1.5)).collect();
        let a = convex_hull_3d(&pts, DEFAULT_TOLERANCE).unwrap();
        let b = convex_hull_3d(&pts, DEFAULT_TOLERANCE).unwrap();
        let loops_a: Vec<_> = a.facets.iter().map(|f| f.vertex_ids.clone()).collect();
        let loops_b: Vec<_> = b.facets.iter().map(|f| f.vertex_ids.clone()).collect();
        assert_eq!(loops_a, loops_b);
    }

    #[test]
    fn random_hulls_contain_their_points() {
        let mut rng = Rng::new(1234);
        for trial in 0..30 {
            let n = 10 + (trial % 20);
            let pts: Vec<Vec3> = (0..n)
                .map(|_| {
                    vec3(
                        rng.range(-1.0, 1.0),
                        rng.range(-1.0, 1.0),
                        rng.range(-1.0, 1.0),
                    )
                })
                .collect();
            let hull = match convex_hull_3d(&pts, DEFAULT_TOLERANCE) {
                Ok(h) => h,
                Err(HullError::DegenerateInput(_)) => continue,
                Err(e) => panic!("{e}"),
            };
            validate(&hull);
            for p in &pts {
                assert_ne!(point_in_hull(&hull, *p, 1e-8), PointClass::Outside);
            }
        }
    }

    #[test]
    fn volume_monotone_under_subset() {
        let mut rng = Rng::new(77);
        let pts: Vec<Vec3> = (0..40)
            .map(|_| {
                vec3(
                    rng.range(-1.0, 1.0),
                    rng.range(-1.0, 1.0),
                    rng.range(-1.0, 1.0),
                )
            })
            .collect();
        let full = convex_hull_3d(&pts, DEFAULT_TOLERANCE).unwrap();
        let sub = convex_hull_3d(&pts[..20], DEFAULT_TOLERANCE).unwrap();
        assert!(full.volume() >= sub.volume() - 1e-12);
    }

    /// Brute-force oracle on small instances: a point is a hull vertex iff
    /// some plane through three points has all others on one side of it.
    #[test]
    fn agrees_with_bruteforce_vertex_oracle() {
        let mut rng = Rng::new(5150);
        for _ in 0..25 {
            let pts: Vec<Vec3> = (0..12)
                .map(|_| {
                    vec3(
                        rng.range(-1.0, 1.0),
                        rng.range(-1.0, 1.0),
                        rng.range(-1.0, 1.0),
                    )
                })
                .collect();
            let hull = convex_hull_3d(&pts, DEFAULT_TOLERANCE).unwrap();
            let mut oracle: BTreeSet<usize> = BTreeSet::new();
            let n = pts.len();
            for i in 0..n {
                for j in i + 1..n {
                    for k in j + 1..n {
                        let Some((nrm, off)) = tri_plane(&pts, i, j, k) else {
                            continue;
                        };
                        let mut pos = 0;
                        let mut neg = 0;
                        for (m, p) in pts.iter().enumerate() {
                            if m == i || m == j || m == k {
                                continue;
                            }
                            let d = nrm.dot(*p) - off;
                            if d > 1e-12 {
                                pos += 1;
                            } else if d < -1e-12 {
                                neg += 1;
                            }
                        }
                        if pos == 0 || neg == 0 {
                            oracle.extend([i, j, k]);
                        }
                    }
                }
            }
            assert_eq!(hull.hull_vertex_ids, oracle);
        }
    }
}
