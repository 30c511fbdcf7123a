//! Halfspace intersection via the duality transform.
//!
//! A plane `a.x <= b` with `b > 0` maps to the dual point `a/b`. Facets of
//! the dual convex hull correspond to vertices of the primal intersection:
//! the facet's dual-point indices are the planes meeting at that vertex, and
//! the vertex position is the solution of the stacked 3x3 system `A x = b`.
//! Primal facet loops come from the cycle of dual facets around each dual
//! hull vertex. The 3x3 solve is the only differentiable step; everything
//! combinatorial is frozen per topology.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::hull::{self, Hull, HullError, PointClass};
use crate::math::{Aabb, Mat3, Vec3};

/// Condition-number cap (Frobenius estimate) for the three-plane solve.
pub const CONDITION_CAP: f64 = 1e8;

/// Relative tolerance for merging coincident primal vertices.
const VERTEX_MERGE_TOLERANCE: f64 = 1e-7;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum PolytopeError {
    #[error("plane offset must be positive, got {0}")]
    NonPositiveOffset(f64),
    #[error("halfspace intersection is unbounded or lower-dimensional")]
    UnboundedOrDegenerate,
    #[error("near-parallel plane triple (condition estimate above cap)")]
    IllConditioned,
    #[error("topology has fewer than 4 vertices")]
    EmptyTopology,
    #[error("mesh is not a closed manifold")]
    NotManifold,
    #[error(transparent)]
    Hull(#[from] HullError),
}

/// One halfspace constraint `normal . x <= offset`; the optimizable
/// parameter. The offset stays positive so the local origin is always
/// strictly feasible.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hyperplane {
    pub normal: Vec3,
    pub offset: f64,
}

impl Hyperplane {
    pub fn new(normal: Vec3, offset: f64) -> Hyperplane {
        Hyperplane { normal, offset }
    }

    /// Signed slack of `p`: negative means strictly inside the halfspace.
    pub fn violation(&self, p: Vec3) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

/// Maps a plane to its dual point `a / b`.
pub fn dualize(plane: &Hyperplane) -> Result<Vec3, PolytopeError> {
    if plane.offset <= 0.0 {
        return Err(PolytopeError::NonPositiveOffset(plane.offset));
    }
    Ok(plane.normal / plane.offset)
}

/// An optimizable convex: planes in a local frame plus a world translation.
#[derive(Clone, Debug)]
pub struct ConvexPolyhedron {
    pub id: usize,
    pub planes: Vec<Hyperplane>,
    pub translation: Vec3,
}

impl ConvexPolyhedron {
    pub fn new(id: usize, planes: Vec<Hyperplane>, translation: Vec3) -> ConvexPolyhedron {
        ConvexPolyhedron {
            id,
            planes,
            translation,
        }
    }
}

/// A primal vertex: the (sorted) canonical triple of planes whose
/// intersection defines it, its solved local-frame position, and every plane
/// passing through it (superset of the triple when >3 planes are
/// concurrent). Gradients flow only through the canonical triple.
#[derive(Clone, Debug)]
pub struct VertexRecord {
    pub plane_ids: [usize; 3],
    pub position: Vec3,
    pub incident_planes: Vec<usize>,
}

/// Combinatorial result of a halfspace intersection.
#[derive(Clone, Debug)]
pub struct PolytopeTopology {
    pub vertices: Vec<VertexRecord>,
    /// plane id -> closed loop of vertex indices, outward-oriented.
    pub facets: BTreeMap<usize, Vec<usize>>,
    pub active_plane_ids: BTreeSet<usize>,
}

/// Triangle mesh with provenance back to topology vertices.
#[derive(Clone, Debug, Default)]
pub struct Mesh {
    /// Scene convex that produced this mesh, if any.
    pub convex_id: Option<usize>,
    pub vertices: Vec<MeshVertex>,
    pub triangles: Vec<[usize; 3]>,
    /// Source plane per triangle; `None` after subdivision.
    pub tri_planes: Vec<Option<usize>>,
}

#[derive(Clone, Copy, Debug)]
pub struct MeshVertex {
    pub position: Vec3,
    /// Index into the originating topology's `vertices`, when the mesh still
    /// corresponds to a polytope.
    pub source: Option<usize>,
}

impl Mesh {
    pub fn positions(&self) -> impl Iterator<Item = Vec3> + '_ {
        self.vertices.iter().map(|v| v.position)
    }

    pub fn triangle_corners(&self, t: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[t];
        [
            self.vertices[a].position,
            self.vertices[b].position,
            self.vertices[c].position,
        ]
    }
}

// ---------------------------------------------------------------------------
// Vertex solve
// ---------------------------------------------------------------------------

/// Position of the point where three planes meet: the solution of the
/// stacked system `A x = b`. Near-parallel triples are rejected.
pub fn solve_vertex(
    p1: &Hyperplane,
    p2: &Hyperplane,
    p3: &Hyperplane,
) -> Result<Vec3, PolytopeError> {
    let (x, _) = solve_with_inverse(p1, p2, p3)?;
    Ok(x)
}

pub(crate) fn solve_with_inverse(
    p1: &Hyperplane,
    p2: &Hyperplane,
    p3: &Hyperplane,
) -> Result<(Vec3, Mat3), PolytopeError> {
    let a = Mat3::from_rows(p1.normal, p2.normal, p3.normal);
    let inv = a.inverse().ok_or(PolytopeError::IllConditioned)?;
    if a.frobenius_norm() * inv.frobenius_norm() > CONDITION_CAP {
        return Err(PolytopeError::IllConditioned);
    }
    let b = Vec3 {
        x: p1.offset,
        y: p2.offset,
        z: p3.offset,
    };
    let x = inv.mul_vec(b);
    if !x.is_finite() {
        return Err(PolytopeError::IllConditioned);
    }
    Ok((x, inv))
}

// ---------------------------------------------------------------------------
// Halfspace intersection
// ---------------------------------------------------------------------------

/// Intersects `planes` (all offsets positive, so the origin is feasible) and
/// recovers the full vertex/facet structure. `tolerance` is the relative
/// hull tolerance.
pub fn intersect_halfspaces(
    planes: &[Hyperplane],
    tolerance: f64,
) -> Result<PolytopeTopology, PolytopeError> {
    if planes.len() < 4 {
        return Err(PolytopeError::UnboundedOrDegenerate);
    }
    let dual: Vec<Vec3> = planes
        .iter()
        .map(dualize)
        .collect::<Result<_, _>>()?;
    let dual_hull = match hull::convex_hull_3d(&dual, tolerance) {
        Ok(h) => h,
        // A degenerate dual point set means the primal intersection is
        // unbounded or lower-dimensional.
        Err(HullError::DegenerateInput(_)) => return Err(PolytopeError::UnboundedOrDegenerate),
        Err(e) => return Err(e.into()),
    };
    topology_from_dual_hull(planes, &dual_hull)
}

fn topology_from_dual_hull(
    planes: &[Hyperplane],
    dual_hull: &Hull,
) -> Result<PolytopeTopology, PolytopeError> {
    // Bounded primal polytope <=> origin strictly inside the dual hull. A
    // dual facet plane through (or near) the origin is a recession
    // direction, i.e. an unbounded intersection.
    if dual_hull
        .facets
        .iter()
        .any(|f| f.offset <= dual_hull.epsilon)
    {
        return Err(PolytopeError::UnboundedOrDegenerate);
    }

    // Solve the fan triples of every dual facet. All triples of one facet
    // describe the same primal vertex.
    struct Candidate {
        triple: [usize; 3],
        position: Vec3,
    }
    let mut facet_candidates: Vec<Vec<Candidate>> = Vec::with_capacity(dual_hull.facets.len());
    for facet in &dual_hull.facets {
        let ids = &facet.vertex_ids;
        let apex = ids
            .iter()
            .enumerate()
            .min_by_key(|&(_, v)| v)
            .map(|(i, _)| i)
            .unwrap();
        let n = ids.len();
        let mut cands = Vec::with_capacity(n - 2);
        for k in 1..n - 1 {
            let (i, j, l) = (ids[apex], ids[(apex + k) % n], ids[(apex + k + 1) % n]);
            let mut triple = [i, j, l];
            triple.sort_unstable();
            match solve_with_inverse(&planes[triple[0]], &planes[triple[1]], &planes[triple[2]]) {
                Ok((x, _)) => cands.push(Candidate {
                    triple,
                    position: x,
                }),
                // Near-parallel triple: drop it; the facet keeps others.
                Err(PolytopeError::IllConditioned) => {}
                Err(e) => return Err(e),
            }
        }
        facet_candidates.push(cands);
    }

    let all_positions: Vec<Vec3> = facet_candidates
        .iter()
        .flat_map(|c| c.iter().map(|c| c.position))
        .collect();
    if all_positions.is_empty() {
        return Err(PolytopeError::UnboundedOrDegenerate);
    }
    let bb = Aabb::from_points(all_positions.iter().copied()).unwrap();
    let merge_eps = (VERTEX_MERGE_TOLERANCE * bb.diagonal()).max(f64::MIN_POSITIVE);

    // Cluster coincident solutions across facets. Quadratic in the number of
    // candidate vertices, which is small (<= 2n-4 facets, few triples each).
    struct Cluster {
        canonical: [usize; 3],
        position: Vec3,
        incident: BTreeSet<usize>,
    }
    let mut clusters: Vec<Cluster> = Vec::new();
    let mut facet_cluster: Vec<Option<usize>> = vec![None; facet_candidates.len()];
    for (fi, cands) in facet_candidates.iter().enumerate() {
        for cand in cands {
            let found = clusters
                .iter()
                .position(|cl| cl.position.distance(cand.position) < merge_eps);
            let ci = match found {
                Some(ci) => {
                    let cl = &mut clusters[ci];
                    if cand.triple < cl.canonical {
                        cl.canonical = cand.triple;
                        cl.position = cand.position;
                    }
                    cl.incident.extend(cand.triple);
                    ci
                }
                None => {
                    clusters.push(Cluster {
                        canonical: cand.triple,
                        position: cand.position,
                        incident: cand.triple.iter().copied().collect(),
                    });
                    clusters.len() - 1
                }
            };
            // Every dual point of the facet is a plane through this vertex.
            clusters[ci]
                .incident
                .extend(dual_hull.facets[fi].vertex_ids.iter().copied());
            if facet_cluster[fi].is_none() {
                facet_cluster[fi] = Some(ci);
            }
        }
    }

    // Deterministic vertex order: by canonical triple.
    let mut order: Vec<usize> = (0..clusters.len()).collect();
    order.sort_by_key(|&i| clusters[i].canonical);
    let mut cluster_rank = vec![0usize; clusters.len()];
    for (rank, &ci) in order.iter().enumerate() {
        cluster_rank[ci] = rank;
    }
    let vertices: Vec<VertexRecord> = order
        .iter()
        .map(|&ci| VertexRecord {
            plane_ids: clusters[ci].canonical,
            position: clusters[ci].position,
            incident_planes: clusters[ci].incident.iter().copied().collect(),
        })
        .collect();

    // Primal facet for plane i: the cycle of dual facets around dual hull
    // vertex i, mapped to merged vertices.
    let mut seed_facet: HashMap<usize, usize> = HashMap::new(); // plane -> first incident facet
    let mut facet_at: HashMap<(usize, usize), usize> = HashMap::new(); // (facet, vertex) -> loop pos
    for (fi, f) in dual_hull.facets.iter().enumerate() {
        for (pos, &v) in f.vertex_ids.iter().enumerate() {
            facet_at.insert((fi, v), pos);
            seed_facet.entry(v).or_insert(fi);
        }
    }

    let mut facets: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut active_plane_ids: BTreeSet<usize> = BTreeSet::new();
    for &plane_id in &dual_hull.hull_vertex_ids {
        let seed = seed_facet[&plane_id];
        let mut cycle: Vec<usize> = Vec::new();
        let mut cur = seed;
        loop {
            if let Some(ci) = facet_cluster[cur] {
                cycle.push(cluster_rank[ci]);
            }
            // Step across the edge leaving `plane_id` in this facet.
            let pos = facet_at[&(cur, plane_id)];
            let nxt = dual_hull.facets[cur].neighbor_ids[pos];
            if nxt == seed {
                break;
            }
            cur = nxt;
            if cycle.len() > dual_hull.facets.len() {
                return Err(PolytopeError::UnboundedOrDegenerate);
            }
        }
        cycle.dedup();
        while cycle.len() > 1 && cycle.first() == cycle.last() {
            cycle.pop();
        }
        if cycle.len() < 3 {
            continue;
        }
        // Outward orientation: Newell normal must agree with the plane's.
        let mut newell = Vec3::ZERO;
        for k in 0..cycle.len() {
            let a = vertices[cycle[k]].position;
            let b = vertices[cycle[(k + 1) % cycle.len()]].position;
            newell += a.cross(b);
        }
        if newell.dot(planes[plane_id].normal) < 0.0 {
            cycle.reverse();
        }
        facets.insert(plane_id, cycle);
        active_plane_ids.insert(plane_id);
    }

    if vertices.len() < 4 {
        return Err(PolytopeError::UnboundedOrDegenerate);
    }

    Ok(PolytopeTopology {
        vertices,
        facets,
        active_plane_ids,
    })
}

/// Planes whose dual point lies strictly inside the dual hull: they support
/// no vertex, receive no gradient, and can be removed without changing the
/// polytope.
pub fn redundant_planes(
    planes: &[Hyperplane],
    tolerance: f64,
) -> Result<BTreeSet<usize>, PolytopeError> {
    if planes.len() < 4 {
        return Err(PolytopeError::UnboundedOrDegenerate);
    }
    let dual: Vec<Vec3> = planes
        .iter()
        .map(dualize)
        .collect::<Result<_, _>>()?;
    let dual_hull = match hull::convex_hull_3d(&dual, tolerance) {
        Ok(h) => h,
        Err(HullError::DegenerateInput(_)) => return Err(PolytopeError::UnboundedOrDegenerate),
        Err(e) => return Err(e.into()),
    };
    Ok((0..planes.len())
        .filter(|&i| hull::point_in_hull(&dual_hull, dual[i], tolerance) == PointClass::StrictlyInside)
        .collect())
}

// ---------------------------------------------------------------------------
// Meshing
// ---------------------------------------------------------------------------

/// Fan-triangulates the facet loops into a closed mesh in world coordinates
/// (local positions plus the convex's translation).
pub fn build_mesh(
    poly: &ConvexPolyhedron,
    topology: &PolytopeTopology,
) -> Result<Mesh, PolytopeError> {
    if topology.vertices.len() < 4 {
        return Err(PolytopeError::EmptyTopology);
    }
    let vertices: Vec<MeshVertex> = topology
        .vertices
        .iter()
        .enumerate()
        .map(|(i, v)| MeshVertex {
            position: v.position + poly.translation,
            source: Some(i),
        })
        .collect();
    let mut triangles = Vec::new();
    let mut tri_planes = Vec::new();
    for (&plane_id, cycle) in &topology.facets {
        // Fan from the lowest-index vertex of the loop, loop order preserved.
        let apex_pos = cycle
            .iter()
            .enumerate()
            .min_by_key(|&(_, v)| v)
            .map(|(i, _)| i)
            .unwrap();
        let n = cycle.len();
        for k in 1..n - 1 {
            triangles.push([
                cycle[apex_pos],
                cycle[(apex_pos + k) % n],
                cycle[(apex_pos + k + 1) % n],
            ]);
            tri_planes.push(Some(plane_id));
        }
    }
    Ok(Mesh {
        convex_id: Some(poly.id),
        vertices,
        triangles,
        tri_planes,
    })
}

/// Divergence-theorem signed volume; positive for outward-wound closed
/// meshes.
pub fn signed_volume(mesh: &Mesh) -> f64 {
    let mut six_vol = 0.0;
    for t in 0..mesh.triangles.len() {
        let [a, b, c] = mesh.triangle_corners(t);
        six_vol += a.dot(b.cross(c));
    }
    six_vol / 6.0
}

// ---------------------------------------------------------------------------
// Loop subdivision
// ---------------------------------------------------------------------------

/// One iteration of Loop subdivision on a closed manifold triangle mesh.
/// Provenance is cleared: subdivided vertices no longer solve any plane
/// triple.
pub fn loop_subdivide(mesh: &Mesh) -> Result<Mesh, PolytopeError> {
    let nv = mesh.vertices.len();
    // Undirected edge -> (first endpoint pair, opposite vertices).
    let mut edges: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    let mut neighbors: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); nv];
    for tri in &mesh.triangles {
        for s in 0..3 {
            let a = tri[s];
            let b = tri[(s + 1) % 3];
            let opp = tri[(s + 2) % 3];
            edges.entry((a.min(b), a.max(b))).or_default().push(opp);
            neighbors[a].insert(b);
            neighbors[b].insert(a);
        }
    }
    if edges.values().any(|opps| opps.len() != 2) {
        return Err(PolytopeError::NotManifold);
    }

    let mut vertices: Vec<MeshVertex> = Vec::with_capacity(nv + edges.len());
    // Even (original) vertices, repositioned with Loop beta weights.
    for (i, ring) in neighbors.iter().enumerate() {
        let n = ring.len();
        if n < 3 {
            return Err(PolytopeError::NotManifold);
        }
        let beta = if n == 3 {
            3.0 / 16.0
        } else {
            let c = 3.0 / 8.0 + (std::f64::consts::TAU / n as f64).cos() / 4.0;
            (5.0 / 8.0 - c * c) / n as f64
        };
        let ring_sum = ring
            .iter()
            .fold(Vec3::ZERO, |acc, &j| acc + mesh.vertices[j].position);
        vertices.push(MeshVertex {
            position: mesh.vertices[i].position * (1.0 - n as f64 * beta) + ring_sum * beta,
            source: None,
        });
    }
    // Odd (edge) vertices.
    let mut edge_vertex: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (&(a, b), opps) in &edges {
        let p = (mesh.vertices[a].position + mesh.vertices[b].position) * (3.0 / 8.0)
            + (mesh.vertices[opps[0]].position + mesh.vertices[opps[1]].position) * (1.0 / 8.0);
        edge_vertex.insert((a, b), vertices.len());
        vertices.push(MeshVertex {
            position: p,
            source: None,
        });
    }

    let mut triangles = Vec::with_capacity(mesh.triangles.len() * 4);
    for tri in &mesh.triangles {
        let [a, b, c] = *tri;
        let mab = edge_vertex[&(a.min(b), a.max(b))];
        let mbc = edge_vertex[&(b.min(c), b.max(c))];
        let mca = edge_vertex[&(c.min(a), c.max(a))];
        triangles.push([a, mab, mca]);
        triangles.push([b, mbc, mab]);
        triangles.push([c, mca, mbc]);
        triangles.push([mab, mbc, mca]);
    }
    let tri_planes = vec![None; triangles.len()];
    Ok(Mesh {
        convex_id: mesh.convex_id,
        vertices,
        triangles,
        tri_planes,
    })
}

// ---------------------------------------------------------------------------

/// Axis-aligned cube planes `|x_k| <= half`, in +x,-x,+y,-y,+z,-z order.
pub fn cube_planes(half: f64) -> Vec<Hyperplane> {
    use crate::math::vec3;
    vec![
        Hyperplane::new(vec3(1.0, 0.0, 0.0), half),
        Hyperplane::new(vec3(-1.0, 0.0, 0.0), half),
        Hyperplane::new(vec3(0.0, 1.0, 0.0), half),
        Hyperplane::new(vec3(0.0, -1.0, 0.0), half),
        Hyperplane::new(vec3(0.0, 0.0, 1.0), half),
        Hyperplane::new(vec3(0.0, 0.0, -1.0), half),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hull::DEFAULT_TOLERANCE;
    use crate::math::vec3;
    use crate::rng::Rng;

    fn tetra_planes() -> Vec<Hyperplane> {
        // Regular tetrahedron around the origin.
        let dirs = [
            vec3(1.0, 1.0, 1.0),
            vec3(1.0, -1.0, -1.0),
            vec3(-1.0, 1.0, -1.0),
            vec3(-1.0, -1.0, 1.0),
        ];
        dirs.iter()
            .map(|d| Hyperplane::new(d.normalized(), 1.0))
            .collect()
    }

    #[test]
    fn dualize_divides_by_offset() {
        let p = Hyperplane::new(vec3(0.0, 0.0, 1.0), 1.0);
        assert_eq!(dualize(&p).unwrap(), vec3(0.0, 0.0, 1.0));
        let p = Hyperplane::new(vec3(0.0, 0.0, 1.0), 2.0);
        assert_eq!(dualize(&p).unwrap(), vec3(0.0, 0.0, 0.5));
        let p = Hyperplane::new(vec3(0.6, 0.0, 0.8), 0.5);
        let d = dualize(&p).unwrap();
        assert!((d - vec3(1.2, 0.0, 1.6)).norm() < 1e-15);
        let bad = Hyperplane::new(vec3(1.0, 0.0, 0.0), 0.0);
        assert!(matches!(
            dualize(&bad),
            Err(PolytopeError::NonPositiveOffset(_))
        ));
    }

    #[test]
    fn solve_vertex_examples() {
        let x = solve_vertex(
            &Hyperplane::new(vec3(1.0, 0.0, 0.0), 1.0),
            &Hyperplane::new(vec3(0.0, 1.0, 0.0), 1.0),
            &Hyperplane::new(vec3(0.0, 0.0, 1.0), 1.0),
        )
        .unwrap();
        assert_eq!(x, vec3(1.0, 1.0, 1.0));

        let x = solve_vertex(
            &Hyperplane::new(vec3(1.0, 0.0, 0.0), 2.0),
            &Hyperplane::new(vec3(0.0, 1.0, 0.0), 3.0),
            &Hyperplane::new(vec3(0.0, 0.0, 1.0), 4.0),
        )
        .unwrap();
        assert_eq!(x, vec3(2.0, 3.0, 4.0));

        // Hand-solved oblique system, verified by substitution.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let p1 = Hyperplane::new(vec3(s, s, 0.0), 1.0);
        let p2 = Hyperplane::new(vec3(s, -s, 0.0), 1.0);
        let p3 = Hyperplane::new(vec3(0.0, 0.0, 1.0), 1.0);
        let x = solve_vertex(&p1, &p2, &p3).unwrap();
        assert!((x - vec3(std::f64::consts::SQRT_2, 0.0, 1.0)).norm() < 1e-12);
        for p in [&p1, &p2, &p3] {
            assert!(p.violation(x).abs() < 1e-12);
        }
    }

    #[test]
    fn near_parallel_triple_is_rejected() {
        let p1 = Hyperplane::new(vec3(1.0, 0.0, 0.0), 1.0);
        let p2 = Hyperplane::new(vec3(1.0, 1e-12, 0.0).normalized(), 1.0);
        let p3 = Hyperplane::new(vec3(0.0, 0.0, 1.0), 1.0);
        assert!(matches!(
            solve_vertex(&p1, &p2, &p3),
            Err(PolytopeError::IllConditioned)
        ));
    }

    #[test]
    fn cube_topology() {
        let planes = cube_planes(1.0);
        let topo = intersect_halfspaces(&planes, DEFAULT_TOLERANCE).unwrap();
        assert_eq!(topo.vertices.len(), 8);
        assert_eq!(topo.facets.len(), 6);
        assert_eq!(topo.active_plane_ids.len(), 6);
        for v in &topo.vertices {
            for &c in &[v.position.x.abs(), v.position.y.abs(), v.position.z.abs()] {
                assert!((c - 1.0).abs() < 1e-12);
            }
            // The canonical triple's planes are tight at the vertex.
            for &pid in &v.plane_ids {
                assert!(planes[pid].violation(v.position).abs() < 1e-12);
            }
            assert_eq!(v.incident_planes.len(), 3);
        }
        for cycle in topo.facets.values() {
            assert_eq!(cycle.len(), 4);
        }
    }

    #[test]
    fn tetrahedron_topology() {
        let planes = tetra_planes();
        let topo = intersect_halfspaces(&planes, DEFAULT_TOLERANCE).unwrap();
        assert_eq!(topo.vertices.len(), 4);
        // Each vertex is the meet of the other three planes.
        for v in &topo.vertices {
            let absent: Vec<usize> = (0..4).filter(|p| !v.plane_ids.contains(p)).collect();
            assert_eq!(absent.len(), 1);
        }
    }

    #[test]
    fn vertices_satisfy_all_halfspaces() {
        let mut rng = Rng::new(31);
        let mut bounded = 0;
        for _ in 0..30 {
            let planes: Vec<Hyperplane> = (0..16)
                .map(|_| Hyperplane::new(rng.unit_vector(), rng.range(0.5, 1.5)))
                .collect();
            let topo = match intersect_halfspaces(&planes, DEFAULT_TOLERANCE) {
                Ok(t) => t,
                // Random normals occasionally fail to positively span space.
                Err(PolytopeError::UnboundedOrDegenerate) => continue,
                Err(e) => panic!("{e}"),
            };
            bounded += 1;
            for v in &topo.vertices {
                for p in &planes {
                    assert!(p.violation(v.position) < 1e-7);
                }
            }
        }
        assert!(bounded >= 20);
    }

    #[test]
    fn gauge_invariance_of_topology() {
        let mut rng = Rng::new(8);
        let planes: Vec<Hyperplane> = (0..12)
            .map(|_| Hyperplane::new(rng.unit_vector(), rng.range(0.5, 1.5)))
            .collect();
        let base = intersect_halfspaces(&planes, DEFAULT_TOLERANCE).unwrap();
        for s in [0.5, 2.0, 10.0] {
            let scaled: Vec<Hyperplane> = planes
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    if i == 3 {
                        Hyperplane::new(p.normal * s, p.offset * s)
                    } else {
                        *p
                    }
                })
                .collect();
            let topo = intersect_halfspaces(&scaled, DEFAULT_TOLERANCE).unwrap();
            assert_eq!(topo.vertices.len(), base.vertices.len());
            for (a, b) in topo.vertices.iter().zip(base.vertices.iter()) {
                assert_eq!(a.plane_ids, b.plane_ids);
                assert!(a.position.distance(b.position) < 1e-12);
            }
        }
    }

    #[test]
    fn unbounded_or_degenerate_inputs() {
        // Three planes cannot bound a polytope.
        let planes = cube_planes(1.0)[..3].to_vec();
        assert!(matches!(
            intersect_halfspaces(&planes, DEFAULT_TOLERANCE),
            Err(PolytopeError::UnboundedOrDegenerate)
        ));
        // A slab is unbounded: dual points collinear.
        let slab = vec![
            Hyperplane::new(vec3(1.0, 0.0, 0.0), 1.0),
            Hyperplane::new(vec3(-1.0, 0.0, 0.0), 1.0),
            Hyperplane::new(vec3(1.0, 0.0, 0.0), 2.0),
            Hyperplane::new(vec3(-1.0, 0.0, 0.0), 2.0),
        ];
        assert!(matches!(
            intersect_halfspaces(&slab, DEFAULT_TOLERANCE),
            Err(PolytopeError::UnboundedOrDegenerate)
        ));
    }

    #[test]
    fn cube_mesh_is_closed() {
        let planes = cube_planes(1.0);
        let topo = intersect_halfspaces(&planes, DEFAULT_TOLERANCE).unwrap();
        let poly = ConvexPolyhedron::new(0, planes.clone(), Vec3::ZERO);
        let mesh = build_mesh(&poly, &topo).unwrap();
        assert_eq!(mesh.vertices.len(), 8);
        assert_eq!(mesh.triangles.len(), 12);
        // Closed: every directed edge paired.
        let mut dir = std::collections::HashSet::new();
        for t in &mesh.triangles {
            for s in 0..3 {
                assert!(dir.insert((t[s], t[(s + 1) % 3])));
            }
        }
        for &(a, b) in &dir {
            assert!(dir.contains(&(b, a)));
        }
        // Triangle normals agree with their source planes.
        for (t, src) in mesh.triangles.iter().zip(&mesh.tri_planes) {
            let [a, b, c] = [
                mesh.vertices[t[0]].position,
                mesh.vertices[t[1]].position,
                mesh.vertices[t[2]].position,
            ];
            let n = (b - a).cross(c - a).normalized();
            let pn = planes[src.unwrap()].normal.normalized();
            assert!((n - pn).norm() < 1e-6);
        }
        assert!((signed_volume(&mesh) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn tetra_mesh_counts_and_volume() {
        let planes = tetra_planes();
        let topo = intersect_halfspaces(&planes, DEFAULT_TOLERANCE).unwrap();
        let poly = ConvexPolyhedron::new(0, planes, Vec3::ZERO);
        let mesh = build_mesh(&poly, &topo).unwrap();
        assert_eq!(mesh.vertices.len(), 4);
        assert_eq!(mesh.triangles.len(), 4);
        // Vertices scale to (±sqrt3, ...) corners: |x| = sqrt(3) per corner.
        // Volume of tetra with corners at (1,1,1)-type corners scaled by s is
        // (8/3) s^3; here s = sqrt(3) because offsets are 1.
        let s = 3f64.sqrt();
        assert!((signed_volume(&mesh) - (8.0 / 3.0) * s * s * s).abs() < 1e-9);
    }

    #[test]
    fn hand_built_tetrahedron_volume() {
        // Regular tetrahedron on alternating cube corners has volume 8/3.
        let corners = [
            vec3(1.0, 1.0, 1.0),
            vec3(1.0, -1.0, -1.0),
            vec3(-1.0, 1.0, -1.0),
            vec3(-1.0, -1.0, 1.0),
        ];
        let mesh = Mesh {
            convex_id: None,
            vertices: corners
                .iter()
                .map(|&position| MeshVertex {
                    position,
                    source: None,
                })
                .collect(),
            triangles: vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]],
            tri_planes: vec![None; 4],
        };
        assert!((signed_volume(&mesh) - 8.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn volume_scaling_law() {
        let planes = cube_planes(1.0);
        let topo = intersect_halfspaces(&planes, DEFAULT_TOLERANCE).unwrap();
        let poly = ConvexPolyhedron::new(0, planes, Vec3::ZERO);
        let mut mesh = build_mesh(&poly, &topo).unwrap();
        let v0 = signed_volume(&mesh);
        for v in &mut mesh.vertices {
            v.position = v.position * 1.7;
        }
        assert!((signed_volume(&mesh) - v0 * 1.7f64.powi(3)).abs() < 1e-9);
    }

    #[test]
    fn redundant_plane_detection() {
        let mut planes = cube_planes(1.0);
        assert!(redundant_planes(&planes, DEFAULT_TOLERANCE)
            .unwrap()
            .is_empty());
        planes.push(Hyperplane::new(vec3(1.0, 0.0, 0.0), 5.0));
        let red = redundant_planes(&planes, DEFAULT_TOLERANCE).unwrap();
        assert_eq!(red, BTreeSet::from([6]));
    }

    #[test]
    fn loop_subdivision_counts() {
        let planes = cube_planes(1.0);
        let topo = intersect_halfspaces(&planes, DEFAULT_TOLERANCE).unwrap();
        let poly = ConvexPolyhedron::new(0, planes, Vec3::ZERO);
        let mesh = build_mesh(&poly, &topo).unwrap();
        let sub = loop_subdivide(&mesh).unwrap();
        // V' = V + E, F' = 4F for closed meshes.
        assert_eq!(sub.vertices.len(), 8 + 18);
        assert_eq!(sub.triangles.len(), 48);
        assert!(sub.vertices.iter().all(|v| v.source.is_none()));

        let tetra = tetra_planes();
        let topo = intersect_halfspaces(&tetra, DEFAULT_TOLERANCE).unwrap();
        let poly = ConvexPolyhedron::new(0, tetra, Vec3::ZERO);
        let mesh = build_mesh(&poly, &topo).unwrap();
        let sub = loop_subdivide(&mesh).unwrap();
        assert_eq!(sub.vertices.len(), 10);
        assert_eq!(sub.triangles.len(), 16);
    }

    #[test]
    fn repeated_subdivision_shrinks_inside_cube() {
        let planes = cube_planes(1.0);
        let topo = intersect_halfspaces(&planes, DEFAULT_TOLERANCE).unwrap();
        let poly = ConvexPolyhedron::new(0, planes, Vec3::ZERO);
        let mut mesh = build_mesh(&poly, &topo).unwrap();
        let mut prev_max = mesh
            .positions()
            .map(|p| p.norm())
            .fold(0.0f64, f64::max);
        for _ in 0..3 {
            mesh = loop_subdivide(&mesh).unwrap();
            let max = mesh
                .positions()
                .map(|p| p.norm())
                .fold(0.0f64, f64::max);
            assert!(max < prev_max);
            prev_max = max;
        }
    }
}

