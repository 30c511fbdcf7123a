//! Analytic derivatives of vertex positions with respect to plane
//! parameters, and reverse-mode accumulation from per-vertex gradients to
//! per-plane gradients.
//!
//! For a vertex solving `A x = b` (rows of `A` are the triple's normals),
//! implicit differentiation gives `dx/db = A^-1` and, for a perturbation of
//! row i only, `dx = -A^-1 e_i (da_i . x)`. Topology is piecewise constant:
//! the plane triples are frozen, only the solve is differentiated.

use thiserror::Error;

use crate::math::{Mat3, Vec3};
use crate::polytope::{solve_with_inverse, ConvexPolyhedron, Hyperplane, PolytopeTopology};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum DiffError {
    #[error("near-parallel plane triple (condition estimate above cap)")]
    IllConditioned,
    #[error("gradient shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
}

/// Jacobian of one vertex with respect to its triple's parameters.
#[derive(Clone, Copy, Debug)]
pub struct VertexJacobian {
    /// `dx/db = A^-1`; column j is the response to the j-th plane's offset.
    pub d_x_d_b: Mat3,
    /// Block i maps a perturbation of plane i's normal to the vertex motion:
    /// `dx = d_x_d_a[i] . da_i`, with `d_x_d_a[i] = -(A^-1 e_i) x^T`.
    pub d_x_d_a: [Mat3; 3],
}

/// Gradients for one convex: per-plane normal/offset gradients plus the
/// translation gradient. Planes outside every vertex triple stay at zero.
#[derive(Clone, Debug)]
pub struct ParamGradients {
    pub grad_normals: Vec<Vec3>,
    pub grad_offsets: Vec<f64>,
    pub grad_translation: Vec3,
}

impl ParamGradients {
    pub fn zeros(plane_count: usize) -> ParamGradients {
        ParamGradients {
            grad_normals: vec![Vec3::ZERO; plane_count],
            grad_offsets: vec![0.0; plane_count],
            grad_translation: Vec3::ZERO,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.grad_translation.is_finite()
            && self.grad_normals.iter().all(|g| g.is_finite())
            && self.grad_offsets.iter().all(|g| g.is_finite())
    }
}

/// Closed-form Jacobian of `solve_vertex` at a solved position `x`.
pub fn vertex_jacobian(
    p1: &Hyperplane,
    p2: &Hyperplane,
    p3: &Hyperplane,
    x: Vec3,
) -> Result<VertexJacobian, DiffError> {
    let (_, inv) = solve_with_inverse(p1, p2, p3).map_err(|_| DiffError::IllConditioned)?;
    let cols = inv.transpose().rows; // column i of A^-1
    let block = |i: usize| {
        let c = cols[i];
        Mat3::from_rows(-c.x * x, -c.y * x, -c.z * x)
    };
    Ok(VertexJacobian {
        d_x_d_b: inv,
        d_x_d_a: [block(0), block(1), block(2)],
    })
}

/// Accumulates world-frame per-vertex gradients into per-plane and
/// translation gradients. `vertex_grads` is aligned with
/// `topology.vertices`; each vertex contributes through its canonical triple
/// only:
///
/// * `grad_b[triple[i]] += (A^-T g)_i`
/// * `grad_a[triple[i]] += -(A^-T g)_i * x`
/// * `grad_t += g`
pub fn backprop_vertices(
    topology: &PolytopeTopology,
    poly: &ConvexPolyhedron,
    vertex_grads: &[Vec3],
) -> Result<ParamGradients, DiffError> {
    if vertex_grads.len() != topology.vertices.len() {
        return Err(DiffError::ShapeMismatch {
            expected: topology.vertices.len(),
            got: vertex_grads.len(),
        });
    }
    let mut out = ParamGradients::zeros(poly.planes.len());
    for (rec, &g) in topology.vertices.iter().zip(vertex_grads) {
        out.grad_translation += g;
        if g == Vec3::ZERO {
            continue;
        }
        let [i, j, k] = rec.plane_ids;
        let (_, inv) = solve_with_inverse(&poly.planes[i], &poly.planes[j], &poly.planes[k])
            .map_err(|_| DiffError::IllConditioned)?;
        let w = inv.transpose().mul_vec(g); // A^-T g
        let x = rec.position;
        out.grad_offsets[i] += w.x;
        out.grad_offsets[j] += w.y;
        out.grad_offsets[k] += w.z;
        out.grad_normals[i] += x * -w.x;
        out.grad_normals[j] += x * -w.y;
        out.grad_normals[k] += x * -w.z;
    }
    Ok(out)
}
