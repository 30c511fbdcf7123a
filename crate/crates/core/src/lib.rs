//! Fits a union of convex polyhedra to multi-view silhouette images.
//!
//! Each convex is the intersection of halfspaces `a.x <= b` with `b > 0`, so
//! the local origin is always feasible. Construction maps planes to dual
//! points `a/b`, takes the dual convex hull (facets there are primal
//! vertices), re-solves each vertex from its three planes, and tessellates
//! facet loops into a triangle mesh. Only the three-plane solve is
//! differentiated; rendering a soft silhouette closes the loop from image
//! loss back to plane parameters.

pub mod diffgeom;
pub mod hull;
pub mod io;
pub mod math;
pub mod metrics;
pub mod optimize;
pub mod polytope;
pub mod render;
pub mod rng;

pub use math::{Aabb, Vec3};
pub use optimize::{fit, init_scene, Scene, Schedule};
pub use polytope::{ConvexPolyhedron, Hyperplane, Mesh};
pub use render::{Camera, Image, RenderTarget};
