//! Camera projection, a hard z-buffer rasterizer (target generation and
//! evaluation) and a soft differentiable silhouette rasterizer.
//!
//! The soft pass assigns each triangle a coverage probability
//! `D = sigmoid(s * d^2 / sigma)` from the screen-space distance `d` to its
//! boundary (`s` = +1 inside, -1 outside) and unions all triangles of all
//! convexes as `1 - prod(1 - D)`. The union of convexes therefore never
//! needs explicit geometric handling; the hard pass resolves it through the
//! z-test instead. As sigma -> 0 the soft silhouette converges to the hard
//! one.

use thiserror::Error;

use crate::math::{vec3, Mat3, Vec3};
use crate::polytope::Mesh;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum RenderError {
    #[error("point is behind the camera")]
    BehindCamera,
    #[error("image shape mismatch: expected {expected_w}x{expected_h}, got {got_w}x{got_h}")]
    ShapeMismatch {
        expected_w: usize,
        expected_h: usize,
        got_w: usize,
        got_h: usize,
    },
}

/// Pinhole camera. Pixel (0,0) is the top-left corner; depth is measured
/// along the view axis.
#[derive(Clone, Debug)]
pub struct Camera {
    pub position: Vec3,
    pub look_at: Vec3,
    pub up: Vec3,
    /// Vertical field of view in radians.
    pub fov_y: f64,
    pub width: usize,
    pub height: usize,
    pub near: f64,
    pub far: f64,
}

impl Camera {
    pub fn new(
        position: Vec3,
        look_at: Vec3,
        up: Vec3,
        fov_y: f64,
        width: usize,
        height: usize,
    ) -> Camera {
        Camera {
            position,
            look_at,
            up,
            fov_y,
            width,
            height,
            near: 1e-3,
            far: 1e9,
        }
    }

    /// Orthonormal view basis (right, up, forward).
    pub fn basis(&self) -> (Vec3, Vec3, Vec3) {
        let forward = (self.look_at - self.position).normalized();
        let right = forward.cross(self.up).normalized();
        let up = right.cross(forward);
        (right, up, forward)
    }

    pub fn focal_px(&self) -> f64 {
        (self.height as f64 / 2.0) / (self.fov_y / 2.0).tan()
    }
}

/// Projects a world point to (screen x, screen y, depth along view axis).
pub fn project(camera: &Camera, p: Vec3) -> Result<(f64, f64, f64), RenderError> {
    let (right, up, forward) = camera.basis();
    let d = p - camera.position;
    let z = d.dot(forward);
    if z <= camera.near {
        return Err(RenderError::BehindCamera);
    }
    let f = camera.focal_px();
    let sx = camera.width as f64 / 2.0 + f * d.dot(right) / z;
    let sy = camera.height as f64 / 2.0 - f * d.dot(up) / z;
    Ok((sx, sy, z))
}

/// Grayscale image; silhouettes live in [0,1], depth in scene units.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn zeros(width: usize, height: usize) -> Image {
        Image::constant(width, height, 0.0)
    }

    pub fn constant(width: usize, height: usize, v: f64) -> Image {
        Image {
            width,
            height,
            data: vec![v; width * height],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }
}

/// One supervision view: camera plus its target silhouette.
#[derive(Clone, Debug)]
pub struct RenderTarget {
    pub camera: Camera,
    pub silhouette: Image,
}

/// Soft rasterizer settings.
#[derive(Clone, Copy, Debug)]
pub struct SoftRasterConfig {
    /// Screen-space falloff of the coverage sigmoid, in squared pixels.
    pub sigma: f64,
    /// Log-odds magnitude beyond which coverage is treated as fully
    /// saturated (contribution exactly 0 or 1).
    pub cutoff: f64,
}

impl SoftRasterConfig {
    pub fn with_sigma(sigma: f64) -> SoftRasterConfig {
        SoftRasterConfig {
            sigma,
            cutoff: 25.0,
        }
    }

    /// Pixels farther than this from a triangle cannot contribute; used to
    /// inflate per-triangle bounding boxes.
    fn reach_px(&self) -> f64 {
        4.0 * self.sigma.sqrt()
    }
}

// ---------------------------------------------------------------------------
// Hard rasterization
// ---------------------------------------------------------------------------

/// Binary-coverage z-buffer rasterization of the union of all meshes.
/// Returns (silhouette, depth); background depth is `camera.far`. Triangles
/// with a vertex behind the near plane are skipped (cameras are expected to
/// sit outside the scene).
pub fn raster_hard(meshes: &[Mesh], camera: &Camera) -> (Image, Image) {
    let mut sil = Image::zeros(camera.width, camera.height);
    let mut depth = Image::constant(camera.width, camera.height, camera.far);
    for mesh in meshes {
        for t in 0..mesh.triangles.len() {
            let corners = mesh.triangle_corners(t);
            let Some(screen) = project_triangle(camera, &corners) else {
                continue;
            };
            let [(x0, y0, z0), (x1, y1, z1), (x2, y2, z2)] = screen;
            let area2 = cross2(x1 - x0, y1 - y0, x2 - x0, y2 - y0);
            if area2 == 0.0 {
                continue;
            }
            let (px0, px1, py0, py1) = pixel_bounds(
                camera,
                x0.min(x1).min(x2),
                x0.max(x1).max(x2),
                y0.min(y1).min(y2),
                y0.max(y1).max(y2),
                0.0,
            );
            for py in py0..py1 {
                let qy = py as f64 + 0.5;
                for px in px0..px1 {
                    let qx = px as f64 + 0.5;
                    let e0 = cross2(x2 - x1, y2 - y1, qx - x1, qy - y1);
                    let e1 = cross2(x0 - x2, y0 - y2, qx - x2, qy - y2);
                    let e2 = cross2(x1 - x0, y1 - y0, qx - x0, qy - y0);
                    let l0 = e0 / area2;
                    let l1 = e1 / area2;
                    let l2 = e2 / area2;
                    if l0 < 0.0 || l1 < 0.0 || l2 < 0.0 {
                        continue;
                    }
                    // Perspective-correct view-axis depth via 1/z.
                    let inv_z = l0 / z0 + l1 / z1 + l2 / z2;
                    let d = 1.0 / inv_z;
                    let idx = py * camera.width + px;
                    if d < depth.data[idx] {
                        depth.data[idx] = d;
                        sil.data[idx] = 1.0;
                    }
                }
            }
        }
    }
    (sil, depth)
}

fn project_triangle(camera: &Camera, corners: &[Vec3; 3]) -> Option<[(f64, f64, f64); 3]> {
    let a = project(camera, corners[0]).ok()?;
    let b = project(camera, corners[1]).ok()?;
    let c = project(camera, corners[2]).ok()?;
    Some([a, b, c])
}

fn cross2(ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    ax * by - ay * bx
}

/// Pixel range whose centers fall within the inflated screen bounds.
fn pixel_bounds(
    camera: &Camera,
    min_x: f64,
    max_x: f64,
    min_y: f64,
    max_y: f64,
    inflate: f64,
) -> (usize, usize, usize, usize) {
    let px0 = ((min_x - inflate - 0.5).ceil().max(0.0)) as usize;
    let px1 = (((max_x + inflate - 0.5).floor() + 1.0).clamp(0.0, camera.width as f64)) as usize;
    let py0 = ((min_y - inflate - 0.5).ceil().max(0.0)) as usize;
    let py1 = (((max_y + inflate - 0.5).floor() + 1.0).clamp(0.0, camera.height as f64)) as usize;
    (px0, px1.max(px0), py0, py1.max(py0))
}

// ---------------------------------------------------------------------------
// Soft rasterization
// ---------------------------------------------------------------------------

struct TapeTri {
    mesh: u32,
    vids: [u32; 3],
}

struct Contrib {
    pixel: u32,
    tri: u32,
    coverage: f64,
    sign: f64,
    /// Nearest boundary edge (0..3), its clamp parameter and the pixel
    /// offset from the closest boundary point, recorded so the backward
    /// pass does not re-derive them.
    edge: u32,
    t: f64,
    dx: f64,
    dy: f64,
}

/// Forward-pass bookkeeping consumed by the backward pass.
pub struct SoftTape {
    prod: Vec<f64>,
    saturated: Vec<bool>,
    contribs: Vec<Contrib>,
    tris: Vec<TapeTri>,
}

/// Differentiable soft silhouette of the union of all meshes.
pub fn raster_soft(meshes: &[Mesh], camera: &Camera, cfg: &SoftRasterConfig) -> Image {
    raster_soft_forward(meshes, camera, cfg).0
}

/// Soft forward pass returning the tape for a subsequent
/// [`backward_from_tape`]; use this to avoid rendering twice per step.
pub fn raster_soft_forward(
    meshes: &[Mesh],
    camera: &Camera,
    cfg: &SoftRasterConfig,
) -> (Image, SoftTape) {
    let npix = camera.width * camera.height;
    let mut tape = SoftTape {
        prod: vec![1.0; npix],
        saturated: vec![false; npix],
        contribs: Vec::new(),
        tris: Vec::new(),
    };
    let reach = cfg.reach_px();
    for (mi, mesh) in meshes.iter().enumerate() {
        for t in 0..mesh.triangles.len() {
            let corners = mesh.triangle_corners(t);
            let Some(screen) = project_triangle(camera, &corners) else {
                continue;
            };
            let s: [(f64, f64); 3] = [
                (screen[0].0, screen[0].1),
                (screen[1].0, screen[1].1),
                (screen[2].0, screen[2].1),
            ];
            let area2 = cross2(s[1].0 - s[0].0, s[1].1 - s[0].1, s[2].0 - s[0].0, s[2].1 - s[0].1);
            if area2 == 0.0 {
                continue;
            }
            let orient = area2.signum();
            let (px0, px1, py0, py1) = pixel_bounds(
                camera,
                s[0].0.min(s[1].0).min(s[2].0),
                s[0].0.max(s[1].0).max(s[2].0),
                s[0].1.min(s[1].1).min(s[2].1),
                s[0].1.max(s[1].1).max(s[2].1),
                reach,
            );
            if px0 >= px1 || py0 >= py1 {
                continue;
            }
            let tri_idx = tape.tris.len() as u32;
            let mut used = false;

            // Inward-positive unit line functions d_i(q) = nx*qx + ny*qy + c
            // per edge, plus the raw segments for exact distances.
            let mut edges = [(0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64); 3];
            let mut lines = [(0.0f64, 0.0f64, 0.0f64); 3];
            for i in 0..3 {
                let (ax, ay) = s[i];
                let (bx, by) = s[(i + 1) % 3];
                let len = ((bx - ax) * (bx - ax) + (by - ay) * (by - ay))
                    .sqrt()
                    .max(f64::MIN_POSITIVE);
                edges[i] = (ax, ay, bx, by, len);
                lines[i] = (
                    orient * -(by - ay) / len,
                    orient * (bx - ax) / len,
                    orient * ((by - ay) * ax - (bx - ax) * ay) / len,
                );
            }

            for py in py0..py1 {
                let qy = py as f64 + 0.5;
                // Row intervals: candidate = {d_i > -reach for all i},
                // deep = {d_i >= reach for all i}. Both are intersections of
                // half-lines, so plain intervals; a 1 px conservative slack
                // leaves borderline pixels to the exact per-pixel test.
                let row_lo = px0 as f64 + 0.5;
                let row_hi = (px1 - 1) as f64 + 0.5;
                let (mut cand_lo, mut cand_hi) = (row_lo, row_hi);
                let (mut deep_lo, mut deep_hi) = (row_lo, row_hi);
                for &(nx, ny, c) in &lines {
                    let e = ny * qy + c;
                    if nx > 1e-12 {
                        cand_lo = cand_lo.max((-reach - e) / nx);
                        deep_lo = deep_lo.max((reach - e) / nx);
                    } else if nx < -1e-12 {
                        cand_hi = cand_hi.min((-reach - e) / nx);
                        deep_hi = deep_hi.min((reach - e) / nx);
                    } else {
                        if e <= -reach {
                            cand_hi = f64::NEG_INFINITY;
                        }
                        if e < reach {
                            deep_hi = f64::NEG_INFINITY;
                        }
                    }
                }
                if cand_hi < cand_lo {
                    continue;
                }
                let cand_px0 = ((cand_lo - 1.5).floor().max(px0 as f64)) as usize;
                let cand_px1 = (((cand_hi + 1.5).ceil() + 1.0).min(px1 as f64)) as usize;
                // Shrink the deep interval; it may be empty.
                let deep_px0 = ((deep_lo + 0.5).ceil().max(cand_px0 as f64)) as usize;
                let deep_px1 = ((deep_hi - 0.5).floor() + 1.0).max(deep_px0 as f64) as usize;
                let deep_px1 = deep_px1.min(cand_px1);
                let have_deep = deep_px0 < deep_px1;

                if have_deep {
                    let row = py * camera.width;
                    for idx in row + deep_px0..row + deep_px1 {
                        tape.saturated[idx] = true;
                    }
                }
                let band_ranges = if have_deep {
                    [(cand_px0, deep_px0), (deep_px1, cand_px1)]
                } else {
                    [(cand_px0, cand_px1), (0, 0)]
                };
                for (b0, b1) in band_ranges {
                    for px in b0..b1 {
                        let qx = px as f64 + 0.5;
                        let mut min_line = f64::INFINITY;
                        for &(nx, ny, c) in &lines {
                            min_line = min_line.min(nx * qx + ny * qy + c);
                        }
                        let idx = py * camera.width + px;
                        if min_line >= reach {
                            // Deep inside: coverage saturates to 1.
                            tape.saturated[idx] = true;
                            continue;
                        }
                        if min_line <= -reach {
                            continue;
                        }
                        // Near the boundary: exact squared distance to it.
                        let (d2, edge, t) = boundary_distance(&edges, qx, qy);
                        let sign = if min_line >= 0.0 { 1.0 } else { -1.0 };
                        let u = sign * d2 / cfg.sigma;
                        if u >= cfg.cutoff {
                            tape.saturated[idx] = true;
                            continue;
                        }
                        if u <= -cfg.cutoff {
                            continue;
                        }
                        let (ax, ay, bx, by, _) = edges[edge];
                        let cx = ax + t * (bx - ax);
                        let cy = ay + t * (by - ay);
                        let coverage = 1.0 / (1.0 + (-u).exp());
                        tape.prod[idx] *= 1.0 - coverage;
                        tape.contribs.push(Contrib {
                            pixel: idx as u32,
                            tri: tri_idx,
                            coverage,
                            sign,
                            edge: edge as u32,
                            t,
                            dx: qx - cx,
                            dy: qy - cy,
                        });
                        used = true;
                    }
                }
            }
            if used {
                tape.tris.push(TapeTri {
                    mesh: mi as u32,
                    vids: [
                        mesh.triangles[t][0] as u32,
                        mesh.triangles[t][1] as u32,
                        mesh.triangles[t][2] as u32,
                    ],
                });
            }
        }
    }
    let mut img = Image::zeros(camera.width, camera.height);
    for i in 0..npix {
        img.data[i] = if tape.saturated[i] {
            1.0
        } else {
            1.0 - tape.prod[i]
        };
    }
    (img, tape)
}

/// Squared distance from (qx,qy) to the triangle boundary; returns
/// (d^2, argmin edge, clamp parameter t).
fn boundary_distance(edges: &[(f64, f64, f64, f64, f64); 3], qx: f64, qy: f64) -> (f64, usize, f64) {
    let mut best = f64::INFINITY;
    let mut best_edge = 0;
    let mut best_t = 0.0;
    for (i, &(ax, ay, bx, by, _)) in edges.iter().enumerate() {
        let ex = bx - ax;
        let ey = by - ay;
        let len2 = (ex * ex + ey * ey).max(f64::MIN_POSITIVE);
        let t = (((qx - ax) * ex + (qy - ay) * ey) / len2).clamp(0.0, 1.0);
        let dx = qx - (ax + t * ex);
        let dy = qy - (ay + t * ey);
        let d2 = dx * dx + dy * dy;
        if d2 < best {
            best = d2;
            best_edge = i;
            best_t = t;
        }
    }
    (best, best_edge, best_t)
}

/// Backpropagates image-space gradients through the soft rasterizer to
/// world-space gradients per mesh vertex. Rebuilds the forward tape; when the
/// forward image is also needed, use [`raster_soft_forward`] +
/// [`backward_from_tape`] instead.
pub fn raster_soft_backward(
    meshes: &[Mesh],
    camera: &Camera,
    cfg: &SoftRasterConfig,
    pixel_grads: &Image,
) -> Result<Vec<Vec<Vec3>>, RenderError> {
    let (_, tape) = raster_soft_forward(meshes, camera, cfg);
    backward_from_tape(meshes, camera, cfg, &tape, pixel_grads)
}

pub fn backward_from_tape(
    meshes: &[Mesh],
    camera: &Camera,
    cfg: &SoftRasterConfig,
    tape: &SoftTape,
    pixel_grads: &Image,
) -> Result<Vec<Vec<Vec3>>, RenderError> {
    if pixel_grads.width != camera.width || pixel_grads.height != camera.height {
        return Err(RenderError::ShapeMismatch {
            expected_w: camera.width,
            expected_h: camera.height,
            got_w: pixel_grads.width,
            got_h: pixel_grads.height,
        });
    }
    let mut out: Vec<Vec<Vec3>> = meshes
        .iter()
        .map(|m| vec![Vec3::ZERO; m.vertices.len()])
        .collect();
    let (right, up, forward) = camera.basis();
    let f = camera.focal_px();

    for c in &tape.contribs {
        let idx = c.pixel as usize;
        // Saturated pixels are pinned at 1: no gradient flows.
        if tape.saturated[idx] {
            continue;
        }
        let g = pixel_grads.data[idx];
        if g == 0.0 {
            continue;
        }
        let tri = &tape.tris[c.tri as usize];
        let ei = c.edge as usize;
        let t = c.t;
        let diff = (c.dx, c.dy);

        // d(pixel)/dD = prod over the other triangles; dD/du = D(1-D).
        let dpix_dcov = tape.prod[idx] / (1.0 - c.coverage);
        let dcov_du = c.coverage * (1.0 - c.coverage);
        let common = g * dpix_dcov * dcov_du * (c.sign / cfg.sigma);

        // Envelope theorem: treat t as fixed at the optimum.
        // dd2/da = -2(1-t) diff, dd2/db = -2t diff.
        let ga = (-2.0 * (1.0 - t) * common * diff.0, -2.0 * (1.0 - t) * common * diff.1);
        let gb = (-2.0 * t * common * diff.0, -2.0 * t * common * diff.1);

        let va = tri.vids[ei] as usize;
        let vb = tri.vids[(ei + 1) % 3] as usize;
        let mesh = &meshes[tri.mesh as usize];
        for (vid, (gsx, gsy)) in [(va, ga), (vb, gb)] {
            let p = mesh.vertices[vid].position;
            let d = p - camera.position;
            let z = d.dot(forward);
            let xc = d.dot(right);
            let yc = d.dot(up);
            // Jacobian of the pinhole projection.
            let dsx_dp = (right * z - forward * xc) * (f / (z * z));
            let dsy_dp = (up * z - forward * yc) * (-f / (z * z));
            out[tri.mesh as usize][vid] += dsx_dp * gsx + dsy_dp * gsy;
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Image loss
// ---------------------------------------------------------------------------

/// Mean absolute difference and its subgradient (sign(r - t) / N, zero at
/// equality).
pub fn image_l1(rendered: &Image, target: &Image) -> Result<(f64, Image), RenderError> {
    if rendered.width != target.width || rendered.height != target.height {
        return Err(RenderError::ShapeMismatch {
            expected_w: target.width,
            expected_h: target.height,
            got_w: rendered.width,
            got_h: rendered.height,
        });
    }
    let n = rendered.data.len() as f64;
    let mut grads = Image::zeros(rendered.width, rendered.height);
    let mut loss = 0.0;
    for (i, (&r, &t)) in rendered.data.iter().zip(&target.data).enumerate() {
        let d = r - t;
        loss += d.abs();
        grads.data[i] = if d > 0.0 {
            1.0 / n
        } else if d < 0.0 {
            -1.0 / n
        } else {
            0.0
        };
    }
    Ok((loss / n, grads))
}

// ---------------------------------------------------------------------------
// View placement
// ---------------------------------------------------------------------------

/// Near-uniform directions on the unit sphere.
pub fn fibonacci_directions(n: usize) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - (2.0 * k as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * k as f64;
            vec3(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}

/// Cameras on a Fibonacci sphere of the given radius, all looking at the
/// origin. A seeded random rotation decorrelates view placement across
/// seeds while staying deterministic.
pub fn orbit_cameras(
    n: usize,
    radius: f64,
    fov_y: f64,
    width: usize,
    height: usize,
    seed: u64,
) -> Vec<Camera> {
    let mut rng = crate::rng::Rng::new(seed);
    let rot = Mat3::rotation(rng.unit_vector(), rng.range(0.0, std::f64::consts::TAU));
    fibonacci_directions(n)
        .into_iter()
        .map(|dir| {
            let d = rot.mul_vec(dir);
            // Pick an up vector not parallel to the view direction.
            let up = if d.z.abs() > 0.9 {
                vec3(0.0, 1.0, 0.0)
            } else {
                vec3(0.0, 0.0, 1.0)
            };
            Camera::new(d * radius, Vec3::ZERO, up, fov_y, width, height)
        })
        .collect()
}
