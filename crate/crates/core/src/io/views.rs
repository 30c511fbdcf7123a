//! Target-view generation and the plain-text camera manifest.
//!
//! Manifest format: one camera per line, twelve whitespace-separated
//! numbers: position (3), look-at (3), up (3), vertical fov in radians,
//! image width, image height.

use thiserror::Error;

use crate::math::vec3;
use crate::polytope::Mesh;
use crate::render::{orbit_cameras, raster_hard, Camera, Image};

#[derive(Error, Debug, Clone, PartialEq)]
#[error("camera manifest line {line}: {message}")]
pub struct ManifestError {
    pub line: usize,
    pub message: String,
}

const DEFAULT_FOV: f64 = std::f64::consts::FRAC_PI_3;

/// Places `n_views` cameras on a Fibonacci sphere at 2.5x the mesh bounding
/// radius, looking at the origin, and renders hard silhouettes.
/// Deterministic in `seed`.
pub fn gen_views(
    mesh: &Mesh,
    n_views: usize,
    width: usize,
    height: usize,
    seed: u64,
) -> (Vec<Camera>, Vec<Image>) {
    let bounding_radius = mesh
        .positions()
        .map(|p| p.norm())
        .fold(0.0f64, f64::max)
        .max(1e-6);
    let cameras = orbit_cameras(n_views, 2.5 * bounding_radius, DEFAULT_FOV, width, height, seed);
    let meshes = std::slice::from_ref(mesh);
    let images = cameras
        .iter()
        .map(|cam| raster_hard(meshes, cam).0)
        .collect();
    (cameras, images)
}

pub fn write_camera_manifest(cameras: &[Camera]) -> String {
    let mut out = String::new();
    for c in cameras {
        out.push_str(&format!(
            "{} {} {} {} {} {} {} {} {} {} {} {}\n",
            c.position.x,
            c.position.y,
            c.position.z,
            c.look_at.x,
            c.look_at.y,
            c.look_at.z,
            c.up.x,
            c.up.y,
            c.up.z,
            c.fov_y,
            c.width,
            c.height
        ));
    }
    out
}

pub fn parse_camera_manifest(text: &str) -> Result<Vec<Camera>, ManifestError> {
    let mut cameras = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        if tokens.len() != 12 {
            return Err(ManifestError {
                line,
                message: format!("expected 12 fields, got {}", tokens.len()),
            });
        }
        let num = |i: usize| -> Result<f64, ManifestError> {
            tokens[i].parse().map_err(|_| ManifestError {
                line,
                message: format!("bad number '{}'", tokens[i]),
            })
        };
        let dim = |i: usize| -> Result<usize, ManifestError> {
            tokens[i].parse().map_err(|_| ManifestError {
                line,
                message: format!("bad dimension '{}'", tokens[i]),
            })
        };
        let camera = Camera::new(
            vec3(num(0)?, num(1)?, num(2)?),
            vec3(num(3)?, num(4)?, num(5)?),
            vec3(num(6)?, num(7)?, num(8)?),
            num(9)?,
            dim(10)?,
            dim(11)?,
        );
        if camera.position == camera.look_at {
            return Err(ManifestError {
                line,
                message: "camera position equals its look-at point".into(),
            });
        }
        if !(camera.fov_y > 0.0 && camera.fov_y < std::f64::consts::PI) {
            return Err(ManifestError {
                line,
                message: format!("field of view {} outside (0, pi)", camera.fov_y),
            });
        }
        if camera.width == 0 || camera.height == 0 {
            return Err(ManifestError {
                line,
                message: "image dimensions must be at least 1x1".into(),
            });
        }
        cameras.push(camera);
    }
    Ok(cameras)
}
