//! Small fixed-size linear algebra used throughout the crate: `f64` 3-vectors,
//! 3x3 matrices and axis-aligned boxes. Everything is `Copy` and allocation-free.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

pub const fn vec3(x: f64, y: f64, z: f64) -> Vec3 {
    Vec3 { x, y, z }
}

impl Vec3 {
    pub const ZERO: Vec3 = vec3(0.0, 0.0, 0.0);

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        vec3(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn normalized(self) -> Vec3 {
        self / self.norm()
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    pub fn distance_squared(self, o: Vec3) -> f64 {
        (self - o).norm_squared()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn min_by_component(self, o: Vec3) -> Vec3 {
        vec3(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn max_by_component(self, o: Vec3) -> Vec3 {
        vec3(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn component(self, i: usize) -> f64 {
        match i {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        vec3(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        vec3(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl SubAssign for Vec3 {
    fn sub_assign(&mut self, o: Vec3) {
        *self = *self - o;
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        vec3(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        vec3(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        vec3(-self.x, -self.y, -self.z)
    }
}

/// Row-major 3x3 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat3 {
    pub rows: [Vec3; 3],
}

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3 {
        rows: [vec3(1.0, 0.0, 0.0), vec3(0.0, 1.0, 0.0), vec3(0.0, 0.0, 1.0)],
    };

    pub fn from_rows(r0: Vec3, r1: Vec3, r2: Vec3) -> Mat3 {
        Mat3 { rows: [r0, r1, r2] }
    }

    pub fn det(&self) -> f64 {
        self.rows[0].dot(self.rows[1].cross(self.rows[2]))
    }

    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        vec3(self.rows[0].dot(v), self.rows[1].dot(v), self.rows[2].dot(v))
    }

    pub fn transpose(&self) -> Mat3 {
        Mat3::from_rows(
            vec3(self.rows[0].x, self.rows[1].x, self.rows[2].x),
            vec3(self.rows[0].y, self.rows[1].y, self.rows[2].y),
            vec3(self.rows[0].z, self.rows[1].z, self.rows[2].z),
        )
    }

    /// Cofactor inverse; `None` when the determinant is exactly zero.
    pub fn inverse(&self) -> Option<Mat3> {
        let det = self.det();
        if det == 0.0 {
            return None;
        }
        let [a, b, c] = self.rows;
        // Columns of the inverse are the cross products of row pairs over det.
        let c0 = b.cross(c) / det;
        let c1 = c.cross(a) / det;
        let c2 = a.cross(b) / det;
        Some(Mat3::from_rows(
            vec3(c0.x, c1.x, c2.x),
            vec3(c0.y, c1.y, c2.y),
            vec3(c0.z, c1.z, c2.z),
        ))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.norm_squared())
            .sum::<f64>()
            .sqrt()
    }

    /// Rotation about a unit axis by `angle` radians (Rodrigues).
    pub fn rotation(axis: Vec3, angle: f64) -> Mat3 {
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        let (x, y, z) = (axis.x, axis.y, axis.z);
        Mat3::from_rows(
            vec3(t * x * x + c, t * x * y - s * z, t * x * z + s * y),
            vec3(t * x * y + s * z, t * y * y + c, t * y * z - s * x),
            vec3(t * x * z - s * y, t * y * z + s * x, t * z * z + c),
        )
    }
}

/// Axis-aligned bounding box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Aabb {
        Aabb { min, max }
    }

    /// Smallest box containing all points; `None` for an empty iterator.
    pub fn from_points<I: IntoIterator<Item = Vec3>>(points: I) -> Option<Aabb> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let mut bb = Aabb::new(first, first);
        for p in it {
            bb.min = bb.min.min_by_component(p);
            bb.max = bb.max.max_by_component(p);
        }
        Some(bb)
    }

    pub fn diagonal(&self) -> f64 {
        (self.max - self.min).norm()
    }

    pub fn volume(&self) -> f64 {
        let d = self.max - self.min;
        d.x.max(0.0) * d.y.max(0.0) * d.z.max(0.0)
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn contains(&self, p: Vec3) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_follows_right_hand_rule() {
        let c = vec3(1.0, 0.0, 0.0).cross(vec3(0.0, 1.0, 0.0));
        assert_eq!(c, vec3(0.0, 0.0, 1.0));
    }

    #[test]
    fn inverse_roundtrip() {
        let m = Mat3::from_rows(
            vec3(2.0, 1.0, 0.5),
            vec3(-1.0, 3.0, 0.2),
            vec3(0.3, -0.4, 1.7),
        );
        let inv = m.inverse().unwrap();
        let id = Mat3::from_rows(
            inv.mul_vec(m.rows[0]),
            inv.mul_vec(m.rows[1]),
            inv.mul_vec(m.rows[2]),
        );
        // m rows through inv give the transpose relation; check via product instead.
        let _ = id;
        for i in 0..3 {
            let e = vec3(
                (i == 0) as u8 as f64,
                (i == 1) as u8 as f64,
                (i == 2) as u8 as f64,
            );
            let x = inv.mul_vec(m.mul_vec(e));
            assert!((x - e).norm() < 1e-12);
        }
    }

    #[test]
    fn rotation_preserves_norm() {
        let r = Mat3::rotation(vec3(0.0, 0.0, 1.0), std::f64::consts::FRAC_PI_2);
        let v = r.mul_vec(vec3(1.0, 0.0, 0.0));
        assert!((v - vec3(0.0, 1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn aabb_from_points() {
        let bb = Aabb::from_points([vec3(1.0, 2.0, 3.0), vec3(-1.0, 5.0, 0.0)]).unwrap();
        assert_eq!(bb.min, vec3(-1.0, 2.0, 0.0));
        assert_eq!(bb.max, vec3(1.0, 5.0, 3.0));
    }
}
