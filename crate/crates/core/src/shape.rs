//! Axis-aligned cuboid primitives and the frames that bound them.
//!
//! Conventions: width runs along x, height along y, depth along z. A cuboid
//! is stored as `dims` (width, height, depth) and `center`.

use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Serialized as a `[x, y, z]` array.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub const fn splat(v: f64) -> Self {
        Vec3 { x: v, y: v, z: v }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn get(self, axis: usize) -> f64 {
        match axis {
            0 => self.x,
            1 => self.y,
            2 => self.z,
            _ => panic!("axis out of range: {axis}"),
        }
    }

    pub fn set(&mut self, axis: usize, v: f64) {
        match axis {
            0 => self.x = v,
            1 => self.y = v,
            2 => self.z = v,
            _ => panic!("axis out of range: {axis}"),
        }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    pub fn mul_elem(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x * o.x, self.y * o.y, self.z * o.z)
    }

    pub fn div_elem(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x / o.x, self.y / o.y, self.z / o.z)
    }

    pub fn min(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn max(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn abs(self) -> Vec3 {
        Vec3::new(self.x.abs(), self.y.abs(), self.z.abs())
    }

    pub fn max_elem(self) -> f64 {
        self.x.max(self.y).max(self.z)
    }

    pub fn min_elem(self) -> f64 {
        self.x.min(self.y).min(self.z)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn all_positive(self) -> bool {
        self.x > 0.0 && self.y > 0.0 && self.z > 0.0
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::from_array(a)
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        v.to_array()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// An axis-aligned box given by its center and extents.
pub trait AxisBox {
    fn center(&self) -> Vec3;
    fn dims(&self) -> Vec3;

    fn min_corner(&self) -> Vec3 {
        self.center() - self.dims() * 0.5
    }

    fn max_corner(&self) -> Vec3 {
        self.center() + self.dims() * 0.5
    }

    /// The 8 corners, indexed by bit pattern (bit 0 = x max, bit 1 = y max, bit 2 = z max).
    fn corners(&self) -> [Vec3; 8] {
        let lo = self.min_corner();
        let hi = self.max_corner();
        let mut out = [Vec3::ZERO; 8];
        for (i, c) in out.iter_mut().enumerate() {
            *c = Vec3::new(
                if i & 1 == 0 { lo.x } else { hi.x },
                if i & 2 == 0 { lo.y } else { hi.y },
                if i & 4 == 0 { lo.z } else { hi.z },
            );
        }
        out
    }

    /// Closed containment test.
    fn contains(&self, p: Vec3) -> bool {
        let lo = self.min_corner();
        let hi = self.max_corner();
        (lo.x..=hi.x).contains(&p.x) && (lo.y..=hi.y).contains(&p.y) && (lo.z..=hi.z).contains(&p.z)
    }

    /// Euclidean distance from `p` to the box; zero inside.
    fn outside_distance(&self, p: Vec3) -> f64 {
        let d = (p - self.center()).abs() - self.dims() * 0.5;
        d.max(Vec3::ZERO).norm()
    }

    /// Unsigned distance from `p` to the box surface, measured from within for interior points.
    fn surface_distance(&self, p: Vec3) -> f64 {
        let d = (p - self.center()).abs() - self.dims() * 0.5;
        if d.x <= 0.0 && d.y <= 0.0 && d.z <= 0.0 {
            -d.max_elem()
        } else {
            d.max(Vec3::ZERO).norm()
        }
    }

    fn volume(&self) -> f64 {
        let d = self.dims();
        d.x * d.y * d.z
    }

    fn surface_area(&self) -> f64 {
        let d = self.dims();
        2.0 * (d.x * d.y + d.y * d.z + d.x * d.z)
    }
}

/// Local bounding volume handed to every abstraction function as its first argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoordFrame {
    pub center: Vec3,
    pub dims: Vec3,
}

impl CoordFrame {
    pub fn new(center: Vec3, dims: Vec3) -> Self {
        CoordFrame { center, dims }
    }

    /// Build from the six-number literal order used in programs: w, h, d, x, y, z.
    pub fn from_whd_xyz(v: [f64; 6]) -> Self {
        CoordFrame {
            dims: Vec3::new(v[0], v[1], v[2]),
            center: Vec3::new(v[3], v[4], v[5]),
        }
    }

    pub fn to_whd_xyz(&self) -> [f64; 6] {
        [
            self.dims.x,
            self.dims.y,
            self.dims.z,
            self.center.x,
            self.center.y,
            self.center.z,
        ]
    }

    pub fn from_min_max(lo: Vec3, hi: Vec3) -> Self {
        CoordFrame {
            center: (lo + hi) * 0.5,
            dims: hi - lo,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.center.is_finite() && self.dims.is_finite() && self.dims.all_positive()
    }

    pub fn diagonal(&self) -> f64 {
        self.dims.norm()
    }
}

impl AxisBox for CoordFrame {
    fn center(&self) -> Vec3 {
        self.center
    }
    fn dims(&self) -> Vec3 {
        self.dims
    }
}

/// An axis-aligned cuboid primitive with an optional semantic label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Part {
    #[serde(default)]
    pub label: String,
    pub dims: Vec3,
    pub center: Vec3,
}

impl Part {
    pub fn new(label: impl Into<String>, dims: Vec3, center: Vec3) -> Self {
        Part {
            label: label.into(),
            dims,
            center,
        }
    }

    pub fn unlabeled(dims: Vec3, center: Vec3) -> Self {
        Part::new("", dims, center)
    }

    pub fn from_frame(frame: &CoordFrame, label: impl Into<String>) -> Self {
        Part::new(label, frame.dims, frame.center)
    }

    pub fn frame(&self) -> CoordFrame {
        CoordFrame::new(self.center, self.dims)
    }

    pub fn is_valid(&self) -> bool {
        self.center.is_finite() && self.dims.is_finite() && self.dims.all_positive()
    }
}

impl AxisBox for Part {
    fn center(&self) -> Vec3 {
        self.center
    }
    fn dims(&self) -> Vec3 {
        self.dims
    }
}

/// Tight axis-aligned bounds of a set of boxes, or `None` when empty.
pub fn bounds_of<B: AxisBox>(boxes: &[B]) -> Option<(Vec3, Vec3)> {
    let mut it = boxes.iter();
    let first = it.next()?;
    let mut lo = first.min_corner();
    let mut hi = first.max_corner();
    for b in it {
        lo = lo.min(b.min_corner());
        hi = hi.max(b.max_corner());
    }
    Some((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corners_span_box() {
        let p = Part::unlabeled(Vec3::new(2.0, 1.0, 1.0), Vec3::ZERO);
        let c = p.corners();
        assert_eq!(c[0], Vec3::new(-1.0, -0.5, -0.5));
        assert_eq!(c[7], Vec3::new(1.0, 0.5, 0.5));
    }

    #[test]
    fn surface_distance_inside_and_out() {
        let p = Part::unlabeled(Vec3::splat(2.0), Vec3::ZERO);
        assert!((p.surface_distance(Vec3::ZERO) - 1.0).abs() < 1e-12);
        assert!((p.surface_distance(Vec3::new(0.5, 0.0, 0.0)) - 0.5).abs() < 1e-12);
        assert!((p.surface_distance(Vec3::new(2.0, 0.0, 0.0)) - 1.0).abs() < 1e-12);
        assert_eq!(p.outside_distance(Vec3::new(0.5, 0.2, 0.0)), 0.0);
        let corner_gap = p.surface_distance(Vec3::new(2.0, 2.0, 1.0));
        assert!((corner_gap - 2f64.sqrt()).abs() < 1e-12);
    }
}
