//! Geometric measurement: corner matching, normalization, voxels, point clouds.

mod assignment;
pub mod io;
mod points;
mod voxel;

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::shape::{bounds_of, AxisBox, Part, Vec3};

pub use assignment::min_cost_assignment;
pub use points::{chamfer, fscore, sample_points, PointCloud};
pub use voxel::{iou, voxelize, VoxelGrid};

/// Matching threshold in unit-sphere coordinates.
pub const DEFAULT_TAU: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("geometry is empty")]
    EmptyGeometry,
    #[error("geometry has zero extent")]
    DegenerateExtent,
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("voxel grids differ in resolution or bounds")]
    GridMismatch,
    #[error("{0}")]
    Format(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for GeometryError {
    fn from(e: std::io::Error) -> Self {
        GeometryError::Io(e.to_string())
    }
}

/// A nonnegative error that may be infinite ("no acceptable match").
///
/// Serialized as a number, or `null` when infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "Option<f64>", into = "Option<f64>")]
pub enum ExtendedError {
    Finite(f64),
    Infinite,
}

impl ExtendedError {
    pub fn value(self) -> f64 {
        match self {
            ExtendedError::Finite(v) => v,
            ExtendedError::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedError::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedError::Finite(v) => Some(v),
            ExtendedError::Infinite => None,
        }
    }
}

impl From<f64> for ExtendedError {
    fn from(v: f64) -> Self {
        if v.is_finite() {
            ExtendedError::Finite(v)
        } else {
            ExtendedError::Infinite
        }
    }
}

impl From<Option<f64>> for ExtendedError {
    fn from(v: Option<f64>) -> Self {
        v.map_or(ExtendedError::Infinite, ExtendedError::from)
    }
}

impl From<ExtendedError> for Option<f64> {
    fn from(e: ExtendedError) -> Self {
        e.finite()
    }
}

impl PartialOrd for ExtendedError {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.value().partial_cmp(&other.value())
    }
}

impl fmt::Display for ExtendedError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedError::Finite(v) => write!(f, "{v}"),
            ExtendedError::Infinite => f.write_str("inf"),
        }
    }
}

fn directed_mmcd(a: &[Vec3; 8], b: &[Vec3; 8]) -> f64 {
    a.iter()
        .map(|p| {
            b.iter()
                .map(|q| p.distance(*q))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Symmetric max-min corner distance between two cuboids.
pub fn mmcd<A: AxisBox, B: AxisBox>(a: &A, b: &B) -> f64 {
    let ca = a.corners();
    let cb = b.corners();
    directed_mmcd(&ca, &cb).max(directed_mmcd(&cb, &ca))
}

/// One matched pair: (pred index, target index, mmcd).
pub type MatchPair = (usize, usize, f64);

/// Optimal one-to-one pairing of `pred` with `target` under mmcd cost.
/// `None` when the cardinalities differ.
pub fn match_parts(pred: &[Part], target: &[Part]) -> Option<Vec<MatchPair>> {
    if pred.len() != target.len() {
        return None;
    }
    let cost: Vec<Vec<f64>> = pred
        .iter()
        .map(|p| target.iter().map(|t| mmcd(p, t)).collect())
        .collect();
    let cols = min_cost_assignment(&cost);
    Some(
        cols.into_iter()
            .enumerate()
            .map(|(i, j)| (i, j, cost[i][j]))
            .collect(),
    )
}

/// Mean matched corner distance, infinite on a cardinality mismatch or when
/// any matched pair is farther apart than `tau`.
pub fn match_error(pred: &[Part], target: &[Part], tau: f64) -> ExtendedError {
    let Some(pairs) = match_parts(pred, target) else {
        return ExtendedError::Infinite;
    };
    if pairs.is_empty() {
        return ExtendedError::Finite(0.0);
    }
    if pairs.iter().any(|&(_, _, d)| d > tau) {
        return ExtendedError::Infinite;
    }
    let total: f64 = pairs.iter().map(|&(_, _, d)| d).sum();
    ExtendedError::Finite(total / pairs.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizeMode {
    /// Centered on the bounding-box center, all corners within radius 1.
    UnitSphere,
    /// Tight box fits `[-0.5, 0.5]` along its longest axis.
    UnitBox,
}

/// Uniform scale about a center: `p' = (p - center) * scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transform {
    pub center: Vec3,
    pub scale: f64,
}

impl Transform {
    pub const IDENTITY: Transform = Transform {
        center: Vec3::ZERO,
        scale: 1.0,
    };

    pub fn apply_point(&self, p: Vec3) -> Vec3 {
        (p - self.center) * self.scale
    }

    pub fn invert_point(&self, p: Vec3) -> Vec3 {
        p / self.scale + self.center
    }

    pub fn apply_part(&self, p: &Part) -> Part {
        Part::new(
            p.label.clone(),
            p.dims * self.scale,
            self.apply_point(p.center),
        )
    }

    pub fn invert_part(&self, p: &Part) -> Part {
        Part::new(
            p.label.clone(),
            p.dims / self.scale,
            self.invert_point(p.center),
        )
    }

    pub fn apply_parts(&self, parts: &[Part]) -> Vec<Part> {
        parts.iter().map(|p| self.apply_part(p)).collect()
    }

    pub fn invert_parts(&self, parts: &[Part]) -> Vec<Part> {
        parts.iter().map(|p| self.invert_part(p)).collect()
    }
}

fn transform_for<I: Iterator<Item = Vec3>>(
    lo: Vec3,
    hi: Vec3,
    points: I,
    mode: NormalizeMode,
) -> Result<Transform, GeometryError> {
    let center = (lo + hi) * 0.5;
    let size = match mode {
        NormalizeMode::UnitSphere => points.map(|p| p.distance(center)).fold(0.0, f64::max),
        NormalizeMode::UnitBox => (hi - lo).max_elem(),
    };
    if !(size > 0.0 && size.is_finite()) {
        return Err(GeometryError::DegenerateExtent);
    }
    Ok(Transform {
        center,
        scale: 1.0 / size,
    })
}

pub fn normalization_of_parts(
    parts: &[Part],
    mode: NormalizeMode,
) -> Result<Transform, GeometryError> {
    let (lo, hi) = bounds_of(parts).ok_or(GeometryError::EmptyGeometry)?;
    transform_for(lo, hi, parts.iter().flat_map(|p| p.corners()), mode)
}

pub fn normalize_parts(
    parts: &[Part],
    mode: NormalizeMode,
) -> Result<(Vec<Part>, Transform), GeometryError> {
    let t = normalization_of_parts(parts, mode)?;
    Ok((t.apply_parts(parts), t))
}

pub fn normalization_of_points(
    points: &[Vec3],
    mode: NormalizeMode,
) -> Result<Transform, GeometryError> {
    let first = *points.first().ok_or(GeometryError::EmptyGeometry)?;
    let (lo, hi) = points
        .iter()
        .fold((first, first), |(lo, hi), p| (lo.min(*p), hi.max(*p)));
    transform_for(lo, hi, points.iter().copied(), mode)
}

pub fn normalize_points(
    points: &[Vec3],
    mode: NormalizeMode,
) -> Result<(Vec<Vec3>, Transform), GeometryError> {
    let t = normalization_of_points(points, mode)?;
    Ok((points.iter().map(|p| t.apply_point(*p)).collect(), t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube(center: Vec3, dims: Vec3) -> Part {
        Part::unlabeled(dims, center)
    }

    // independent oracle: every corner pair, both directions
    fn mmcd_brute(a: &Part, b: &Part) -> f64 {
        let mut worst: f64 = 0.0;
        for (x, y) in [(a, b), (b, a)] {
            for p in x.corners() {
                let mut best = f64::INFINITY;
                for q in y.corners() {
                    let d =
                        ((p.x - q.x).powi(2) + (p.y - q.y).powi(2) + (p.z - q.z).powi(2)).sqrt();
                    best = best.min(d);
                }
                worst = worst.max(best);
            }
        }
        worst
    }

    #[test]
    fn mmcd_examples() {
        let unit = cube(Vec3::ZERO, Vec3::splat(1.0));
        assert_eq!(mmcd(&unit, &unit), 0.0);
        let shifted = cube(Vec3::new(0.1, 0.0, 0.0), Vec3::splat(1.0));
        assert!((mmcd(&unit, &shifted) - 0.1).abs() < 1e-12);
        assert!((mmcd_brute(&unit, &shifted) - 0.1).abs() < 1e-12);
        let wide = cube(Vec3::ZERO, Vec3::new(2.0, 1.0, 1.0));
        assert!((mmcd(&unit, &wide) - 0.5).abs() < 1e-12);
        assert_eq!(mmcd(&unit, &wide), mmcd_brute(&unit, &wide));
    }

    #[test]
    fn match_error_rules() {
        let a = cube(Vec3::ZERO, Vec3::splat(0.2));
        let b = cube(Vec3::new(0.5, 0.0, 0.0), Vec3::splat(0.3));
        let c = cube(Vec3::new(0.0, 0.5, 0.0), Vec3::splat(0.1));
        let set = vec![a.clone(), b.clone(), c.clone()];
        let shuffled = vec![c.clone(), a.clone(), b.clone()];
        assert_eq!(
            match_error(&set, &shuffled, DEFAULT_TAU),
            ExtendedError::Finite(0.0)
        );
        assert_eq!(
            match_error(&set[..2], &set, DEFAULT_TAU),
            ExtendedError::Infinite
        );

        let far = cube(Vec3::new(0.3, 0.0, 0.0), Vec3::splat(0.2));
        assert!((mmcd(&a, &far) - 0.3).abs() < 1e-12);
        assert_eq!(
            match_error(std::slice::from_ref(&a), std::slice::from_ref(&far), DEFAULT_TAU),
            ExtendedError::Infinite
        );
        assert_eq!(
            match_error(&[a], &[far], f64::INFINITY)
                .finite()
                .map(|v| (v * 1e9).round()),
            Some(3e8)
        );
        assert_eq!(
            match_error(&[], &[], DEFAULT_TAU),
            ExtendedError::Finite(0.0)
        );
    }

    #[test]
    fn extended_error_serializes_infinite_as_null() {
        assert_eq!(
            serde_json::to_string(&ExtendedError::Infinite).unwrap(),
            "null"
        );
        assert_eq!(
            serde_json::to_string(&ExtendedError::Finite(0.5)).unwrap(),
            "0.5"
        );
        let back: ExtendedError = serde_json::from_str("null").unwrap();
        assert_eq!(back, ExtendedError::Infinite);
    }

    #[test]
    fn unit_box_normalization() {
        let c = cube(Vec3::new(3.0, -1.0, 2.0), Vec3::splat(2.0));
        let (n, t) = normalize_parts(std::slice::from_ref(&c), NormalizeMode::UnitBox).unwrap();
        assert_eq!(n[0].dims, Vec3::splat(1.0));
        assert_eq!(n[0].center, Vec3::ZERO);
        let back = t.invert_parts(&n);
        assert!(back[0].center.distance(c.center) < 1e-9);
        assert!(back[0].dims.distance(c.dims) < 1e-9);

        let (_, again) = normalize_parts(&n, NormalizeMode::UnitBox).unwrap();
        assert_eq!(again, Transform::IDENTITY);
    }

    #[test]
    fn unit_sphere_normalization() {
        let parts = vec![
            cube(Vec3::new(5.0, 0.0, 0.0), Vec3::new(1.0, 2.0, 0.5)),
            cube(Vec3::new(7.0, 1.0, 0.0), Vec3::splat(0.5)),
        ];
        let (n, t) = normalize_parts(&parts, NormalizeMode::UnitSphere).unwrap();
        let r = n
            .iter()
            .flat_map(|p| p.corners())
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        assert!((r - 1.0).abs() < 1e-12);
        for (a, b) in t.invert_parts(&n).iter().zip(&parts) {
            assert!(a.center.distance(b.center) < 1e-9 && a.dims.distance(b.dims) < 1e-9);
        }
        assert_eq!(
            normalize_parts(&[], NormalizeMode::UnitSphere),
            Err(GeometryError::EmptyGeometry)
        );
        assert_eq!(
            normalize_points(&[Vec3::ZERO, Vec3::ZERO], NormalizeMode::UnitBox),
            Err(GeometryError::DegenerateExtent)
        );
    }
}
