use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::GeometryError;
use crate::shape::{AxisBox, Part, Vec3};

/// Occupancy over a `resolution³` grid spanning `[lo, hi]`.
///
/// Cell `(ix, iy, iz)` lives at `ix + res * (iy + res * iz)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoxelGrid {
    pub resolution: usize,
    pub lo: Vec3,
    pub hi: Vec3,
    pub occupancy: Vec<bool>,
}

impl VoxelGrid {
    pub fn empty(resolution: usize, lo: Vec3, hi: Vec3) -> Self {
        assert!(resolution >= 1, "voxel resolution must be at least 1");
        VoxelGrid {
            resolution,
            lo,
            hi,
            occupancy: vec![false; resolution.pow(3)],
        }
    }

    /// Default grid bounds for unit-box normalized geometry.
    pub fn unit_bounds() -> (Vec3, Vec3) {
        (Vec3::splat(-0.5), Vec3::splat(0.5))
    }

    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        ix + self.resolution * (iy + self.resolution * iz)
    }

    pub fn get(&self, ix: usize, iy: usize, iz: usize) -> bool {
        self.occupancy[self.index(ix, iy, iz)]
    }

    pub fn cell_size(&self) -> Vec3 {
        (self.hi - self.lo) / self.resolution as f64
    }

    pub fn cell_center(&self, ix: usize, iy: usize, iz: usize) -> Vec3 {
        let e = self.cell_size();
        self.lo
            + Vec3::new(
                (ix as f64 + 0.5) * e.x,
                (iy as f64 + 0.5) * e.y,
                (iz as f64 + 0.5) * e.z,
            )
    }

    /// Edge used for the dilation rule; the shortest side for non-cubic cells.
    pub fn voxel_edge(&self) -> f64 {
        self.cell_size().min_elem()
    }

    pub fn count(&self) -> usize {
        self.occupancy.iter().filter(|&&b| b).count()
    }

    fn same_layout(&self, other: &VoxelGrid) -> bool {
        self.resolution == other.resolution && self.lo == other.lo && self.hi == other.hi
    }
}

// Cells along one axis whose centers fall within [a, b].
fn cell_range(a: f64, b: f64, lo: f64, edge: f64, res: usize) -> Option<(usize, usize)> {
    let first = ((a - lo) / edge - 0.5).ceil().max(0.0);
    let last = ((b - lo) / edge - 0.5).floor().min(res as f64 - 1.0);
    if first > last {
        None
    } else {
        Some((first as usize, last as usize))
    }
}

/// Occupied iff the cell center is inside a cuboid or within half a voxel
/// edge of one. Parts beyond the bounds are clipped.
pub fn voxelize(parts: &[Part], resolution: usize, lo: Vec3, hi: Vec3) -> VoxelGrid {
    let mut grid = VoxelGrid::empty(resolution, lo, hi);
    let e = grid.cell_size();
    let half = grid.voxel_edge() / 2.0;
    let res = resolution;
    // candidate index window per part, padded by the dilation radius
    let windows: Vec<Option<[(usize, usize); 3]>> = parts
        .iter()
        .map(|p| {
            let a = p.min_corner() - Vec3::splat(half);
            let b = p.max_corner() + Vec3::splat(half);
            Some([
                cell_range(a.x, b.x, lo.x, e.x, res)?,
                cell_range(a.y, b.y, lo.y, e.y, res)?,
                cell_range(a.z, b.z, lo.z, e.z, res)?,
            ])
        })
        .collect();
    let probe = grid.clone_layout();
    grid.occupancy
        .par_chunks_mut(res * res)
        .enumerate()
        .for_each(|(iz, slab)| {
            for (p, w) in parts.iter().zip(&windows) {
                let Some([(x0, x1), (y0, y1), (z0, z1)]) = *w else {
                    continue;
                };
                if iz < z0 || iz > z1 {
                    continue;
                }
                for iy in y0..=y1 {
                    for ix in x0..=x1 {
                        let cell = &mut slab[ix + res * iy];
                        if !*cell && p.outside_distance(probe.cell_center(ix, iy, iz)) < half {
                            *cell = true;
                        }
                    }
                }
            }
        });
    grid
}

impl VoxelGrid {
    fn clone_layout(&self) -> VoxelGrid {
        VoxelGrid {
            resolution: self.resolution,
            lo: self.lo,
            hi: self.hi,
            occupancy: Vec::new(),
        }
    }
}

/// Intersection over union; 1.0 when both grids are empty.
pub fn iou(a: &VoxelGrid, b: &VoxelGrid) -> Result<f64, GeometryError> {
    if !a.same_layout(b) {
        return Err(GeometryError::GridMismatch);
    }
    let (mut inter, mut union) = (0usize, 0usize);
    for (x, y) in a.occupancy.iter().zip(&b.occupancy) {
        inter += (*x && *y) as usize;
        union += (*x || *y) as usize;
    }
    Ok(if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // per-cell analytic oracle with its own distance formula
    fn oracle(parts: &[Part], res: usize, lo: Vec3, hi: Vec3) -> Vec<bool> {
        let e = (hi - lo) / res as f64;
        let half = e.min_elem() / 2.0;
        let mut out = vec![false; res.pow(3)];
        for iz in 0..res {
            for iy in 0..res {
                for ix in 0..res {
                    let c = [
                        lo.x + (ix as f64 + 0.5) * e.x,
                        lo.y + (iy as f64 + 0.5) * e.y,
                        lo.z + (iz as f64 + 0.5) * e.z,
                    ];
                    out[ix + res * (iy + res * iz)] = parts.iter().any(|p| {
                        let b0 = p.min_corner().to_array();
                        let b1 = p.max_corner().to_array();
                        let inside = (0..3).all(|k| c[k] >= b0[k] && c[k] <= b1[k]);
                        let d2: f64 = (0..3)
                            .map(|k| {
                                let d = if c[k] < b0[k] {
                                    b0[k] - c[k]
                                } else if c[k] > b1[k] {
                                    c[k] - b1[k]
                                } else {
                                    0.0
                                };
                                d * d
                            })
                            .sum();
                        inside || d2.sqrt() < half
                    });
                }
            }
        }
        out
    }

    #[test]
    fn spanning_cuboid_fills_grid() {
        let (lo, hi) = VoxelGrid::unit_bounds();
        let g = voxelize(&[Part::unlabeled(Vec3::splat(1.0), Vec3::ZERO)], 16, lo, hi);
        assert_eq!(g.count(), 16usize.pow(3));
        assert_eq!(iou(&g, &g).unwrap(), 1.0);
        assert_eq!(voxelize(&[], 8, lo, hi).count(), 0);
    }

    #[test]
    fn unit_cube_matches_oracle_at_64() {
        let lo = Vec3::splat(-1.0);
        let hi = Vec3::splat(1.0);
        let parts = [Part::unlabeled(Vec3::splat(1.0), Vec3::ZERO)];
        assert_eq!(
            voxelize(&parts, 64, lo, hi).occupancy,
            oracle(&parts, 64, lo, hi)
        );
    }

    #[test]
    fn off_grid_parts_match_oracle() {
        let lo = Vec3::new(-1.0, -0.5, -0.25);
        let hi = Vec3::new(1.0, 0.5, 0.75);
        let parts = [
            Part::unlabeled(Vec3::new(0.3, 0.05, 0.2), Vec3::new(0.11, -0.2, 0.3)),
            Part::unlabeled(Vec3::new(3.0, 0.01, 0.01), Vec3::new(0.0, 0.4, 0.5)),
            Part::unlabeled(Vec3::splat(0.2), Vec3::new(5.0, 0.0, 0.0)),
        ];
        assert_eq!(
            voxelize(&parts, 20, lo, hi).occupancy,
            oracle(&parts, 20, lo, hi)
        );
    }

    #[test]
    fn iou_of_half_overlapping_slabs() {
        let (lo, hi) = VoxelGrid::unit_bounds();
        let a = voxelize(
            &[Part::unlabeled(
                Vec3::new(0.5, 1.0, 1.0),
                Vec3::new(-0.25, 0.0, 0.0),
            )],
            8,
            lo,
            hi,
        );
        let b = voxelize(
            &[Part::unlabeled(
                Vec3::new(0.5, 1.0, 1.0),
                Vec3::new(0.0, 0.0, 0.0),
            )],
            8,
            lo,
            hi,
        );
        // 4 columns each, sharing 2 (boundary cells dilate by half an edge: centers sit 1/16 inside)
        let ca = a.count() as f64;
        let inter = a
            .occupancy
            .iter()
            .zip(&b.occupancy)
            .filter(|(x, y)| **x && **y)
            .count() as f64;
        assert_eq!(ca, b.count() as f64);
        assert!((iou(&a, &b).unwrap() - inter / (2.0 * ca - inter)).abs() < 1e-12);
        assert!((iou(&a, &b).unwrap() - 1.0 / 3.0).abs() < 1e-12);

        let c = voxelize(
            &[Part::unlabeled(
                Vec3::new(0.25, 1.0, 1.0),
                Vec3::new(0.375, 0.0, 0.0),
            )],
            8,
            lo,
            hi,
        );
        assert_eq!(iou(&a, &c).unwrap(), 0.0);
        let other = VoxelGrid::empty(4, lo, hi);
        assert_eq!(iou(&a, &other), Err(GeometryError::GridMismatch));
        assert_eq!(iou(&other, &other.clone()).unwrap(), 1.0);
    }
}
