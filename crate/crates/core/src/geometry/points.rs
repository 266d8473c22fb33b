use kiddo::{ImmutableKdTree, SquaredEuclidean};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::GeometryError;
use crate::interpreter::rng::child_rng;
use crate::shape::{Part, Vec3};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Self {
        PointCloud { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `n` points drawn area-proportionally from every cuboid face. Overlaps
/// between cuboids are ignored.
pub fn sample_points(parts: &[Part], n: usize, seed: u64) -> Result<PointCloud, GeometryError> {
    if n == 0 {
        return Ok(PointCloud::default());
    }
    if parts.is_empty() {
        return Err(GeometryError::EmptyGeometry);
    }
    // face (part, axis, side) with area = product of the other two dims
    let mut faces = Vec::with_capacity(parts.len() * 6);
    let mut areas = Vec::with_capacity(parts.len() * 6);
    for (pi, p) in parts.iter().enumerate() {
        let d = p.dims.to_array();
        for axis in 0..3 {
            let area = d[(axis + 1) % 3] * d[(axis + 2) % 3];
            for side in [-1.0, 1.0] {
                faces.push((pi, axis, side));
                areas.push(area);
            }
        }
    }
    let pick = WeightedIndex::new(&areas).map_err(|_| GeometryError::DegenerateExtent)?;
    let mut rng = child_rng(seed, "surface-points");
    let points = (0..n)
        .map(|_| {
            let (pi, axis, side) = faces[pick.sample(&mut rng)];
            let p = &parts[pi];
            let mut offset = [0.0; 3];
            for (k, o) in offset.iter_mut().enumerate() {
                let half = p.dims.get(k) / 2.0;
                *o = if k == axis {
                    side * half
                } else {
                    rng.random_range(-half..=half)
                };
            }
            p.center + Vec3::from_array(offset)
        })
        .collect();
    Ok(PointCloud { points })
}

// Distance from every point of `from` to its nearest neighbour in `to`.
fn nearest_distances(from: &[Vec3], to: &[Vec3]) -> Vec<f64> {
    let coords: Vec<[f64; 3]> = to.iter().map(|p| p.to_array()).collect();
    let tree: ImmutableKdTree<f64, 3> = ImmutableKdTree::new_from_slice(&coords);
    from.iter()
        .map(|p| {
            tree.nearest_one::<SquaredEuclidean>(&p.to_array())
                .distance
                .sqrt()
        })
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Symmetric Chamfer distance: the average of both directed mean
/// nearest-neighbour distances.
pub fn chamfer(a: &PointCloud, b: &PointCloud) -> Result<f64, GeometryError> {
    if a.is_empty() || b.is_empty() {
        return Err(GeometryError::EmptyCloud);
    }
    let ab = nearest_distances(&a.points, &b.points);
    let ba = nearest_distances(&b.points, &a.points);
    Ok((mean(&ab) + mean(&ba)) / 2.0)
}

/// F-score at threshold `tau`, as a percentage.
pub fn fscore(a: &PointCloud, b: &PointCloud, tau: f64) -> Result<f64, GeometryError> {
    if a.is_empty() || b.is_empty() {
        return Err(GeometryError::EmptyCloud);
    }
    let within = |d: Vec<f64>| d.iter().filter(|&&x| x <= tau).count() as f64 / d.len() as f64;
    let precision = within(nearest_distances(&a.points, &b.points));
    let recall = within(nearest_distances(&b.points, &a.points));
    if precision + recall == 0.0 {
        return Ok(0.0);
    }
    Ok(100.0 * 2.0 * precision * recall / (precision + recall))
}
