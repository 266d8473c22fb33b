//! Point clouds as ASCII XYZ; voxel grids as a small binary file.
//!
//! Voxel layout (little endian): magic `SKVX`, u32 resolution, six f64 bounds
//! (lo x y z, hi x y z), then occupancy bit-packed LSB first in cell index
//! order `ix + res * (iy + res * iz)`.

use std::fmt::Write as _;
use std::path::Path;

use super::{GeometryError, PointCloud, VoxelGrid};
use crate::shape::Vec3;

const VOXEL_MAGIC: &[u8; 4] = b"SKVX";

pub fn parse_xyz(text: &str) -> Result<PointCloud, GeometryError> {
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let vals: Vec<f64> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .take(3)
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|e| GeometryError::Format(format!("line {}: {e}", i + 1)))?;
        if vals.len() != 3 || vals.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::Format(format!(
                "line {}: expected three finite numbers",
                i + 1
            )));
        }
        points.push(Vec3::new(vals[0], vals[1], vals[2]));
    }
    Ok(PointCloud { points })
}

pub fn format_xyz(cloud: &PointCloud) -> String {
    let mut out = String::with_capacity(cloud.len() * 32);
    for p in &cloud.points {
        let _ = writeln!(out, "{} {} {}", p.x, p.y, p.z);
    }
    out
}

pub fn read_xyz(path: &Path) -> Result<PointCloud, GeometryError> {
    parse_xyz(&std::fs::read_to_string(path)?)
}

pub fn write_xyz(cloud: &PointCloud, path: &Path) -> Result<(), GeometryError> {
    Ok(std::fs::write(path, format_xyz(cloud))?)
}

pub fn encode_voxels(grid: &VoxelGrid) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + 4 + 48 + grid.occupancy.len().div_ceil(8));
    out.extend_from_slice(VOXEL_MAGIC);
    out.extend_from_slice(&(grid.resolution as u32).to_le_bytes());
    for v in grid.lo.to_array().into_iter().chain(grid.hi.to_array()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for chunk in grid.occupancy.chunks(8) {
        let byte = chunk
            .iter()
            .enumerate()
            .fold(0u8, |b, (i, &on)| b | ((on as u8) << i));
        out.push(byte);
    }
    out
}

pub fn decode_voxels(bytes: &[u8]) -> Result<VoxelGrid, GeometryError> {
    let bad = |msg: &str| GeometryError::Format(format!("voxel file: {msg}"));
    if bytes.len() < 56 || &bytes[..4] != VOXEL_MAGIC {
        return Err(bad("missing SKVX header"));
    }
    let res = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    if res == 0 {
        return Err(bad("zero resolution"));
    }
    let mut bounds = [0.0f64; 6];
    for (i, b) in bounds.iter_mut().enumerate() {
        let at = 8 + 8 * i;
        *b = f64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"));
    }
    let cells = res
        .checked_pow(3)
        .ok_or_else(|| bad("resolution too large"))?;
    let body = &bytes[56..];
    if body.len() != cells.div_ceil(8) {
        return Err(bad("occupancy length does not match resolution"));
    }
    let occupancy = (0..cells)
        .map(|i| body[i / 8] >> (i % 8) & 1 == 1)
        .collect();
    Ok(VoxelGrid {
        resolution: res,
        lo: Vec3::new(bounds[0], bounds[1], bounds[2]),
        hi: Vec3::new(bounds[3], bounds[4], bounds[5]),
        occupancy,
    })
}

pub fn read_voxels(path: &Path) -> Result<VoxelGrid, GeometryError> {
    decode_voxels(&std::fs::read(path)?)
}

pub fn write_voxels(grid: &VoxelGrid, path: &Path) -> Result<(), GeometryError> {
    Ok(std::fs::write(path, encode_voxels(grid))?)
}
