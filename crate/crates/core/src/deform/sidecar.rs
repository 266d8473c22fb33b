//! Binary cache for weight matrices, keyed by mesh and layout hashes.
//!
//! Layout: `SKDW`, u32 version, 32-byte mesh hash, 32-byte layout hash,
//! u64 eps bits, u32 cuboids, u32 rows, then per row a u32 count followed by
//! (u32 index, f64 weight) pairs. Little-endian throughout.

use std::path::Path;

use sha2::{Digest, Sha256};

use super::{compute_weights, DeformError, DeformWeights, Mesh};
use crate::shape::Part;

const MAGIC: &[u8; 4] = b"SKDW";
const VERSION: u32 = 1;

pub fn mesh_hash(mesh: &Mesh) -> [u8; 32] {
    let mut h = Sha256::new();
    for v in &mesh.vertices {
        for c in v.to_array() {
            h.update(c.to_le_bytes());
        }
    }
    for f in &mesh.faces {
        for i in f {
            h.update((*i as u64).to_le_bytes());
        }
    }
    h.finalize().into()
}

pub fn layout_hash(layout: &[Part]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in layout {
        for c in p.dims.to_array().into_iter().chain(p.center.to_array()) {
            h.update(c.to_le_bytes());
        }
    }
    h.finalize().into()
}

pub fn encode_weights(w: &DeformWeights, mesh: [u8; 32], layout: [u8; 32], eps: f64) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&mesh);
    out.extend_from_slice(&layout);
    out.extend_from_slice(&eps.to_bits().to_le_bytes());
    out.extend_from_slice(&(w.cuboids as u32).to_le_bytes());
    out.extend_from_slice(&(w.rows.len() as u32).to_le_bytes());
    for row in &w.rows {
        out.extend_from_slice(&(row.len() as u32).to_le_bytes());
        for &(i, v) in row {
            out.extend_from_slice(&(i as u32).to_le_bytes());
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a>(&'a [u8]);

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], DeformError> {
        if self.0.len() < n {
            return Err(DeformError::Sidecar("truncated".into()));
        }
        let (a, b) = self.0.split_at(n);
        self.0 = b;
        Ok(a)
    }
    fn u32(&mut self) -> Result<u32, DeformError> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }
    fn u64(&mut self) -> Result<u64, DeformError> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }
}

/// Decode, returning the weights together with the keys they were stored under.
pub fn decode_weights(
    bytes: &[u8],
) -> Result<(DeformWeights, [u8; 32], [u8; 32], f64), DeformError> {
    let mut r = Reader(bytes);
    if r.take(4)? != MAGIC {
        return Err(DeformError::Sidecar("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(DeformError::Sidecar(format!(
            "unsupported version {version}"
        )));
    }
    let mesh: [u8; 32] = r.take(32)?.try_into().expect("32 bytes");
    let layout: [u8; 32] = r.take(32)?.try_into().expect("32 bytes");
    let eps = f64::from_bits(r.u64()?);
    let cuboids = r.u32()? as usize;
    let n = r.u32()? as usize;
    let mut rows = Vec::with_capacity(n.min(1 << 24));
    for _ in 0..n {
        let k = r.u32()? as usize;
        let mut row = Vec::with_capacity(k.min(cuboids));
        for _ in 0..k {
            let i = r.u32()? as usize;
            let v = f64::from_bits(r.u64()?);
            if i >= cuboids {
                return Err(DeformError::Sidecar(format!(
                    "cuboid index {i} out of range"
                )));
            }
            row.push((i, v));
        }
        rows.push(row);
    }
    if !r.0.is_empty() {
        return Err(DeformError::Sidecar("trailing bytes".into()));
    }
    Ok((DeformWeights { cuboids, rows }, mesh, layout, eps))
}

/// Weights from `path` when its keys match, else computed and written there.
pub fn weights_cached(
    mesh: &Mesh,
    layout: &[Part],
    eps: f64,
    path: &Path,
) -> Result<DeformWeights, DeformError> {
    let (mk, lk) = (mesh_hash(mesh), layout_hash(layout));
    if let Ok(bytes) = std::fs::read(path) {
        match decode_weights(&bytes) {
            Ok((w, m, l, e)) if m == mk && l == lk && e.to_bits() == eps.to_bits() => return Ok(w),
            Ok(_) => log::info!("weights sidecar {} is stale; recomputing", path.display()),
            Err(e) => log::warn!("ignoring weights sidecar {}: {e}", path.display()),
        }
    }
    let w = compute_weights(mesh, layout, eps)?;
    std::fs::write(path, encode_weights(&w, mk, lk, eps))?;
    Ok(w)
}
