use std::fmt::Write as _;
use std::path::Path;

use super::{DeformError, Mesh};
use crate::shape::Vec3;

/// `v` and `f` records only; polygons are fanned into triangles, other
/// records are ignored. Face tokens may be `i`, `i/t`, `i//n` or `i/t/n`,
/// and negative indices count back from the latest vertex.
pub fn parse_obj(text: &str) -> Result<Mesh, DeformError> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let n = n + 1;
        let bad = |message: String| DeformError::Parse { line: n, message };
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("v") => {
                let xyz: Vec<f64> = tok
                    .take(3)
                    .map(|t| {
                        t.parse::<f64>()
                            .map_err(|_| bad(format!("bad coordinate `{t}`")))
                    })
                    .collect::<Result<_, _>>()?;
                if xyz.len() != 3 || xyz.iter().any(|v| !v.is_finite()) {
                    return Err(bad("vertex needs three finite coordinates".into()));
                }
                vertices.push(Vec3::new(xyz[0], xyz[1], xyz[2]));
            }
            Some("f") => {
                let idx: Vec<usize> = tok
                    .map(|t| {
                        let head = t.split('/').next().unwrap_or("");
                        let i: i64 = head
                            .parse()
                            .map_err(|_| bad(format!("bad face index `{t}`")))?;
                        let len = vertices.len() as i64;
                        let abs = if i < 0 { len + i } else { i - 1 };
                        if i == 0 || abs < 0 || abs >= len {
                            return Err(bad(format!("face index {i} out of range")));
                        }
                        Ok(abs as usize)
                    })
                    .collect::<Result<_, _>>()?;
                if idx.len() < 3 {
                    return Err(bad("face needs at least three vertices".into()));
                }
                for k in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    if vertices.is_empty() {
        return Err(DeformError::Parse {
            line: 0,
            message: "no vertices".into(),
        });
    }
    Ok(Mesh { vertices, faces })
}

pub fn format_obj(mesh: &Mesh) -> String {
    let mut s = String::new();
    for v in &mesh.vertices {
        // shortest round-trip representation
        let _ = writeln!(s, "v {:?} {:?} {:?}", v.x, v.y, v.z);
    }
    for f in &mesh.faces {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}

pub fn load_obj(path: &Path) -> Result<Mesh, DeformError> {
    parse_obj(&std::fs::read_to_string(path)?)
}

pub fn save_obj(mesh: &Mesh, path: &Path) -> Result<(), DeformError> {
    std::fs::write(path, format_obj(mesh))?;
    Ok(())
}
