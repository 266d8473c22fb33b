//! Cage-style mesh deformation driven by cuboid layouts: each vertex follows
//! a convex blend of per-cuboid affine maps from a source layout to an edited
//! one.

mod obj;
mod sidecar;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interpreter::{execute_program, ExecError, ExecLimits};
use crate::shape::{Part, Vec3};
use crate::shapescript::{Library, ProgramStmt, ShapeProgram};

pub use obj::{format_obj, load_obj, parse_obj, save_obj};
pub use sidecar::{decode_weights, encode_weights, layout_hash, mesh_hash, weights_cached};

pub const DEFAULT_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Mesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
}

impl Mesh {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self, DeformError> {
        let m = Mesh { vertices, faces };
        m.check()?;
        Ok(m)
    }

    pub fn check(&self) -> Result<(), DeformError> {
        let n = self.vertices.len();
        for (i, f) in self.faces.iter().enumerate() {
            if f.iter().any(|&v| v >= n) {
                return Err(DeformError::Parse {
                    line: 0,
                    message: format!("face {i} indexes past {n} vertices"),
                });
            }
        }
        Ok(())
    }
}

/// Per-vertex sparse distribution over cuboid indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeformWeights {
    pub cuboids: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayoutPair {
    pub source: Vec<Part>,
    pub edited: Vec<Part>,
}

impl LayoutPair {
    pub fn new(source: Vec<Part>, edited: Vec<Part>) -> Result<Self, DeformError> {
        if source.len() != edited.len() {
            return Err(DeformError::LayoutMismatch {
                source_parts: source.len(),
                edited_parts: edited.len(),
            });
        }
        Ok(LayoutPair { source, edited })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeformError {
    #[error("layout is empty")]
    EmptyLayout,
    #[error("layouts differ in size: {source_parts} source parts, {edited_parts} edited")]
    LayoutMismatch {
        source_parts: usize,
        edited_parts: usize,
    },
    #[error("edit changes program structure at statement {statement}: {reason}")]
    StructureChanged { statement: usize, reason: String },
    #[error("weights cover {weights} vertices and {cuboids} cuboids; mesh has {vertices}, layout {layout}")]
    WeightsMismatch {
        weights: usize,
        cuboids: usize,
        vertices: usize,
        layout: usize,
    },
    #[error("OBJ line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("bad weights sidecar: {0}")]
    Sidecar(String),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error("io: {0}")]
    Io(String),
}

impl DeformError {
    pub fn code(&self) -> &'static str {
        match self {
            DeformError::EmptyLayout => "EmptyLayout",
            // a structure change is the same refusal seen one level up
            DeformError::LayoutMismatch { .. } | DeformError::StructureChanged { .. } => {
                "LayoutMismatch"
            }
            DeformError::WeightsMismatch { .. } => "WeightsMismatch",
            DeformError::Parse { .. } => "ParseError",
            DeformError::Sidecar(_) => "SidecarError",
            DeformError::Exec(e) => e.code(),
            DeformError::Io(_) => "IoError",
        }
    }
}

impl From<std::io::Error> for DeformError {
    fn from(e: std::io::Error) -> Self {
        DeformError::Io(e.to_string())
    }
}

/// Position of `p` in the unit cube of `c`: (p − center)/dims + 0.5.
pub fn local_coords(p: Vec3, c: &Part) -> Vec3 {
    (p - c.center).div_elem(c.dims) + Vec3::splat(0.5)
}

fn inside(p: Vec3, c: &Part) -> bool {
    let h = c.dims * 0.5;
    (0..3).all(|a| (p.get(a) - c.center.get(a)).abs() <= h.get(a))
}

/// Unsigned distance to the cuboid's surface, from outside or within.
pub fn surface_distance(p: Vec3, c: &Part) -> f64 {
    let d = (p - c.center).abs() - c.dims * 0.5;
    if d.max_elem() <= 0.0 {
        -d.max_elem()
    } else {
        d.max(Vec3::ZERO).norm()
    }
}

fn weight_row(p: Vec3, layout: &[Part], eps: f64) -> Vec<(usize, f64)> {
    let mut hits = layout.iter().enumerate().filter(|(_, c)| inside(p, c));
    if let (Some((i, _)), None) = (hits.next(), hits.next()) {
        return vec![(i, 1.0)];
    }
    let raw: Vec<f64> = layout
        .iter()
        .map(|c| 1.0 / (surface_distance(p, c) + eps))
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter()
        .enumerate()
        .map(|(i, w)| (i, w / total))
        .filter(|(_, w)| *w > 0.0)
        .collect()
}

pub fn compute_weights(
    mesh: &Mesh,
    layout: &[Part],
    eps: f64,
) -> Result<DeformWeights, DeformError> {
    if layout.is_empty() {
        return Err(DeformError::EmptyLayout);
    }
    let rows = mesh
        .vertices
        .par_iter()
        .map(|&p| weight_row(p, layout, eps))
        .collect();
    Ok(DeformWeights {
        cuboids: layout.len(),
        rows,
    })
}

pub fn apply_deformation(
    mesh: &Mesh,
    weights: &DeformWeights,
    pair: &LayoutPair,
) -> Result<Mesh, DeformError> {
    if pair.source.len() != pair.edited.len() {
        return Err(DeformError::LayoutMismatch {
            source_parts: pair.source.len(),
            edited_parts: pair.edited.len(),
        });
    }
    if weights.rows.len() != mesh.vertices.len() || weights.cuboids != pair.source.len() {
        return Err(DeformError::WeightsMismatch {
            weights: weights.rows.len(),
            cuboids: weights.cuboids,
            vertices: mesh.vertices.len(),
            layout: pair.source.len(),
        });
    }
    let vertices = mesh
        .vertices
        .par_iter()
        .zip(&weights.rows)
        .map(|(&v, row)| {
            row.iter().fold(Vec3::ZERO, |acc, &(i, w)| {
                let (s, e) = (&pair.source[i], &pair.edited[i]);
                let moved = e.center + (local_coords(v, s) - Vec3::splat(0.5)).mul_elem(e.dims);
                acc + moved * w
            })
        })
        .collect();
    Ok(Mesh {
        vertices,
        faces: mesh.faces.clone(),
    })
}

/// Refuse edits that add, remove or swap calls: only literals may change.
pub fn check_same_structure(a: &ShapeProgram, b: &ShapeProgram) -> Result<(), DeformError> {
    if a.statements.len() != b.statements.len() {
        return Err(DeformError::StructureChanged {
            statement: a.statements.len().min(b.statements.len()),
            reason: format!(
                "{} statements became {}",
                a.statements.len(),
                b.statements.len()
            ),
        });
    }
    for (i, (x, y)) in a.statements.iter().zip(&b.statements).enumerate() {
        let same = match (x, y) {
            (
                ProgramStmt::Call {
                    fn_name: f,
                    args: p,
                    ..
                },
                ProgramStmt::Call {
                    fn_name: g,
                    args: q,
                    ..
                },
            ) => f == g && p.len() == q.len(),
            (ProgramStmt::MakePart { .. }, ProgramStmt::MakePart { .. }) => true,
            _ => false,
        };
        if !same {
            return Err(DeformError::StructureChanged {
                statement: i,
                reason: format!("`{}` became `{}`", x.fn_name(), y.fn_name()),
            });
        }
    }
    Ok(())
}

/// Execute both programs and pair their cuboids index by index.
pub fn layout_pair_from_programs(
    lib: &Library,
    a: &ShapeProgram,
    b: &ShapeProgram,
    limits: &ExecLimits,
) -> Result<LayoutPair, DeformError> {
    check_same_structure(a, b)?;
    let ea = execute_program(lib, a, limits)?;
    let eb = execute_program(lib, b, limits)?;
    for i in 0..a.statements.len() {
        let na = ea
            .provenance
            .iter()
            .filter(|p| p.statement_index == i)
            .count();
        let nb = eb
            .provenance
            .iter()
            .filter(|p| p.statement_index == i)
            .count();
        if na != nb {
            return Err(DeformError::StructureChanged {
                statement: i,
                reason: format!(
                    "`{}` produced {na} parts before and {nb} after",
                    a.statements[i].fn_name()
                ),
            });
        }
    }
    LayoutPair::new(ea.parts, eb.parts)
}

/// Program edit → mesh edit in one step.
pub fn deform_by_programs(
    mesh: &Mesh,
    lib: &Library,
    from: &ShapeProgram,
    to: &ShapeProgram,
    limits: &ExecLimits,
) -> Result<Mesh, DeformError> {
    let pair = layout_pair_from_programs(lib, from, to, limits)?;
    let w = compute_weights(mesh, &pair.source, DEFAULT_EPS)?;
    apply_deformation(mesh, &w, &pair)
}

#[cfg(test)]
mod tests;
