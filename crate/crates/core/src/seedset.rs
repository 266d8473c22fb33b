//! Seed shapes: small labeled cuboid layouts that ground library design.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{normalize_parts, GeometryError, NormalizeMode, Transform};
use crate::shape::Part;

pub const MAX_SEED_SHAPES: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedShape {
    pub id: String,
    pub parts: Vec<Part>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub render_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

impl SeedShape {
    pub fn new(id: impl Into<String>, parts: Vec<Part>) -> Self {
        SeedShape {
            id: id.into(),
            parts,
            render_path: None,
            description: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SeedSet {
    pub shapes: Vec<SeedShape>,
}

#[derive(Debug, Error)]
pub enum SeedSetError {
    #[error("seed set must hold 1 to {MAX_SEED_SHAPES} shapes, found {0}")]
    Size(usize),
    #[error("shape `{0}` appears more than once")]
    DuplicateId(String),
    #[error("shape `{shape}` part {index} has non-positive or non-finite geometry")]
    InvalidPart { shape: String, index: usize },
    #[error("shape `{0}` has no parts")]
    EmptyShape(String),
    #[error("seed set JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl SeedSet {
    pub fn from_json(text: &str) -> Result<SeedSet, SeedSetError> {
        let set: SeedSet = serde_json::from_str(text)?;
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<(), SeedSetError> {
        if self.shapes.is_empty() || self.shapes.len() > MAX_SEED_SHAPES {
            return Err(SeedSetError::Size(self.shapes.len()));
        }
        let mut seen = std::collections::HashSet::new();
        for s in &self.shapes {
            if !seen.insert(s.id.as_str()) {
                return Err(SeedSetError::DuplicateId(s.id.clone()));
            }
            if s.parts.is_empty() {
                return Err(SeedSetError::EmptyShape(s.id.clone()));
            }
            if let Some(index) = s.parts.iter().position(|p| !p.is_valid()) {
                return Err(SeedSetError::InvalidPart {
                    shape: s.id.clone(),
                    index,
                });
            }
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&SeedShape> {
        self.shapes.iter().find(|s| s.id == id)
    }

    /// Every shape scaled into the unit sphere, with the transforms used.
    pub fn normalized(&self) -> Result<(SeedSet, Vec<Transform>), SeedSetError> {
        let mut shapes = Vec::with_capacity(self.shapes.len());
        let mut transforms = Vec::with_capacity(self.shapes.len());
        for s in &self.shapes {
            let (parts, t) = normalize_parts(&s.parts, NormalizeMode::UnitSphere)?;
            shapes.push(SeedShape { parts, ..s.clone() });
            transforms.push(t);
        }
        Ok((SeedSet { shapes }, transforms))
    }

    pub fn part_count(&self) -> usize {
        self.shapes.iter().map(|s| s.parts.len()).sum()
    }
}
