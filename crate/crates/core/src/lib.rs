//! Toolkit for designing, validating and using libraries of programmatic
//! cuboid shape abstractions.

pub mod config;
pub mod deform;
pub mod geometry;
pub mod interpreter;
pub mod llm;
pub mod search;
pub mod seedset;
pub mod shape;
pub mod shapescript;
pub mod synthetic;
pub mod validation;

pub use config::PipelineConfig;
pub use shape::{AxisBox, CoordFrame, Part, Vec3};
