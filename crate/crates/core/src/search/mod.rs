//! Program inference by sampler-driven search.
//!
//! Candidates are drawn from the library's samplers, scored against the
//! target, and the best one kept. For cuboid targets, every losing candidate
//! is also mined for individual calls that improve the best program.

mod merge;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::PipelineConfig;
use crate::geometry::{
    chamfer, fscore, iou, match_error, normalize_parts, normalize_points, sample_points, voxelize,
    NormalizeMode, PointCloud, VoxelGrid,
};
use crate::interpreter::rng::child_rng;
use crate::interpreter::{execute_program, run_sampler, ExecError, ExecLimits, Execution, Sample};
use crate::shape::{CoordFrame, Part};
use crate::shapescript::{count_dof_tokens, print_program, Library, Sampler, ShapeProgram};
use crate::validation::LabelVoter;

pub use merge::merge_improve;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub dof_term: f64,
    /// Mean matched corner distance; infinite on a part-count mismatch.
    pub geo_term: f64,
    pub total: f64,
}

impl Objective {
    pub fn new(dof: f64, geo: f64, cfg: &PipelineConfig) -> Self {
        let total = if geo.is_finite() {
            cfg.dof_weight * dof + cfg.geo_weight * geo
        } else {
            f64::INFINITY
        };
        Objective {
            dof_term: dof,
            geo_term: geo,
            total,
        }
    }

    pub fn infinite() -> Self {
        Objective {
            dof_term: f64::INFINITY,
            geo_term: f64::INFINITY,
            total: f64::INFINITY,
        }
    }
}

/// Compression objective of `prog` against a cuboid target. Geometric error
/// is graded (no cutoff); execution failures score infinite.
pub fn objective(
    prog: &ShapeProgram,
    target: &[Part],
    lib: &Library,
    cfg: &PipelineConfig,
) -> Objective {
    match execute_program(lib, prog, &ExecLimits::default()) {
        Ok(ex) => objective_of_parts(prog, &ex.parts, target, cfg),
        Err(_) => Objective::infinite(),
    }
}

pub(crate) fn objective_of_parts(
    prog: &ShapeProgram,
    parts: &[Part],
    target: &[Part],
    cfg: &PipelineConfig,
) -> Objective {
    let geo = match_error(parts, target, f64::INFINITY).value();
    Objective::new(count_dof_tokens(prog).value() as f64, geo, cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "modality", content = "payload", rename_all = "snake_case")]
pub enum TargetObservation {
    Primitives(Vec<Part>),
    Pointcloud(PointCloud),
    Voxels(VoxelGrid),
}

impl TargetObservation {
    pub fn modality(&self) -> &'static str {
        match self {
            TargetObservation::Primitives(_) => "primitives",
            TargetObservation::Pointcloud(_) => "pointcloud",
            TargetObservation::Voxels(_) => "voxels",
        }
    }

    fn is_empty(&self) -> bool {
        match self {
            TargetObservation::Primitives(p) => p.is_empty(),
            TargetObservation::Pointcloud(c) => c.is_empty(),
            TargetObservation::Voxels(g) => g.count() == 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchBudget {
    pub max_samples: usize,
    /// Wall-clock limit; `None` searches the full sample budget, which keeps
    /// results deterministic.
    pub timeout_s: Option<f64>,
    pub seed: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_samples: 1000,
            timeout_s: Some(4.0),
            seed: 0,
        }
    }
}

impl SearchBudget {
    pub fn from_config(cfg: &PipelineConfig, seed: u64) -> Self {
        SearchBudget {
            max_samples: cfg.infer_samples,
            timeout_s: Some(cfg.infer_timeout_s),
            seed,
        }
    }
}

/// Samplers and the frame they are run in.
#[derive(Debug, Clone)]
pub struct SamplerSet {
    pub samplers: Vec<Sampler>,
    pub frame: CoordFrame,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SearchError {
    #[error("no samplers to search with")]
    NoSamplers,
    #[error("target is empty")]
    EmptyTarget,
    #[error("no sampled candidate could be executed and scored")]
    NoValidCandidate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceResult {
    pub program: String,
    #[serde(skip)]
    pub program_ast: ShapeProgram,
    /// Modality score of the returned program; lower is better
    /// (objective total, Chamfer distance, or 1 - IoU).
    pub score: f64,
    pub metrics: ReconstructionMetrics,
    pub samples: usize,
    pub merges: usize,
    pub elapsed_s: f64,
    pub seed: u64,
    /// True when the wall-clock limit cut the search short; such runs are
    /// not reproducible.
    pub timed_out: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Progress {
    pub samples: usize,
    pub best_score: f64,
    pub best_program: String,
}

/// Normalized form of a target, plus anything precomputed for scoring.
enum Prepared<'a> {
    Primitives(&'a [Part]),
    Points(PointCloud),
    Voxels(&'a VoxelGrid),
}

impl<'a> Prepared<'a> {
    fn new(target: &'a TargetObservation) -> Result<Self, SearchError> {
        Ok(match target {
            TargetObservation::Primitives(p) => Prepared::Primitives(p),
            TargetObservation::Pointcloud(c) => {
                let (pts, _) = normalize_points(&c.points, NormalizeMode::UnitBox)
                    .map_err(|_| SearchError::EmptyTarget)?;
                Prepared::Points(PointCloud::new(pts))
            }
            TargetObservation::Voxels(g) => Prepared::Voxels(g),
        })
    }

    fn score(&self, prog: &ShapeProgram, parts: &[Part], cfg: &PipelineConfig, seed: u64) -> f64 {
        match self {
            Prepared::Primitives(t) => objective_of_parts(prog, parts, t, cfg).total,
            Prepared::Points(t) => {
                let Ok((norm, _)) = normalize_parts(parts, NormalizeMode::UnitBox) else {
                    return f64::INFINITY;
                };
                sample_points(&norm, cfg.n_points, seed)
                    .ok()
                    .and_then(|pc| chamfer(&pc, t).ok())
                    .unwrap_or(f64::INFINITY)
            }
            Prepared::Voxels(g) => {
                let Ok((norm, _)) = normalize_parts(parts, NormalizeMode::UnitBox) else {
                    return 1.0;
                };
                1.0 - iou(&voxelize(&norm, g.resolution, g.lo, g.hi), g).unwrap_or(0.0)
            }
        }
    }
}

struct Candidate {
    program: ShapeProgram,
    parts: Vec<Part>,
    score: f64,
}

/// Candidate `i` of a search seeded with `seed`: the sampler index it used
/// and its draw. `sample` exposes the same stream, so a drawn layout is
/// found again by a search with the same seed.
pub fn candidate_draw(
    samplers: &SamplerSet,
    lib: &Library,
    seed: u64,
    i: usize,
    limits: &ExecLimits,
) -> Result<(usize, Sample), ExecError> {
    use rand::Rng;
    let mut rng = child_rng(seed, &format!("candidate:{i}"));
    let k = rng.random_range(0..samplers.samplers.len());
    let draw = run_sampler(
        lib,
        &samplers.samplers[k],
        samplers.frame,
        rng.random(),
        limits,
    )?;
    Ok((k, draw))
}

const CHUNK: usize = 32;

/// Search for the program that best explains `target`.
///
/// Candidate `i` picks its sampler and sample seed from a stream derived from
/// `(budget.seed, i)`, so results depend only on the seed and sampler list
/// unless the timeout fires.
pub fn infer_program(
    target: &TargetObservation,
    samplers: &SamplerSet,
    lib: &Library,
    budget: &SearchBudget,
    cfg: &PipelineConfig,
    progress: Option<&(dyn Fn(&Progress) + Sync)>,
) -> Result<InferenceResult, SearchError> {
    if samplers.samplers.is_empty() {
        return Err(SearchError::NoSamplers);
    }
    if target.is_empty() {
        return Err(SearchError::EmptyTarget);
    }
    let prepared = Prepared::new(target)?;
    let start = Instant::now();
    let limits = ExecLimits::default();
    let mut best: Option<Candidate> = None;
    let mut samples = 0;
    let mut merges = 0;
    let mut timed_out = false;

    while samples < budget.max_samples {
        if let Some(t) = budget.timeout_s {
            if start.elapsed().as_secs_f64() >= t {
                timed_out = true;
                break;
            }
        }
        let end = (samples + CHUNK).min(budget.max_samples);
        let chunk: Vec<Option<Candidate>> = (samples..end)
            .into_par_iter()
            .map(|i| {
                let (_, draw) = candidate_draw(samplers, lib, budget.seed, i, &limits).ok()?;
                let score = prepared.score(&draw.program, &draw.parts, cfg, budget.seed);
                Some(Candidate {
                    program: draw.program,
                    parts: draw.parts,
                    score,
                })
            })
            .collect();
        samples = end;
        for cand in chunk.into_iter().flatten() {
            match &mut best {
                None => best = Some(cand),
                Some(b) if cand.score < b.score => *b = cand,
                Some(b) => {
                    if let Prepared::Primitives(t) = &prepared {
                        let merged = merge_improve(&b.program, &cand.program, t, lib, cfg);
                        if merged != b.program {
                            let parts = execute_program(lib, &merged, &limits)
                                .map(|e| e.parts)
                                .unwrap_or_default();
                            b.score = prepared.score(&merged, &parts, cfg, budget.seed);
                            b.program = merged;
                            b.parts = parts;
                            merges += 1;
                        }
                    }
                }
            }
        }
        if let (Some(cb), Some(b)) = (progress, &best) {
            cb(&Progress {
                samples,
                best_score: b.score,
                best_program: print_program(&b.program),
            });
        }
    }
    let best = best.ok_or(SearchError::NoValidCandidate)?;
    let metrics = score_parts(&best.program, &best.parts, target, lib, cfg);
    Ok(InferenceResult {
        program: print_program(&best.program),
        program_ast: best.program,
        score: best.score,
        metrics,
        samples,
        merges,
        elapsed_s: start.elapsed().as_secs_f64(),
        seed: budget.seed,
        timed_out,
    })
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReconstructionMetrics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub match_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chamfer: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fscore: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iou: Option<f64>,
}

/// Modality-appropriate reconstruction metrics. Programs that fail to run
/// are scored as producing nothing.
pub fn score_reconstruction(
    prog: &ShapeProgram,
    target: &TargetObservation,
    lib: &Library,
    cfg: &PipelineConfig,
) -> ReconstructionMetrics {
    let parts = execute_program(lib, prog, &ExecLimits::default())
        .map(|e| e.parts)
        .unwrap_or_default();
    score_parts(prog, &parts, target, lib, cfg)
}

fn score_parts(
    prog: &ShapeProgram,
    parts: &[Part],
    target: &TargetObservation,
    _lib: &Library,
    cfg: &PipelineConfig,
) -> ReconstructionMetrics {
    let mut m = ReconstructionMetrics::default();
    match target {
        TargetObservation::Primitives(t) => {
            let o = objective_of_parts(prog, parts, t, cfg);
            m.match_error = Some(o.geo_term);
            m.objective = Some(o.total);
        }
        TargetObservation::Pointcloud(c) => {
            let target = normalize_points(&c.points, NormalizeMode::UnitBox)
                .map(|(p, _)| PointCloud::new(p))
                .unwrap_or_default();
            let pred = normalize_parts(parts, NormalizeMode::UnitBox)
                .ok()
                .and_then(|(p, _)| sample_points(&p, cfg.n_points, 0).ok());
            match pred {
                Some(pc) => {
                    m.chamfer = Some(chamfer(&pc, &target).unwrap_or(f64::INFINITY));
                    m.fscore = Some(fscore(&pc, &target, cfg.fscore_tau).unwrap_or(0.0));
                }
                None => {
                    m.chamfer = Some(f64::INFINITY);
                    m.fscore = Some(0.0);
                }
            }
        }
        TargetObservation::Voxels(g) => {
            let pred = match normalize_parts(parts, NormalizeMode::UnitBox) {
                Ok((p, _)) => voxelize(&p, g.resolution, g.lo, g.hi),
                Err(_) => VoxelGrid::empty(g.resolution, g.lo, g.hi),
            };
            m.iou = Some(iou(&pred, g).unwrap_or(0.0));
        }
    }
    m
}

/// Label every part: `make_part` parts keep their own label, function
/// outputs take the function's voted label (empty when unvoted).
pub fn assign_labels(ex: &Execution, voter: &LabelVoter) -> Vec<Part> {
    ex.parts
        .iter()
        .zip(&ex.provenance)
        .map(|(p, prov)| {
            let label = if prov.fn_name == "make_part" {
                p.label.clone()
            } else {
                voter.winner(&prov.fn_name).unwrap_or("").to_string()
            };
            Part { label, ..p.clone() }
        })
        .collect()
}

#[cfg(test)]
mod tests;
