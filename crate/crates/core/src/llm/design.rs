//! End-to-end library design: interface → applications → implementations →
//! validation → seed programs → samplers.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::coverage::{CoverageReport, StructureRef};
use super::provider::Provider;
use super::stages::{
    stage_applications, stage_implementations, stage_interface, stage_sampler, CandidateRecord,
    RejectedLine, SamplerContext,
};
use super::LlmError;
use crate::config::PipelineConfig;
use crate::geometry::Transform;
use crate::interpreter::bounding_frame;
use crate::seedset::{SeedSet, SeedShape};
use crate::shape::{CoordFrame, Vec3};
use crate::shapescript::{print_library, print_samplers, quantize_frame, Library, Sampler};
use crate::validation::{
    assemble_seed_programs, build_label_voter, expand_parameter_sets, group_targets,
    proposals_by_function, select_implementation, validate_function, ApplicationProposal,
    LabelVoter, PruneReason, SeedProgram, Selection, ValidatedApplication, ValidationReport,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionOutcome {
    pub fn_name: String,
    pub proposals: usize,
    pub reparameterizations: usize,
    pub candidates: Vec<CandidateRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<ValidationReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<Selection>,
    /// Why the function is not in the final library.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub removed: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignOutput {
    pub interface: Library,
    pub interface_dropped: Vec<(String, String)>,
    pub library: Library,
    pub functions: Vec<FunctionOutcome>,
    pub proposals: Vec<ApplicationProposal>,
    pub pruned: Vec<(ApplicationProposal, PruneReason)>,
    pub skipped_lines: Vec<RejectedLine>,
    pub validated: Vec<ValidatedApplication>,
    /// Programs over the unit-sphere-normalized seed shapes.
    pub seed_programs: Vec<SeedProgram>,
    pub normalization: Vec<Transform>,
    pub voter: LabelVoter,
    pub samplers: Vec<Sampler>,
    pub sampler_frame: CoordFrame,
    pub coverage: Vec<CoverageReport>,
}

impl DesignOutput {
    /// Fraction of seed parts explained by library calls.
    pub fn covered_fraction(&self, shapes: &SeedSet) -> f64 {
        let covered: usize = self.seed_programs.iter().map(|p| p.covered_parts()).sum();
        covered as f64 / shapes.part_count().max(1) as f64
    }

    pub fn library_source(&self) -> String {
        print_library(&self.library)
    }

    pub fn sampler_source(&self) -> String {
        print_samplers(&self.samplers)
    }

    /// Write the artifacts; returns the file names written, in order.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<Vec<String>> {
        std::fs::create_dir_all(dir)?;
        let files: Vec<(&str, String)> = vec![
            ("library.ss", self.library_source()),
            ("samplers.ss", self.sampler_source()),
            ("sampler_frame.json", to_json(&self.sampler_frame)),
            ("seed_programs.json", to_json(&self.seed_programs)),
            ("validation.json", to_json(&self.functions)),
            ("proposals.json", to_json(&self.proposals)),
            ("label_voter.json", to_json(&self.voter)),
            ("coverage.json", to_json(&self.coverage)),
        ];
        let mut names = Vec::new();
        for (name, text) in files {
            std::fs::write(dir.join(name), text)?;
            names.push(name.to_string());
        }
        Ok(names)
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Frame the samplers draw into: the mean bounding frame of the normalized
/// seed shapes.
pub fn sampler_frame(shapes: &[SeedShape]) -> CoordFrame {
    let frames: Vec<CoordFrame> = shapes
        .iter()
        .filter_map(|s| bounding_frame(&s.parts))
        .collect();
    if frames.is_empty() {
        return CoordFrame::new(Vec3::ZERO, Vec3::splat(1.0));
    }
    let n = frames.len() as f64;
    let sum = |f: fn(&CoordFrame) -> Vec3| {
        frames.iter().map(f).fold(Vec3::ZERO, |a, b| a + b) * (1.0 / n)
    };
    // centering leaves round-off residue on symmetric axes
    let snap =
        |v: Vec3| Vec3::from_array(v.to_array().map(|x| if x.abs() < 1e-9 { 0.0 } else { x }));
    quantize_frame(&CoordFrame::new(snap(sum(|f| f.center)), sum(|f| f.dims)))
}

pub fn run_design(
    seed_set: &SeedSet,
    descriptions: &[String],
    provider: &dyn Provider,
    cfg: &PipelineConfig,
    seed: u64,
) -> Result<DesignOutput, LlmError> {
    cfg.validate()
        .map_err(|e| LlmError::Config(e.to_string()))?;
    let (normalized, transforms) = seed_set
        .normalized()
        .map_err(|e| LlmError::Config(e.to_string()))?;
    let shapes = &normalized.shapes;

    let iface = stage_interface(descriptions, provider)?;
    let interface = iface.library.clone();
    if interface.is_empty() {
        return Err(LlmError::UnparseableResponse(
            "no usable function signatures".into(),
        ));
    }

    let mut proposals = Vec::new();
    let mut pruned = Vec::new();
    let mut skipped = Vec::new();
    for shape in shapes {
        match stage_applications(shape, &interface, provider, cfg.k_a) {
            Ok(o) => {
                proposals.extend(o.proposals);
                pruned.extend(o.pruned);
                skipped.extend(o.skipped);
            }
            Err(e) => log::warn!("no applications for `{}`: {e}", shape.id),
        }
    }

    let by_fn = proposals_by_function(&proposals);
    let mut functions = Vec::new();
    let mut library = Library::new();
    let mut validated = Vec::new();
    for f in interface.functions.values() {
        let mut outcome = FunctionOutcome {
            fn_name: f.name.clone(),
            proposals: 0,
            reparameterizations: 0,
            candidates: Vec::new(),
            report: None,
            selection: None,
            removed: None,
        };
        let props = by_fn.get(&f.name).cloned().unwrap_or_default();
        outcome.proposals = props.len();
        if props.is_empty() {
            outcome.removed = Some("no surviving application proposals".into());
            functions.push(outcome);
            continue;
        }
        let imp = match stage_implementations(f, &props, shapes, &interface, provider, cfg.k_i) {
            Ok(imp) => imp,
            Err(e) => {
                outcome.removed = Some(e.to_string());
                functions.push(outcome);
                continue;
            }
        };
        outcome.candidates = imp.candidates.clone();
        outcome.reparameterizations = imp.reparameterizations.len();
        let mut pool = props.clone();
        pool.extend(imp.reparameterizations.iter().cloned());
        let vectors = match expand_parameter_sets(&pool, f, cfg, seed) {
            Ok(v) => v,
            Err(e) => {
                outcome.removed = Some(e.to_string());
                functions.push(outcome);
                continue;
            }
        };
        let report = validate_function(
            &f.name,
            &imp.bodies,
            &vectors,
            &pool,
            shapes,
            &interface,
            cfg,
        );
        let selection = select_implementation(&report, cfg);
        match &selection {
            Selection::Chosen { impl_index } => {
                library.insert(imp.bodies[*impl_index].clone());
                validated.extend(report.applications_of(*impl_index).cloned());
            }
            Selection::Rejected {
                best_distinct_shapes,
            } => {
                outcome.removed = Some(format!(
                    "best implementation validated on {best_distinct_shapes} shape(s), need {}",
                    cfg.min_validations
                ));
            }
        }
        outcome.report = Some(report);
        outcome.selection = Some(selection);
        functions.push(outcome);
    }
    for o in &functions {
        if let Some(r) = &o.removed {
            log::info!("`{}` removed: {r}", o.fn_name);
        }
    }
    if library.is_empty() {
        return Err(LlmError::NoValidatedFunctions);
    }

    let seed_programs = assemble_seed_programs(&validated, shapes, cfg);
    let voter = build_label_voter(&validated, shapes);
    let structures: Vec<StructureRef> = validated
        .iter()
        .filter_map(|a| {
            let shape = shapes.iter().find(|s| s.id == a.shape_id)?;
            let group: Vec<String> = a.part_group.iter().map(|i| i.to_string()).collect();
            Some(StructureRef {
                id: format!("{}[{}]", a.shape_id, group.join(",")),
                fn_name: a.fn_name.clone(),
                parts: group_targets(shape, &a.part_group),
            })
        })
        .collect();
    let frame = sampler_frame(shapes);
    let examples: Vec<_> = seed_programs
        .iter()
        .map(|p| (p.shape_id.clone(), p.program.clone()))
        .collect();
    let sampled = stage_sampler(
        &SamplerContext {
            lib: &library,
            seed_programs: &examples,
            structures: &structures,
            frame,
            seed,
        },
        provider,
        cfg,
    )?;

    Ok(DesignOutput {
        interface,
        interface_dropped: iface.dropped,
        library,
        functions,
        proposals,
        pruned,
        skipped_lines: skipped,
        validated,
        seed_programs,
        normalization: transforms,
        voter,
        samplers: sampled.versions,
        sampler_frame: frame,
        coverage: sampled.coverage,
    })
}

/// Re-run geometric validation of an existing library's implementations on
/// stored proposals (no provider calls).
pub fn revalidate(
    lib: &Library,
    proposals: &[ApplicationProposal],
    seed_set: &SeedSet,
    cfg: &PipelineConfig,
    seed: u64,
) -> Result<BTreeMap<String, (ValidationReport, Selection)>, LlmError> {
    let (normalized, _) = seed_set
        .normalized()
        .map_err(|e| LlmError::Config(e.to_string()))?;
    let mut out = BTreeMap::new();
    for (name, props) in proposals_by_function(proposals) {
        let Some(f) = lib.get(&name) else { continue };
        if f.body.is_none() {
            continue;
        }
        let vectors = expand_parameter_sets(&props, f, cfg, seed)
            .map_err(|e| LlmError::Config(e.to_string()))?;
        let report = validate_function(
            &name,
            std::slice::from_ref(f),
            &vectors,
            &props,
            &normalized.shapes,
            lib,
            cfg,
        );
        let sel = select_implementation(&report, cfg);
        out.insert(name, (report, sel));
    }
    Ok(out)
}
