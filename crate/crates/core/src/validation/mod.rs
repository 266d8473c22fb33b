//! Geometric grounding of proposed abstraction functions.
//!
//! Proposals say "function f with these arguments explains this group of
//! parts". Validation expands the proposed arguments into a candidate grid,
//! runs each candidate implementation on every proposed group, and keeps
//! only implementations whose outputs match seed-set geometry.
//!
//! Seed shapes passed to this module are expected to be normalized to the
//! unit sphere already (see [`crate::seedset::SeedSet::normalized`]).

mod assemble;
mod expand;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::PipelineConfig;
use crate::geometry::match_error;
use crate::interpreter::{execute_function_with, group_parts, ExecLimits};
use crate::seedset::SeedShape;
use crate::shape::{CoordFrame, Part};
use crate::shapescript::{quantize_frame, DocString, Library, LibraryFunction, Literal};

pub use assemble::{assemble_seed_programs, build_label_voter, LabelVoter, SeedProgram};
pub use expand::{dedup_floats, expand_parameter_sets};

/// Where a proposal came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProposalSource {
    /// An application-proposal round.
    Application,
    /// A parameterization returned alongside an implementation.
    Reparameterization,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApplicationProposal {
    pub shape_id: String,
    pub fn_name: String,
    /// One entry per non-frame parameter; `None` is the masked value `?`.
    pub args: Vec<Option<Literal>>,
    pub part_group: Vec<usize>,
    pub proposal_round: usize,
    pub source: ProposalSource,
}

impl ApplicationProposal {
    /// The argument vector when every entry is concrete.
    pub fn concrete_args(&self) -> Option<Vec<Literal>> {
        self.args.iter().cloned().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(pub Vec<Literal>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidatedApplication {
    pub shape_id: String,
    pub fn_name: String,
    pub params: ParamVector,
    pub part_group: Vec<usize>,
    pub error: f64,
    pub impl_index: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("no proposals for `{0}`")]
    NoProposals(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneReason {
    EmptyGroup,
    DuplicateIndex,
    IndexOutOfRange,
    CountNotInValidOptions { count: usize },
}

/// Reject proposals whose group size is not a valid output count.
pub fn prune_proposal(p: &ApplicationProposal, doc: &DocString) -> Result<(), PruneReason> {
    if p.part_group.is_empty() {
        return Err(PruneReason::EmptyGroup);
    }
    let unique: BTreeSet<_> = p.part_group.iter().collect();
    if unique.len() != p.part_group.len() {
        return Err(PruneReason::DuplicateIndex);
    }
    let count = p.part_group.len();
    if !doc.valid_options.contains(&(count as i64)) {
        return Err(PruneReason::CountNotInValidOptions { count });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImplStats {
    pub impl_index: usize,
    pub validated_groups: usize,
    pub distinct_shapes: usize,
    /// Mean best error over validated groups; `None` when nothing validated.
    pub mean_error: Option<f64>,
    /// Candidate executions that raised an error.
    pub execution_failures: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub fn_name: String,
    pub param_vectors: usize,
    pub groups: usize,
    pub impls: Vec<ImplStats>,
    /// Best-error record per (implementation, group), all implementations.
    pub applications: Vec<ValidatedApplication>,
}

impl ValidationReport {
    pub fn applications_of(
        &self,
        impl_index: usize,
    ) -> impl Iterator<Item = &ValidatedApplication> {
        self.applications
            .iter()
            .filter(move |a| a.impl_index == impl_index)
    }
}

/// A distinct proposed group: (shape index, sorted part indices).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct GroupKey(usize, Vec<usize>);

fn distinct_groups(proposals: &[ApplicationProposal], shapes: &[SeedShape]) -> Vec<GroupKey> {
    let index: HashMap<&str, usize> = shapes
        .iter()
        .enumerate()
        .map(|(i, s)| (s.id.as_str(), i))
        .collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for p in proposals {
        let Some(&si) = index.get(p.shape_id.as_str()) else {
            log::warn!("proposal references unknown shape `{}`", p.shape_id);
            continue;
        };
        let mut g = p.part_group.clone();
        g.sort_unstable();
        g.dedup();
        if g.is_empty() || g.iter().any(|&i| i >= shapes[si].parts.len()) {
            continue;
        }
        let key = GroupKey(si, g);
        if seen.insert(key.clone()) {
            out.push(key);
        }
    }
    out
}

/// The frame a function is asked to fill for a target group, rounded to the
/// printed precision so recorded applications replay exactly.
pub fn group_frame(parts: &[Part]) -> Option<CoordFrame> {
    group_parts(parts).ok().map(|f| quantize_frame(&f))
}

pub fn group_targets(shape: &SeedShape, group: &[usize]) -> Vec<Part> {
    group.iter().map(|&i| shape.parts[i].clone()).collect()
}

struct Outcome {
    best: Option<(f64, usize)>,
    failures: usize,
    first_failure: Option<String>,
}

fn sweep_group(
    lib: &Library,
    implementation: &LibraryFunction,
    target: &[Part],
    vectors: &[ParamVector],
    tau: f64,
    limits: &ExecLimits,
) -> Outcome {
    let mut out = Outcome {
        best: None,
        failures: 0,
        first_failure: None,
    };
    let Some(cf) = group_frame(target) else {
        return out;
    };
    for (vi, v) in vectors.iter().enumerate() {
        match execute_function_with(lib, implementation, cf, &v.0, limits) {
            Ok(res) => {
                if let Some(e) = match_error(&res.parts, target, tau).finite() {
                    if out.best.is_none_or(|(b, _)| e < b) {
                        out.best = Some((e, vi));
                        if e == 0.0 {
                            break;
                        }
                    }
                }
            }
            Err(err) => {
                out.failures += 1;
                if out.first_failure.is_none() {
                    out.first_failure = Some(err.to_string());
                }
            }
        }
    }
    out
}

/// Run every implementation against every proposed group under every
/// parameter vector, keeping the best finite error per (implementation, group).
pub fn validate_function(
    fn_name: &str,
    impls: &[LibraryFunction],
    vectors: &[ParamVector],
    proposals: &[ApplicationProposal],
    shapes: &[SeedShape],
    lib: &Library,
    cfg: &PipelineConfig,
) -> ValidationReport {
    let groups = distinct_groups(proposals, shapes);
    let limits = ExecLimits::default();
    let jobs: Vec<(usize, usize)> = (0..impls.len())
        .flat_map(|i| (0..groups.len()).map(move |g| (i, g)))
        .collect();
    let outcomes: Vec<Outcome> = jobs
        .par_iter()
        .map(|&(i, g)| {
            let GroupKey(si, idx) = &groups[g];
            let target = group_targets(&shapes[*si], idx);
            sweep_group(lib, &impls[i], &target, vectors, cfg.tau_match, &limits)
        })
        .collect();

    let mut applications = Vec::new();
    let mut stats: Vec<ImplStats> = (0..impls.len())
        .map(|i| ImplStats {
            impl_index: i,
            validated_groups: 0,
            distinct_shapes: 0,
            mean_error: None,
            execution_failures: 0,
            first_failure: None,
        })
        .collect();
    let mut shapes_hit: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); impls.len()];
    let mut error_sums = vec![0.0; impls.len()];
    for (&(i, g), o) in jobs.iter().zip(outcomes) {
        let st = &mut stats[i];
        st.execution_failures += o.failures;
        if st.first_failure.is_none() {
            st.first_failure = o.first_failure;
        }
        if let Some((e, vi)) = o.best {
            let GroupKey(si, idx) = &groups[g];
            st.validated_groups += 1;
            shapes_hit[i].insert(*si);
            error_sums[i] += e;
            applications.push(ValidatedApplication {
                shape_id: shapes[*si].id.clone(),
                fn_name: fn_name.to_string(),
                params: vectors[vi].clone(),
                part_group: idx.clone(),
                error: e,
                impl_index: i,
            });
        }
    }
    for (i, st) in stats.iter_mut().enumerate() {
        st.distinct_shapes = shapes_hit[i].len();
        if st.validated_groups > 0 {
            st.mean_error = Some(error_sums[i] / st.validated_groups as f64);
        }
    }
    ValidationReport {
        fn_name: fn_name.to_string(),
        param_vectors: vectors.len(),
        groups: groups.len(),
        impls: stats,
        applications,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Selection {
    Chosen { impl_index: usize },
    Rejected { best_distinct_shapes: usize },
}

/// Rank by (distinct shapes desc, groups desc, mean error asc, index asc);
/// the winner must cover at least `min_validations` distinct shapes.
pub fn select_implementation(report: &ValidationReport, cfg: &PipelineConfig) -> Selection {
    let best = report.impls.iter().min_by(|a, b| {
        b.distinct_shapes
            .cmp(&a.distinct_shapes)
            .then(b.validated_groups.cmp(&a.validated_groups))
            .then(
                a.mean_error
                    .unwrap_or(f64::INFINITY)
                    .total_cmp(&b.mean_error.unwrap_or(f64::INFINITY)),
            )
            .then(a.impl_index.cmp(&b.impl_index))
    });
    match best {
        Some(s) if s.distinct_shapes >= cfg.min_validations => Selection::Chosen {
            impl_index: s.impl_index,
        },
        other => Selection::Rejected {
            best_distinct_shapes: other.map_or(0, |s| s.distinct_shapes),
        },
    }
}

/// Proposals grouped by function name, in first-seen order per function.
pub fn proposals_by_function(
    proposals: &[ApplicationProposal],
) -> BTreeMap<String, Vec<ApplicationProposal>> {
    let mut out: BTreeMap<String, Vec<ApplicationProposal>> = BTreeMap::new();
    for p in proposals {
        out.entry(p.fn_name.clone()).or_default().push(p.clone());
    }
    out
}
