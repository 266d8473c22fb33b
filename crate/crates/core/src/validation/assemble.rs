use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{group_frame, group_targets, ValidatedApplication};
use crate::config::PipelineConfig;
use crate::seedset::SeedShape;
use crate::shapescript::{quantize_frame, statement_dof, ProgramStmt, ShapeProgram};

/// DoF of a `make_part` statement: name, `frame`, six numbers, label.
pub const MAKE_PART_DOF: usize = 9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedProgram {
    pub shape_id: String,
    pub program: ShapeProgram,
    /// Accepted applications, in program order.
    pub applications: Vec<ValidatedApplication>,
    /// Parts left to `make_part`, in program order.
    pub fallback_parts: Vec<usize>,
}

impl SeedProgram {
    pub fn covered_parts(&self) -> usize {
        self.applications.iter().map(|a| a.part_group.len()).sum()
    }
}

fn call_stmt(app: &ValidatedApplication, shape: &SeedShape) -> Option<ProgramStmt> {
    let frame = group_frame(&group_targets(shape, &app.part_group))?;
    Some(ProgramStmt::Call {
        fn_name: app.fn_name.clone(),
        frame,
        args: app.params.0.clone(),
    })
}

/// Greedy program per seed shape.
///
/// Applications are ranked by `(dof_weight·dof + geo_weight·error) / |group|`
/// and taken in that order when their group is disjoint from everything
/// already covered and replacing the group's `make_part` statements lowers
/// the objective: `dof_weight·dof + geo_weight·|group|·error/|shape|` must be
/// below `dof_weight·9·|group|`. Uncovered parts become `make_part`s.
pub fn assemble_seed_programs(
    validated: &[ValidatedApplication],
    shapes: &[SeedShape],
    cfg: &PipelineConfig,
) -> Vec<SeedProgram> {
    shapes
        .iter()
        .map(|shape| {
            let n_parts = shape.parts.len() as f64;
            let mut ranked: Vec<(f64, f64, &ValidatedApplication, ProgramStmt)> = validated
                .iter()
                .filter(|a| a.shape_id == shape.id && !a.part_group.is_empty())
                .filter(|a| a.part_group.iter().all(|&i| i < shape.parts.len()))
                .filter_map(|a| {
                    let stmt = call_stmt(a, shape)?;
                    let dof = statement_dof(&stmt) as f64;
                    let n = a.part_group.len() as f64;
                    let score = (cfg.dof_weight * dof + cfg.geo_weight * a.error) / n;
                    let gain = cfg.dof_weight * dof + cfg.geo_weight * n * a.error / n_parts
                        - cfg.dof_weight * MAKE_PART_DOF as f64 * n;
                    Some((score, gain, a, stmt))
                })
                .collect();
            // stable: equal scores keep the input order
            ranked.sort_by(|x, y| x.0.total_cmp(&y.0));

            let mut covered: HashSet<usize> = HashSet::new();
            let mut statements = Vec::new();
            let mut applications = Vec::new();
            for (_, gain, app, stmt) in ranked {
                if gain >= 0.0 || app.part_group.iter().any(|i| covered.contains(i)) {
                    continue;
                }
                covered.extend(app.part_group.iter().copied());
                statements.push(stmt);
                applications.push(app.clone());
            }
            let mut fallback_parts = Vec::new();
            for (i, p) in shape.parts.iter().enumerate() {
                if !covered.contains(&i) {
                    statements.push(ProgramStmt::MakePart {
                        frame: quantize_frame(&p.frame()),
                        label: p.label.clone(),
                    });
                    fallback_parts.push(i);
                }
            }
            SeedProgram {
                shape_id: shape.id.clone(),
                program: ShapeProgram::new(statements),
                applications,
                fallback_parts,
            }
        })
        .collect()
}

/// Per-function histogram of the seed-part labels each function explained.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LabelVoter {
    pub histograms: BTreeMap<String, BTreeMap<String, usize>>,
}

impl LabelVoter {
    pub fn add(&mut self, fn_name: &str, label: &str) {
        if label.is_empty() {
            return;
        }
        *self
            .histograms
            .entry(fn_name.to_string())
            .or_default()
            .entry(label.to_string())
            .or_default() += 1;
    }

    /// Most frequent label; ties go to the lexicographically smallest.
    pub fn winner(&self, fn_name: &str) -> Option<&str> {
        let h = self.histograms.get(fn_name)?;
        // BTreeMap iterates labels in ascending order; keep the first maximum
        let mut best: Option<(&str, usize)> = None;
        for (label, &count) in h {
            if best.is_none_or(|(_, c)| count > c) {
                best = Some((label, count));
            }
        }
        best.map(|(l, _)| l)
    }

    pub fn winners(&self) -> BTreeMap<String, String> {
        self.histograms
            .keys()
            .filter_map(|f| Some((f.clone(), self.winner(f)?.to_string())))
            .collect()
    }
}

pub fn build_label_voter(validated: &[ValidatedApplication], shapes: &[SeedShape]) -> LabelVoter {
    let mut voter = LabelVoter::default();
    for a in validated {
        let Some(shape) = shapes.iter().find(|s| s.id == a.shape_id) else {
            continue;
        };
        for &i in &a.part_group {
            if let Some(p) = shape.parts.get(i) {
                voter.add(&a.fn_name, &p.label);
            }
        }
    }
    voter
}
