//! Sampler quality feedback and training-data noise.

use std::collections::{BTreeMap, BTreeSet};

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geometry::{match_error, normalize_parts, ExtendedError, NormalizeMode};
use crate::interpreter::rng::{child_rng, derive_seed};
use crate::interpreter::{execute_program, run_sampler, ExecLimits};
use crate::shape::{CoordFrame, Part, Vec3};
use crate::shapescript::{called_functions, Library, Literal, ParamType, ProgramStmt, Sampler};

/// A part group the library was validated on, used to check that samplers
/// can reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureRef {
    pub id: String,
    pub fn_name: String,
    pub parts: Vec<Part>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureGap {
    pub id: String,
    pub fn_name: String,
    pub min_error: ExtendedError,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CoverageReport {
    pub draws: usize,
    pub failed_draws: usize,
    pub functions_used: BTreeSet<String>,
    pub unused_functions: BTreeSet<String>,
    /// `function.param` → declared enum values never passed.
    pub enum_values_unused: BTreeMap<String, BTreeSet<String>>,
    pub valid_option_counts_seen: BTreeMap<String, BTreeSet<i64>>,
    /// Declared valid options never produced, per used function.
    pub valid_options_unseen: BTreeMap<String, BTreeSet<i64>>,
    pub structure_gap_flags: Vec<StructureGap>,
}

impl CoverageReport {
    pub fn is_clean(&self) -> bool {
        self.unused_functions.is_empty()
            && self.enum_values_unused.is_empty()
            && self.valid_options_unseen.is_empty()
            && self.structure_gap_flags.is_empty()
            && self.failed_draws == 0
    }

    /// Human-readable gap list for the feedback prompt.
    pub fn feedback_lines(&self) -> Vec<String> {
        let mut out = Vec::new();
        for f in &self.unused_functions {
            out.push(format!("- function `{f}` is never called"));
        }
        for (k, vals) in &self.enum_values_unused {
            for v in vals {
                out.push(format!("- value `{v}` of `{k}` is never used"));
            }
        }
        for (f, counts) in &self.valid_options_unseen {
            let list: Vec<String> = counts.iter().map(|c| c.to_string()).collect();
            out.push(format!(
                "- `{f}` never produces {} parts",
                list.join(" or ")
            ));
        }
        for g in &self.structure_gap_flags {
            let e = match g.min_error {
                ExtendedError::Finite(v) => format!("{v:.3}"),
                ExtendedError::Infinite => "no match".into(),
            };
            out.push(format!(
                "- the `{}` structure `{}` is never reproduced (closest: {e})",
                g.fn_name, g.id
            ));
        }
        if self.failed_draws > 0 {
            out.push(format!(
                "- {} of {} draws failed to execute",
                self.failed_draws, self.draws
            ));
        }
        out
    }
}

/// Draw `n` programs (sampler `i % len` with a seed derived from `(seed, i)`)
/// and tally what they use.
pub fn coverage_report(
    samplers: &[Sampler],
    lib: &Library,
    frame: CoordFrame,
    n: usize,
    seed: u64,
    structures: &[StructureRef],
    tau: f64,
) -> CoverageReport {
    let limits = ExecLimits::default();
    let mut rep = CoverageReport {
        draws: n,
        ..Default::default()
    };
    let mut enum_seen: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut sampled: BTreeMap<String, Vec<Vec<Part>>> = BTreeMap::new();
    if !samplers.is_empty() {
        for i in 0..n {
            let s = &samplers[i % samplers.len()];
            let draw_seed = u64::from_le_bytes(
                derive_seed(seed, format!("coverage:{i}").as_bytes())[..8]
                    .try_into()
                    .unwrap(),
            );
            let Ok(draw) = run_sampler(lib, s, frame, draw_seed, &limits) else {
                rep.failed_draws += 1;
                continue;
            };
            let Ok(ex) = execute_program(lib, &draw.program, &limits) else {
                rep.failed_draws += 1;
                continue;
            };
            let mut per_stmt: Vec<Vec<Part>> = vec![Vec::new(); draw.program.len()];
            for (p, prov) in ex.parts.iter().zip(&ex.provenance) {
                per_stmt[prov.statement_index].push(p.clone());
            }
            for (stmt, parts) in draw.program.statements.iter().zip(per_stmt) {
                let ProgramStmt::Call { fn_name, args, .. } = stmt else {
                    continue;
                };
                let Some(f) = lib.get(fn_name) else { continue };
                rep.functions_used.insert(fn_name.clone());
                if let Some(body) = &f.body {
                    rep.functions_used.extend(called_functions(body, lib));
                }
                for (param, a) in f.params.iter().zip(args) {
                    if let (ParamType::Enum(_), Literal::Str(v)) = (&param.ty, a) {
                        enum_seen
                            .entry(format!("{fn_name}.{}", param.name))
                            .or_default()
                            .insert(v.clone());
                    }
                }
                rep.valid_option_counts_seen
                    .entry(fn_name.clone())
                    .or_default()
                    .insert(parts.len() as i64);
                sampled.entry(fn_name.clone()).or_default().push(parts);
            }
        }
    }
    for f in lib.functions.values() {
        if !rep.functions_used.contains(&f.name) {
            rep.unused_functions.insert(f.name.clone());
        }
        for p in &f.params {
            let ParamType::Enum(opts) = &p.ty else {
                continue;
            };
            let key = format!("{}.{}", f.name, p.name);
            let seen = enum_seen.get(&key);
            let missing: BTreeSet<String> = opts
                .iter()
                .filter(|o| seen.is_none_or(|s| !s.contains(*o)))
                .cloned()
                .collect();
            if !missing.is_empty() {
                rep.enum_values_unused.insert(key, missing);
            }
        }
        if let Some(seen) = rep.valid_option_counts_seen.get(&f.name) {
            let missing: BTreeSet<i64> = f
                .doc
                .valid_options
                .iter()
                .filter(|c| !seen.contains(c))
                .copied()
                .collect();
            if !missing.is_empty() {
                rep.valid_options_unseen.insert(f.name.clone(), missing);
            }
        }
    }
    let unit = |parts: &[Part]| {
        normalize_parts(parts, NormalizeMode::UnitSphere)
            .ok()
            .map(|(p, _)| p)
    };
    let sampled_unit: BTreeMap<&String, Vec<Vec<Part>>> = sampled
        .iter()
        .map(|(k, v)| (k, v.iter().filter_map(|p| unit(p)).collect()))
        .collect();
    for s in structures {
        let Some(target) = unit(&s.parts) else {
            continue;
        };
        let best = sampled_unit
            .get(&s.fn_name)
            .into_iter()
            .flatten()
            .map(|cand| match_error(cand, &target, tau))
            .min_by(|a, b| a.value().total_cmp(&b.value()))
            .unwrap_or(ExtendedError::Infinite);
        if !best.is_finite() {
            rep.structure_gap_flags.push(StructureGap {
                id: s.id.clone(),
                fn_name: s.fn_name.clone(),
                min_error: best,
            });
        }
    }
    rep
}

/// Offset each of the six box parameters by an independent N(0, σ²) draw;
/// dimensions are clamped to at least 0.01.
pub fn perturb_parts(parts: &[Part], sigma: f64, seed: u64) -> Vec<Part> {
    if sigma == 0.0 {
        return parts.to_vec();
    }
    let normal = Normal::new(0.0, sigma.abs()).expect("finite sigma");
    let mut rng = child_rng(seed, "perturb");
    parts
        .iter()
        .map(|p| {
            let mut d = [0.0; 6];
            for x in d.iter_mut() {
                *x = normal.sample(&mut rng);
            }
            Part {
                label: p.label.clone(),
                dims: Vec3::new(p.dims.x + d[0], p.dims.y + d[1], p.dims.z + d[2])
                    .max(Vec3::splat(0.01)),
                center: Vec3::new(p.center.x + d[3], p.center.y + d[4], p.center.z + d[5]),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapescript::{parse_library, parse_samplers};

    const LIB: &str = r#"
/// @description Two or three posts.
/// @parts posts
/// @valid_options [2, 3]
/// @param n count
/// @param style look
fn posts(cf: Frame, n: int, style: enum(thin, thick)) -> PartList {
    let out = [];
    let w = cf.w / (2 * n - 1);
    if style == "thick" {
        w = w * 1.5;
    }
    for i in 0..n {
        out = out + [part(w, cf.h, cf.d, cf.min_x + w / 2 + i * (cf.w - w) / (n - 1), cf.y, cf.z)];
    }
    return out;
}

/// @description A slab.
/// @parts two slabs
/// @valid_options [2]
/// @param t thickness
fn slabs(cf: Frame, t: float) -> PartList {
    return [part(cf.w, t * cf.h, cf.d, cf.x, cf.min_y + t * cf.h / 2, cf.z), part(cf.w, t * cf.h, cf.d, cf.x, cf.max_y - t * cf.h / 2, cf.z)];
}
"#;

    fn unit() -> CoordFrame {
        CoordFrame::new(Vec3::ZERO, Vec3::splat(1.0))
    }

    #[test]
    fn flags_missing_function_and_enum_value() {
        let lib = parse_library(LIB).unwrap();
        let s = parse_samplers(
            "fn sample_shape(cf: Frame) -> PartList { posts(cf, randint(2, 3), \"thin\"); return []; }",
            &lib,
        )
        .unwrap();
        let rep = coverage_report(&s, &lib, unit(), 64, 0, &[], 0.25);
        assert_eq!(rep.draws, 64);
        assert_eq!(rep.unused_functions, BTreeSet::from(["slabs".to_string()]));
        assert_eq!(rep.functions_used, BTreeSet::from(["posts".to_string()]));
        assert_eq!(
            rep.enum_values_unused["posts.style"],
            BTreeSet::from(["thick".to_string()])
        );
        assert_eq!(
            rep.valid_option_counts_seen["posts"],
            BTreeSet::from([2, 3])
        );
        assert!(rep.valid_options_unseen.is_empty());
        let fb = rep.feedback_lines().join("\n");
        assert!(fb.contains("slabs") && fb.contains("thick"));
        assert!(!rep.is_clean());
    }

    #[test]
    fn full_sampler_is_clean() {
        let lib = parse_library(LIB).unwrap();
        let s = parse_samplers(
            "fn sample_shape(cf: Frame) -> PartList { posts(cf, randint(2, 3), choice([\"thin\", \"thick\"])); slabs(cf, uniform(0.1, 0.2)); return []; }",
            &lib,
        )
        .unwrap();
        let rep = coverage_report(&s, &lib, unit(), 256, 1, &[], 0.25);
        assert!(rep.is_clean(), "{rep:?}");
        // union of used and unused is the library
        assert_eq!(
            rep.functions_used.len() + rep.unused_functions.len(),
            lib.len()
        );
    }

    #[test]
    fn unseen_count_and_structure_gap() {
        let lib = parse_library(LIB).unwrap();
        let s = parse_samplers(
            "fn sample_shape(cf: Frame) -> PartList { posts(cf, 2, \"thin\"); return []; }",
            &lib,
        )
        .unwrap();
        let three = crate::interpreter::execute_function(
            &lib,
            "posts",
            unit(),
            &[Literal::Int(3), Literal::Str("thin".into())],
            &ExecLimits::default(),
        )
        .unwrap();
        let two = crate::interpreter::execute_function(
            &lib,
            "posts",
            CoordFrame::new(Vec3::splat(5.0), Vec3::splat(3.0)),
            &[Literal::Int(2), Literal::Str("thin".into())],
            &ExecLimits::default(),
        )
        .unwrap();
        let structures = vec![
            StructureRef {
                id: "three".into(),
                fn_name: "posts".into(),
                parts: three.parts,
            },
            // same structure elsewhere and at another scale: not a gap
            StructureRef {
                id: "two".into(),
                fn_name: "posts".into(),
                parts: two.parts,
            },
        ];
        let rep = coverage_report(&s, &lib, unit(), 16, 0, &structures, 0.25);
        assert_eq!(rep.valid_options_unseen["posts"], BTreeSet::from([3]));
        assert_eq!(rep.structure_gap_flags.len(), 1);
        assert_eq!(rep.structure_gap_flags[0].id, "three");
        assert_eq!(
            rep.structure_gap_flags[0].min_error,
            ExtendedError::Infinite
        );
    }

    #[test]
    fn empty_sampler_list_marks_everything_unused() {
        let lib = parse_library(LIB).unwrap();
        let rep = coverage_report(&[], &lib, unit(), 10, 0, &[], 0.25);
        assert_eq!(rep.unused_functions.len(), 2);
    }

    #[test]
    fn perturbation_basics() {
        let parts = vec![
            Part::new("a", Vec3::splat(1.0), Vec3::ZERO),
            Part::new("b", Vec3::splat(0.005), Vec3::ZERO),
        ];
        assert_eq!(perturb_parts(&parts, 0.0, 3), parts);
        let a = perturb_parts(&parts, 0.05, 3);
        assert_eq!(a, perturb_parts(&parts, 0.05, 3));
        assert_ne!(a, perturb_parts(&parts, 0.05, 4));
        assert_eq!(a[0].label, "a");
        assert!(a.iter().all(|p| p.dims.min_elem() >= 0.01));
    }

    #[test]
    fn perturbation_mean_recovers_width() {
        let parts = vec![Part::unlabeled(Vec3::splat(1.0), Vec3::ZERO); 10_000];
        let out = perturb_parts(&parts, 0.05, 11);
        let mean = out.iter().map(|p| p.dims.x).sum::<f64>() / 10_000.0;
        assert!((mean - 1.0).abs() < 3.0 * 0.05 / 100.0, "{mean}");
        let var = out.iter().map(|p| (p.dims.x - mean).powi(2)).sum::<f64>() / 9_999.0;
        assert!((var.sqrt() - 0.05).abs() < 0.005);
    }
}
