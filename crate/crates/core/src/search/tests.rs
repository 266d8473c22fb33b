use super::*;
use crate::geometry::voxelize;
use crate::shape::Vec3;
use crate::shapescript::{parse_library, parse_program, parse_samplers, ProgramStmt};
use crate::validation::LabelVoter;

const LIB: &str = r#"
/// @description Horizontal slats stacked inside the frame.
/// @parts one slat per count
/// @valid_options [2, 3, 4, 5]
/// @param n number of slats
/// @param gap gap between slats relative to slat height
fn slats(cf: Frame, n: int, gap: float) -> PartList {
    let out = [];
    let h = cf.h / (n + (n - 1) * gap);
    for i in 0..n {
        out = out + [part(cf.w, h, cf.d, cf.x, cf.min_y + h / 2 + i * h * (1 + gap), cf.z)];
    }
    return out;
}
"#;

const SAMPLER: &str = r#"
fn sample_shape(cf: Frame) -> PartList {
    let n = randint(2, 5);
    let g = choice([0.5, 1.0]);
    slats(frame(cf.w, cf.h / 2, cf.d, cf.x, cf.max_y - cf.h / 4, cf.z), n, g);
    make_part(frame(cf.w, cf.h / 10, cf.d, cf.x, cf.min_y + cf.h / 20, cf.z), "base");
    return [];
}
"#;

fn lib() -> Library {
    parse_library(LIB).unwrap()
}

fn samplers(lib: &Library) -> SamplerSet {
    SamplerSet {
        samplers: parse_samplers(SAMPLER, lib).unwrap(),
        frame: CoordFrame::new(Vec3::ZERO, Vec3::splat(1.0)),
    }
}

fn budget(n: usize, seed: u64) -> SearchBudget {
    SearchBudget {
        max_samples: n,
        timeout_s: None,
        seed,
    }
}

#[test]
fn objective_arithmetic() {
    let cfg = PipelineConfig::default();
    assert_eq!(Objective::new(12.0, 0.0, &cfg).total, 12.0);
    assert!((Objective::new(12.0, 0.02, &cfg).total - 12.2).abs() < 1e-12);
    assert_eq!(
        Objective::new(12.0, f64::INFINITY, &cfg).total,
        f64::INFINITY
    );

    let l = lib();
    let p = parse_program("slats(frame(1, 1, 1, 0, 0, 0), 3, 0.5);", &l).unwrap();
    let target = execute_program(&l, &p, &ExecLimits::default())
        .unwrap()
        .parts;
    let o = objective(&p, &target, &l, &cfg);
    assert_eq!((o.dof_term, o.geo_term, o.total), (10.0, 0.0, 10.0));
    assert_eq!(objective(&p, &target[..2], &l, &cfg).total, f64::INFINITY);
}

#[test]
fn in_space_target_is_recovered() {
    let l = lib();
    let s = samplers(&l);
    let draw = run_sampler(&l, &s.samplers[0], s.frame, 12345, &ExecLimits::default()).unwrap();
    let target = TargetObservation::Primitives(draw.parts.clone());
    // with the default weights a 3-slat call (10 DoF, error 0.25) beats the
    // exact 2 slats + base (19 DoF); make geometry dominate
    let cfg = PipelineConfig {
        geo_weight: 100.0,
        ..Default::default()
    };
    let res = infer_program(&target, &s, &l, &budget(200, 1), &cfg, None).unwrap();
    assert_eq!(res.program, print_program(&draw.program));
    assert_eq!(res.metrics.match_error, Some(0.0));
    assert!(!res.timed_out);
    let again = infer_program(&target, &s, &l, &budget(200, 1), &cfg, None).unwrap();
    assert_eq!(res.program, again.program);
}

#[test]
fn single_sample_budget_returns_it() {
    let l = lib();
    let s = samplers(&l);
    let far = vec![Part::unlabeled(Vec3::splat(0.1), Vec3::splat(9.0))];
    let res = infer_program(
        &TargetObservation::Primitives(far),
        &s,
        &l,
        &budget(1, 3),
        &PipelineConfig::default(),
        None,
    )
    .unwrap();
    assert_eq!(res.samples, 1);
    assert!(!res.program.is_empty());
}

#[test]
fn search_errors() {
    let l = lib();
    let mut s = samplers(&l);
    let t = TargetObservation::Primitives(vec![]);
    assert_eq!(
        infer_program(&t, &s, &l, &budget(5, 0), &PipelineConfig::default(), None).unwrap_err(),
        SearchError::EmptyTarget
    );
    s.samplers.clear();
    let t = TargetObservation::Primitives(vec![Part::unlabeled(Vec3::splat(1.0), Vec3::ZERO)]);
    assert_eq!(
        infer_program(&t, &s, &l, &budget(5, 0), &PipelineConfig::default(), None).unwrap_err(),
        SearchError::NoSamplers
    );
}

#[test]
fn progress_is_reported() {
    let l = lib();
    let s = samplers(&l);
    let t = TargetObservation::Primitives(vec![Part::unlabeled(Vec3::splat(1.0), Vec3::ZERO)]);
    let seen = std::sync::Mutex::new(Vec::new());
    let cb = |p: &Progress| seen.lock().unwrap().push(p.samples);
    infer_program(
        &t,
        &s,
        &l,
        &budget(70, 0),
        &PipelineConfig::default(),
        Some(&cb),
    )
    .unwrap();
    assert_eq!(*seen.lock().unwrap(), vec![32, 64, 70]);
}

#[test]
fn merge_replaces_make_parts_with_a_call() {
    let l = lib();
    let cfg = PipelineConfig::default();
    let call = parse_program("slats(frame(1, 1, 1, 0, 0, 0), 4, 0.5);", &l).unwrap();
    let slat_parts = execute_program(&l, &call, &ExecLimits::default())
        .unwrap()
        .parts;
    let seat = Part::new("seat", Vec3::new(1.0, 0.1, 1.0), Vec3::new(0.0, -1.0, 0.0));
    let mut target = slat_parts.clone();
    target.push(seat.clone());

    // best: every part as make_part
    let best = ShapeProgram::new(
        target
            .iter()
            .map(|p| ProgramStmt::MakePart {
                frame: crate::shapescript::quantize_frame(&p.frame()),
                label: "x".into(),
            })
            .collect(),
    );
    let before = objective(&best, &target, &l, &cfg);
    let merged = merge_improve(&best, &call, &target, &l, &cfg);
    let after = objective(&merged, &target, &l, &cfg);
    assert_eq!(merged.len(), 2);
    assert!(after.total < before.total);
    assert!((before.total - after.total - (4.0 * 9.0 - 10.0)).abs() < 1e-3);

    // same program: nothing to gain
    assert_eq!(merge_improve(&merged, &merged, &target, &l, &cfg), merged);

    // a call that explains the wrong parts raises the objective and is rejected
    let bad = parse_program("slats(frame(1, 1, 1, 5, 5, 5), 2, 0.5);", &l).unwrap();
    assert_eq!(merge_improve(&merged, &bad, &target, &l, &cfg), merged);
}

#[test]
fn reconstruction_metrics() {
    let l = lib();
    let cfg = PipelineConfig {
        n_points: 512,
        ..Default::default()
    };
    let p = parse_program("slats(frame(1, 1, 1, 0, 0, 0), 3, 0.5);", &l).unwrap();
    let parts = execute_program(&l, &p, &ExecLimits::default())
        .unwrap()
        .parts;

    let m = score_reconstruction(&p, &TargetObservation::Primitives(parts.clone()), &l, &cfg);
    assert_eq!(m.match_error, Some(0.0));
    assert_eq!(m.objective, Some(10.0));

    let (norm, _) = normalize_parts(&parts, NormalizeMode::UnitBox).unwrap();
    let cloud = sample_points(&norm, 512, 0).unwrap();
    let m = score_reconstruction(&p, &TargetObservation::Pointcloud(cloud.clone()), &l, &cfg);
    assert_eq!(m.fscore, Some(100.0));
    assert_eq!(m.chamfer, Some(0.0));

    let (lo, hi) = VoxelGrid::unit_bounds();
    let grid = voxelize(&norm, 32, lo, hi);
    let m = score_reconstruction(&p, &TargetObservation::Voxels(grid.clone()), &l, &cfg);
    assert_eq!(m.iou, Some(1.0));

    let empty = ShapeProgram::default();
    assert_eq!(
        score_reconstruction(&empty, &TargetObservation::Primitives(parts), &l, &cfg).match_error,
        Some(f64::INFINITY)
    );
    assert_eq!(
        score_reconstruction(&empty, &TargetObservation::Voxels(grid), &l, &cfg).iou,
        Some(0.0)
    );
    assert_eq!(
        score_reconstruction(&empty, &TargetObservation::Pointcloud(cloud), &l, &cfg).fscore,
        Some(0.0)
    );
}

#[test]
fn voxel_and_point_targets_search() {
    let l = lib();
    let s = samplers(&l);
    let draw = run_sampler(&l, &s.samplers[0], s.frame, 77, &ExecLimits::default()).unwrap();
    let (norm, _) = normalize_parts(&draw.parts, NormalizeMode::UnitBox).unwrap();
    let (lo, hi) = VoxelGrid::unit_bounds();
    let cfg = PipelineConfig {
        n_points: 256,
        ..Default::default()
    };
    let grid = voxelize(&norm, 24, lo, hi);
    let res = infer_program(
        &TargetObservation::Voxels(grid),
        &s,
        &l,
        &budget(64, 2),
        &cfg,
        None,
    )
    .unwrap();
    assert_eq!(res.metrics.iou, Some(1.0));
    assert_eq!(res.program, print_program(&draw.program));
    // independent samplings of one surface: chamfer is noise, not zero
    let cfg = PipelineConfig {
        n_points: 1024,
        ..cfg
    };
    let cloud = sample_points(&norm, 1024, 5).unwrap();
    let res = infer_program(
        &TargetObservation::Pointcloud(cloud),
        &s,
        &l,
        &budget(64, 2),
        &cfg,
        None,
    )
    .unwrap();
    assert_eq!(res.program, print_program(&draw.program));
}

#[test]
fn labels_follow_voter() {
    let l = lib();
    let p = parse_program(
        "slats(frame(1, 1, 1, 0, 0, 0), 2, 0.5);\nmake_part(frame(1, 1, 1, 0, 0, 0), \"arm\");",
        &l,
    )
    .unwrap();
    let ex = execute_program(&l, &p, &ExecLimits::default()).unwrap();
    let mut voter = LabelVoter::default();
    let labels: Vec<String> = assign_labels(&ex, &voter)
        .into_iter()
        .map(|p| p.label)
        .collect();
    assert_eq!(labels, vec!["", "", "arm"]);
    voter.add("slats", "back");
    let labels: Vec<String> = assign_labels(&ex, &voter)
        .into_iter()
        .map(|p| p.label)
        .collect();
    assert_eq!(labels, vec!["back", "back", "arm"]);
}
