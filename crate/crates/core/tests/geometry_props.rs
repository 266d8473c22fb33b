//! Metric invariants of the cuboid geometry.

use proptest::prelude::*;
use shapekit::geometry::{
    chamfer, fscore, iou, match_error, mmcd, sample_points, voxelize, ExtendedError, PointCloud,
};
use shapekit::{Part, Vec3};

fn vec3(lo: f64, hi: f64) -> impl Strategy<Value = Vec3> {
    (lo..hi, lo..hi, lo..hi).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn part() -> impl Strategy<Value = Part> {
    (vec3(0.02, 0.8), vec3(-0.6, 0.6)).prop_map(|(d, c)| Part::unlabeled(d, c))
}

fn layout(max: usize) -> impl Strategy<Value = Vec<Part>> {
    prop::collection::vec(part(), 1..=max)
}

fn shifted(parts: &[Part], t: Vec3) -> Vec<Part> {
    parts
        .iter()
        .map(|p| Part::unlabeled(p.dims, p.center + t))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn mmcd_is_a_symmetric_translation_invariant_distance(a in part(), b in part(), t in vec3(-2.0, 2.0)) {
        let d = mmcd(&a, &b);
        prop_assert!(d >= 0.0);
        prop_assert_eq!(mmcd(&a, &a), 0.0);
        prop_assert!((d - mmcd(&b, &a)).abs() < 1e-12);
        let moved = mmcd(&shifted(&[a], t)[0], &shifted(&[b], t)[0]);
        prop_assert!((d - moved).abs() < 1e-9);
    }

    #[test]
    fn match_error_ignores_part_order(
        (pred, target, perm) in layout(7).prop_flat_map(|p| {
            let n = p.len();
            (Just(p), prop::collection::vec(part(), n), Just((0..n).collect::<Vec<_>>()).prop_shuffle())
        })
    ) {
        let shuffled: Vec<Part> = perm.iter().map(|&i| pred[i].clone()).collect();
        let a = match_error(&pred, &target, f64::INFINITY).value();
        let b = match_error(&shuffled, &target, f64::INFINITY).value();
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert_eq!(match_error(&pred, &pred, 0.0), ExtendedError::Finite(0.0));
    }

    #[test]
    fn cardinality_mismatch_is_infinite(a in layout(5), extra in part()) {
        let mut b = a.clone();
        b.push(extra);
        prop_assert_eq!(match_error(&a, &b, f64::INFINITY), ExtendedError::Infinite);
    }

    #[test]
    fn match_error_never_exceeds_identity_pairing(a in layout(6), seed in any::<u64>()) {
        let b: Vec<Part> = shifted(&a, Vec3::new((seed % 7) as f64 * 0.01, 0.0, 0.02));
        let identity: f64 = a.iter().zip(&b).map(|(p, q)| mmcd(p, q)).sum::<f64>() / a.len() as f64;
        prop_assert!(match_error(&a, &b, f64::INFINITY).value() <= identity + 1e-12);
    }

    #[test]
    fn point_metrics_are_exact_on_identical_clouds(parts in layout(4), seed in any::<u64>()) {
        let pc = sample_points(&parts, 256, seed).unwrap();
        prop_assert_eq!(pc.points.len(), 256);
        prop_assert_eq!(chamfer(&pc, &pc).unwrap(), 0.0);
        prop_assert_eq!(fscore(&pc, &pc, 0.01).unwrap(), 100.0);
        let far = PointCloud::new(pc.points.iter().map(|p| *p + Vec3::splat(10.0)).collect());
        prop_assert_eq!(fscore(&pc, &far, 0.01).unwrap(), 0.0);
    }

    #[test]
    fn iou_is_symmetric_and_bounded(a in layout(4), b in layout(4)) {
        let (lo, hi) = (Vec3::splat(-1.0), Vec3::splat(1.0));
        let (ga, gb) = (voxelize(&a, 24, lo, hi), voxelize(&b, 24, lo, hi));
        if let (Ok(x), Ok(y)) = (iou(&ga, &gb), iou(&gb, &ga)) {
            prop_assert_eq!(x, y);
            prop_assert!((0.0..=1.0).contains(&x));
        }
        if ga.count() > 0 {
            prop_assert_eq!(iou(&ga, &ga).unwrap(), 1.0);
        }
    }
}
