use proptest::prelude::*;

use super::*;
use crate::shapescript::{parse_library, parse_program};

fn cube(c: Vec3, s: f64) -> Part {
    Part::unlabeled(Vec3::splat(s), c)
}

fn v(x: f64, y: f64, z: f64) -> Vec3 {
    Vec3::new(x, y, z)
}

fn max_disp(a: &Mesh, b: &Mesh) -> f64 {
    a.vertices
        .iter()
        .zip(&b.vertices)
        .map(|(p, q)| p.distance(*q))
        .fold(0.0, f64::max)
}

const CUBE_OBJ: &str =
    "# unit cube\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nv 0 0 1\nv 1 0 1\nv 1 1 1\nv 0 1 1\n\
f 1 2 3 4\nf 5 8 7 6\nf 1 5 6 2\nf 2 6 7 3\nf 3 7 8 4\nf 5 1 4 8\n";

#[test]
fn local_coordinates() {
    let c = Part::unlabeled(v(2.0, 4.0, 1.0), v(1.0, 1.0, 1.0));
    assert_eq!(local_coords(c.center, &c), Vec3::splat(0.5));
    assert_eq!(local_coords(v(2.0, 3.0, 1.5), &c), Vec3::splat(1.0));
    assert_eq!(local_coords(v(1.5, 1.0, 1.0), &c), v(0.75, 0.5, 0.5));
}

#[test]
fn surface_distances() {
    let c = cube(Vec3::ZERO, 2.0);
    assert_eq!(surface_distance(Vec3::ZERO, &c), 1.0);
    assert_eq!(surface_distance(v(0.5, 0.0, 0.0), &c), 0.5);
    assert_eq!(surface_distance(v(1.0, 0.0, 0.0), &c), 0.0);
    assert_eq!(surface_distance(v(4.0, 0.0, 0.0), &c), 3.0);
    assert!((surface_distance(v(2.0, 2.0, 0.0), &c) - 2f64.sqrt()).abs() < 1e-15);
}

#[test]
fn weights_follow_containment() {
    let layout = [cube(Vec3::ZERO, 1.0), cube(v(3.0, 0.0, 0.0), 1.0)];
    let mesh = Mesh::new(
        vec![v(0.1, 0.0, 0.0), v(1.5, 0.0, 0.0), v(-1.0, 0.0, 0.0)],
        vec![],
    )
    .unwrap();
    let w = compute_weights(&mesh, &layout, DEFAULT_EPS).unwrap();
    assert_eq!(w.rows[0], vec![(0, 1.0)]);
    // equidistant outside both: distance 1 each
    assert_eq!(w.rows[1], vec![(0, 0.5), (1, 0.5)]);
    // outside: 1/(0.5 + eps) vs 1/(3.5 + eps), normalized
    let (a, b) = (1.0 / (0.5 + 1e-6), 1.0 / (3.5 + 1e-6));
    assert!((w.rows[2][0].1 - a / (a + b)).abs() < 1e-12);
    assert!((w.rows[2][0].1 - 0.875).abs() < 1e-6);
    assert_eq!(
        compute_weights(&mesh, &[], DEFAULT_EPS).unwrap_err(),
        DeformError::EmptyLayout
    );
}

#[test]
fn shared_face_splits_evenly() {
    // two unit cubes overlapping along the plane x = 0.5
    let layout = [cube(Vec3::ZERO, 1.0), cube(v(1.0, 0.0, 0.0), 1.0)];
    let mesh = Mesh::new(vec![v(0.5, 0.0, 0.0)], vec![]).unwrap();
    let w = compute_weights(&mesh, &layout, DEFAULT_EPS).unwrap();
    // both distances are 0; eps keeps the blend finite
    let oracle = (1.0 / (0.0 + 1e-6)) / (2.0 * (1.0 / (0.0 + 1e-6)));
    assert_eq!(w.rows[0], vec![(0, oracle), (1, oracle)]);
    assert_eq!(oracle, 0.5);
}

#[test]
fn deformation_examples() {
    let src = vec![cube(Vec3::ZERO, 2.0)];
    let mesh = Mesh::new(vec![v(0.3, -0.2, 0.1), v(0.0, 0.0, 0.0)], vec![[0, 1, 1]]).unwrap();
    let w = compute_weights(&mesh, &src, DEFAULT_EPS).unwrap();

    let same = apply_deformation(
        &mesh,
        &w,
        &LayoutPair::new(src.clone(), src.clone()).unwrap(),
    )
    .unwrap();
    assert!(max_disp(&mesh, &same) <= 1e-9);
    assert_eq!(same.faces, mesh.faces);

    let doubled = vec![cube(Vec3::ZERO, 4.0)];
    let out =
        apply_deformation(&mesh, &w, &LayoutPair::new(src.clone(), doubled).unwrap()).unwrap();
    assert!(out.vertices[0].distance(v(0.6, -0.4, 0.2)) < 1e-12);

    let err = LayoutPair::new(src.clone(), vec![]).unwrap_err();
    assert_eq!(err.code(), "LayoutMismatch");
    let bad = LayoutPair {
        source: src,
        edited: vec![],
    };
    assert!(matches!(
        apply_deformation(&mesh, &w, &bad),
        Err(DeformError::LayoutMismatch { .. })
    ));
}

#[test]
fn obj_parsing() {
    let m = parse_obj(CUBE_OBJ).unwrap();
    assert_eq!((m.vertices.len(), m.faces.len()), (8, 12));
    let m = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nf 1/1/1 2//1 -1\n").unwrap();
    assert_eq!(m.faces, vec![[0, 1, 2]]);
    for bad in [
        "",
        "# nothing\n",
        "v 1 2\n",
        "v 0 0 0\nf 1 2 3\n",
        "v 0 0 0\nf 0 1 1\n",
        "v a b c\n",
    ] {
        assert_eq!(parse_obj(bad).unwrap_err().code(), "ParseError", "{bad:?}");
    }
}

#[test]
fn obj_round_trip() {
    let m = Mesh::new(
        vec![
            v(0.1, 1.0 / 3.0, -2.5e-7),
            v(1e6, 0.0, 1.0),
            v(0.0, -1.0, 0.5),
        ],
        vec![[0, 1, 2], [2, 1, 0]],
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.obj");
    save_obj(&m, &path).unwrap();
    let back = load_obj(&path).unwrap();
    assert_eq!(back.faces, m.faces);
    assert!(max_disp(&m, &back) <= 1e-6);
}

#[test]
fn sidecar_round_trip_and_staleness() {
    let mesh = parse_obj(CUBE_OBJ).unwrap();
    let layout = vec![cube(v(0.5, 0.25, 0.5), 1.0), cube(v(0.5, 0.75, 0.5), 1.0)];
    let w = compute_weights(&mesh, &layout, DEFAULT_EPS).unwrap();
    let bytes = encode_weights(&w, mesh_hash(&mesh), layout_hash(&layout), DEFAULT_EPS);
    let (back, mk, lk, eps) = decode_weights(&bytes).unwrap();
    assert_eq!(back, w);
    assert_eq!(
        (mk, lk, eps),
        (mesh_hash(&mesh), layout_hash(&layout), DEFAULT_EPS)
    );
    assert!(decode_weights(&bytes[..bytes.len() - 1]).is_err());
    assert!(decode_weights(b"NOPE").is_err());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.skdw");
    assert_eq!(
        weights_cached(&mesh, &layout, DEFAULT_EPS, &path).unwrap(),
        w
    );
    assert_eq!(
        weights_cached(&mesh, &layout, DEFAULT_EPS, &path).unwrap(),
        w
    );
    let moved = vec![cube(v(0.0, 0.0, 0.0), 1.0), layout[1].clone()];
    let w2 = weights_cached(&mesh, &moved, DEFAULT_EPS, &path).unwrap();
    assert_eq!(w2, compute_weights(&mesh, &moved, DEFAULT_EPS).unwrap());
}

const LIB: &str = r#"
/// @description Slats.
/// @parts slats
/// @valid_options [2, 3]
/// @param n count
fn slats(cf: Frame, n: int) -> PartList {
    let out = [];
    for i in 0..n {
        out = out + [part(cf.w, cf.h / n, cf.d, cf.x, cf.min_y + (i + 0.5) * cf.h / n, cf.z)];
    }
    return out;
}
"#;

#[test]
fn program_edits_drive_deformation() {
    let lib = parse_library(LIB).unwrap();
    let a = parse_program(
        "slats(frame(1, 1, 1, 0, 0.5, 0), 2);\nmake_part(frame(1, 0.2, 1, 0, -0.1, 0), \"base\");",
        &lib,
    )
    .unwrap();
    let taller = parse_program(
        "slats(frame(1, 2, 1, 0, 1, 0), 2);\nmake_part(frame(1, 0.2, 1, 0, -0.1, 0), \"base\");",
        &lib,
    )
    .unwrap();
    let mesh = Mesh::new(vec![v(0.2, 0.9, 0.1), v(0.0, -0.1, 0.0)], vec![[0, 1, 1]]).unwrap();
    let out = deform_by_programs(&mesh, &lib, &a, &taller, &ExecLimits::default()).unwrap();
    // inside the top slat only: y doubles, x and z stay
    assert!(out.vertices[0].distance(v(0.2, 1.8, 0.1)) < 1e-9);
    assert!(out.vertices[1].distance(mesh.vertices[1]) < 1e-9);

    let more = parse_program(
        "slats(frame(1, 1, 1, 0, 0.5, 0), 3);\nmake_part(frame(1, 0.2, 1, 0, -0.1, 0), \"base\");",
        &lib,
    )
    .unwrap();
    let e = deform_by_programs(&mesh, &lib, &a, &more, &ExecLimits::default()).unwrap_err();
    assert!(matches!(
        e,
        DeformError::StructureChanged { statement: 0, .. }
    ));
    assert_eq!(e.code(), "LayoutMismatch");
    let fewer = parse_program("slats(frame(1, 1, 1, 0, 0.5, 0), 2);", &lib).unwrap();
    assert!(check_same_structure(&a, &fewer).is_err());
    let swapped = parse_program(
        "make_part(frame(1, 0.2, 1, 0, -0.1, 0), \"base\");\nslats(frame(1, 1, 1, 0, 0.5, 0), 2);",
        &lib,
    )
    .unwrap();
    assert!(matches!(
        check_same_structure(&a, &swapped),
        Err(DeformError::StructureChanged { statement: 0, .. })
    ));
}

fn arb_part() -> impl Strategy<Value = Part> {
    (
        prop::array::uniform3(0.1f64..2.0),
        prop::array::uniform3(-2.0f64..2.0),
    )
        .prop_map(|(d, c)| Part::unlabeled(Vec3::from_array(d), Vec3::from_array(c)))
}

fn arb_mesh() -> impl Strategy<Value = Mesh> {
    prop::collection::vec(prop::array::uniform3(-3.0f64..3.0), 3..60).prop_flat_map(|vs| {
        let n = vs.len();
        let vertices: Vec<Vec3> = vs.into_iter().map(Vec3::from_array).collect();
        prop::collection::vec(prop::array::uniform3(0..n), 0..40).prop_map(move |faces| Mesh {
            vertices: vertices.clone(),
            faces,
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn identity_translation_and_convexity(
        mesh in arb_mesh(),
        layout in prop::collection::vec(arb_part(), 1..8),
        t in prop::array::uniform3(-5.0f64..5.0),
    ) {
        let w = compute_weights(&mesh, &layout, DEFAULT_EPS).unwrap();
        for row in &w.rows {
            prop_assert!(row.iter().all(|&(_, x)| x >= 0.0));
            prop_assert!((row.iter().map(|r| r.1).sum::<f64>() - 1.0).abs() <= 1e-9);
        }
        let same = apply_deformation(&mesh, &w, &LayoutPair::new(layout.clone(), layout.clone()).unwrap()).unwrap();
        prop_assert!(max_disp(&mesh, &same) <= 1e-9);
        prop_assert_eq!(&same.faces, &mesh.faces);

        let t = Vec3::from_array(t);
        let moved: Vec<Part> = layout.iter().map(|p| Part { center: p.center + t, ..p.clone() }).collect();
        let out = apply_deformation(&mesh, &w, &LayoutPair::new(layout.clone(), moved).unwrap()).unwrap();
        for (a, b) in mesh.vertices.iter().zip(&out.vertices) {
            prop_assert!((*b - *a - t).norm() <= 1e-6);
        }
        prop_assert_eq!(&out.faces, &mesh.faces);
    }

    #[test]
    fn single_containment_is_that_cuboids_map(
        c in arb_part(),
        e in arb_part(),
        u in prop::array::uniform3(0.01f64..0.99),
    ) {
        let p = c.center + (Vec3::from_array(u) - Vec3::splat(0.5)).mul_elem(c.dims);
        // a second cuboid far away
        let far = Part::unlabeled(Vec3::splat(0.5), Vec3::splat(50.0));
        let mesh = Mesh { vertices: vec![p], faces: vec![] };
        let w = compute_weights(&mesh, &[c.clone(), far.clone()], DEFAULT_EPS).unwrap();
        prop_assert_eq!(&w.rows[0], &vec![(0, 1.0)]);
        let out = apply_deformation(&mesh, &w, &LayoutPair::new(vec![c, far.clone()], vec![e.clone(), far]).unwrap()).unwrap();
        let expect = e.center + (Vec3::from_array(u) - Vec3::splat(0.5)).mul_elem(e.dims);
        prop_assert!(out.vertices[0].distance(expect) < 1e-9);
    }
}
