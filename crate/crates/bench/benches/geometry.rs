use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shapekit::geometry::{chamfer, match_error, sample_points, voxelize};
use shapekit::{Part, Vec3};

fn layout(n: usize, seed: u64) -> Vec<Part> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            Part::unlabeled(
                Vec3::new(
                    r.random_range(0.05..0.6),
                    r.random_range(0.05..0.6),
                    r.random_range(0.05..0.6),
                ),
                Vec3::new(
                    r.random_range(-0.7..0.7),
                    r.random_range(-0.7..0.7),
                    r.random_range(-0.7..0.7),
                ),
            )
        })
        .collect()
}

fn matching(c: &mut Criterion) {
    let mut g = c.benchmark_group("match_error");
    for n in [4, 12, 32] {
        let (a, b) = (layout(n, 1), layout(n, 2));
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |bch, _| {
            bch.iter(|| match_error(black_box(&a), black_box(&b), f64::INFINITY))
        });
    }
    g.finish();
}

fn voxels(c: &mut Criterion) {
    let parts = layout(8, 3);
    let (lo, hi) = (Vec3::splat(-1.0), Vec3::splat(1.0));
    let mut g = c.benchmark_group("voxelize");
    for res in [32, 64] {
        g.bench_with_input(BenchmarkId::from_parameter(res), &res, |bch, &res| {
            bch.iter(|| voxelize(black_box(&parts), res, lo, hi))
        });
    }
    g.finish();
}

fn chamfer_distance(c: &mut Criterion) {
    let a = sample_points(&layout(8, 4), 2048, 1).unwrap();
    let b = sample_points(&layout(8, 5), 2048, 2).unwrap();
    c.bench_function("chamfer/2048", |bch| {
        bch.iter(|| chamfer(black_box(&a), black_box(&b)))
    });
}

criterion_group!(benches, matching, voxels, chamfer_distance);
criterion_main!(benches);
