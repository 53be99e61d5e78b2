use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use projcorrect::bounds::{self, rational};
use projcorrect::corrector::{self, CorrectionMode};
use projcorrect::harness::{self, PlantedSigma};
use projcorrect::{GaloisField, PointMap, ProjSpace};

fn corrupted(p: u32, k: u32, n: usize, swaps: usize) -> (ProjSpace, PointMap) {
    let space = ProjSpace::new(GaloisField::with_default_modulus(p, k).unwrap(), n).unwrap();
    let m = harness::gen_semilinear(&space, 1, PlantedSigma::Random).unwrap();
    let f = harness::corrupt_swap(&m.to_point_map(&space).unwrap(), swaps, 2).unwrap();
    (space, f)
}

fn correct(c: &mut Criterion) {
    let mut g = c.benchmark_group("correct_map");
    g.sample_size(10);
    let (_, f2) = corrupted(2, 1, 4, 1);
    g.bench_function("exact P4(F2)", |b| b.iter(|| corrector::correct_map(black_box(&f2), &CorrectionMode::Exact).unwrap()));
    let (_, f3) = corrupted(3, 1, 4, 3);
    g.bench_function("exact P4(F3)", |b| b.iter(|| corrector::correct_map(black_box(&f3), &CorrectionMode::Exact).unwrap()));
    let (_, f4) = corrupted(2, 2, 4, 3);
    g.bench_function("sampled P4(F4)", |b| {
        b.iter(|| corrector::correct_map(black_box(&f4), &CorrectionMode::sampled(7)).unwrap())
    });
    g.finish();
}

fn single_point(c: &mut Criterion) {
    let (space, f) = corrupted(3, 1, 4, 3);
    let x = space.point(17);
    c.bench_function("correct_point_exact P4(F3)", |b| {
        b.iter(|| corrector::correct_point_exact(black_box(&f), &x).unwrap())
    });
}

fn reconstruct(c: &mut Criterion) {
    let space = ProjSpace::new(GaloisField::with_default_modulus(3, 2).unwrap(), 3).unwrap();
    let m = harness::gen_semilinear(&space, 5, PlantedSigma::Exponent(1)).unwrap();
    let f = m.to_point_map(&space).unwrap();
    c.bench_function("reconstruct P3(F9)", |b| b.iter(|| corrector::reconstruct_semilinear(black_box(&f)).unwrap()));
    c.bench_function("preserved fraction P3(F9)", |b| {
        b.iter(|| corrector::preserved_line_fraction_exact(black_box(&f)).unwrap())
    });
}

fn bound_eval(c: &mut Criterion) {
    let eps = rational(1, 1000);
    c.bench_function("hypotheses q=2 n=14", |b| b.iter(|| bounds::hypotheses(2, black_box(14), &eps).unwrap()));
    c.bench_function("max_eps q=2 n=14", |b| b.iter(|| bounds::max_eps(2, black_box(14)).unwrap()));
}

criterion_group!(benches, correct, single_point, reconstruct, bound_eval);
criterion_main!(benches);
