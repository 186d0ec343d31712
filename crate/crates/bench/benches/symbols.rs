use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;
use std::hint::black_box;
use weilsym_core::{
    birkhoff_factor, deligne_symbol, oracle_commutator, plus_symbol, tame_symbol, verify_reciprocity, AnalyticUnit,
    FactorOpts, FieldTag, LaurentSeries, LocalOpts, Locality, Method, OracleOpts, Scalar,
};

/// `a t^n (1 + alpha t)(1 + beta / t)` as an exact-edge complex polynomial.
fn annulus_unit(a: f64, n: i64, alpha: f64, beta: f64) -> LaurentSeries {
    let c = |x: f64| Complex64::new(a * x, 0.0);
    LaurentSeries::from_complex(n - 1, &[c(beta), c(1.0 + alpha * beta), c(alpha)], true, true)
}

fn annulus_opts(window: i64) -> FactorOpts {
    FactorOpts { locality: Locality::Annulus, ..FactorOpts::with_window(window) }
}

fn factorization(c: &mut Criterion) {
    let f = annulus_unit(2.0, 1, 0.3, 0.2);
    let mut group = c.benchmark_group("birkhoff_factor");
    for w in [16, 32, 64] {
        group.bench_with_input(BenchmarkId::from_parameter(w), &w, |b, &w| {
            b.iter(|| birkhoff_factor(black_box(&f), &annulus_opts(w)).unwrap())
        });
    }
    group.finish();
}

fn closed_forms(c: &mut Criterion) {
    let f = LaurentSeries::from_ints(FieldTag::ExactRational, 2, &[2, 1, 5]);
    let g = LaurentSeries::from_ints(FieldTag::ExactRational, -1, &[3, 0, 7]);
    c.bench_function("tame_symbol/rational", |b| b.iter(|| tame_symbol(black_box(&f), black_box(&g)).unwrap()));

    let f = annulus_unit(2.0, 1, 0.3, 0.2);
    let g = annulus_unit(3.0, -2, -0.4, 0.1);
    let opts = annulus_opts(32);
    c.bench_function("plus_symbol/complex_w32", |b| {
        b.iter(|| plus_symbol(black_box(&f), black_box(&g), &opts, true).unwrap())
    });
}

fn oracle(c: &mut Criterion) {
    let f = annulus_unit(2.0, 1, 0.3, 0.2);
    let g = annulus_unit(3.0, -2, -0.4, 0.1);
    let opts = OracleOpts::default();
    let mut group = c.benchmark_group("oracle_commutator");
    group.sample_size(10);
    for m in [16, 32] {
        group.bench_with_input(BenchmarkId::from_parameter(m), &m, |b, &m| {
            b.iter(|| oracle_commutator(black_box(&f), black_box(&g), m, &opts).unwrap())
        });
    }
    group.finish();
}

fn contour(c: &mut Criterion) {
    let f = annulus_unit(2.0, 1, 0.3, 0.2);
    let g = annulus_unit(3.0, -2, -0.4, 0.1);
    let mut group = c.benchmark_group("deligne_symbol");
    for k in [512, 2048] {
        group.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, &k| {
            b.iter(|| deligne_symbol(black_box(&f), black_box(&g), 1.0, k).unwrap())
        });
    }
    group.finish();
}

fn reciprocity(c: &mut Criterion) {
    let q = |n: i64| Scalar::from_i64(n, FieldTag::ExactRational);
    let f = AnalyticUnit::from_factors(q(2), vec![(q(0), 1), (q(1), -2)]).unwrap();
    let g = AnalyticUnit::from_factors(q(-3), vec![(q(0), -1), (q(2), 1), (q(1), 1)]).unwrap();
    let opts = LocalOpts::default();
    c.bench_function("verify_reciprocity/tame", |b| {
        b.iter(|| verify_reciprocity(black_box(&f), black_box(&g), Method::Tame, &opts).unwrap())
    });
}

criterion_group!(benches, factorization, closed_forms, oracle, contour, reciprocity);
criterion_main!(benches);
