use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use wkblab::action::{action, well_action};
use wkblab::spectrum::eigenvalues;
use wkblab::stokes::build_graph;
use wkblab::wkbmat::{leading_roots_count, DoubleWell};
use wkblab::zeros::locate_zeros;
use wkblab::{Complex64, PathC, Poly, Rect, ShootConfig, TraceConfig, ZeroConfig};

fn double_well() -> Poly {
    Poly::from_real_roots(&[-2.0, -1.0, 1.0, 2.0], 1.0).unwrap()
}

fn roots_and_actions(c: &mut Criterion) {
    let p = Poly::from_real(&[0.3, -1.1, 0.7, 2.0, -0.4, 0.9, 1.0]).unwrap();
    c.bench_function("roots/degree6", |b| {
        b.iter(|| black_box(&p).roots().unwrap())
    });
    let q = double_well();
    c.bench_function("action/well", |b| {
        b.iter(|| well_action(black_box(&q), 1.0, 2.0).unwrap())
    });
    let path = PathC::new(
        vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 2.5),
        ],
        Complex64::new(1.0, 0.0),
    );
    c.bench_function("action/complex_path", |b| {
        b.iter(|| action(black_box(&q), &path).unwrap())
    });
}

fn graphs(c: &mut Criterion) {
    let q = double_well();
    c.bench_function("graph/double_well", |b| {
        b.iter(|| build_graph(black_box(&q), &TraceConfig::default()).unwrap())
    });
}

fn spectra(c: &mut Criterion) {
    let mut g = c.benchmark_group("spectrum");
    g.sample_size(10);
    let q = double_well();
    g.bench_function("double_well_to_20", |b| {
        b.iter(|| eigenvalues(black_box(&q), 20.0, &ShootConfig::default()).unwrap())
    });
    g.bench_function("double_well_dd_to_10", |b| {
        b.iter(|| eigenvalues(black_box(&q), 10.0, &ShootConfig::double_double()).unwrap())
    });
    g.finish();
}

fn zero_sets(c: &mut Criterion) {
    let mut g = c.benchmark_group("zeros");
    g.sample_size(10);
    let p = Poly::from_real(&[-1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
    let ev = eigenvalues(&p, 20.0, &ShootConfig::default()).unwrap();
    let r = ev.last().unwrap().clone();
    let region = Rect::new(-3.0, 3.0, -3.0, 3.0).unwrap();
    g.bench_function("quartic_top_level_to_20", |b| {
        b.iter(|| {
            locate_zeros(
                &p,
                black_box(r.lambda),
                r.n,
                &region,
                &ZeroConfig::default(),
            )
            .unwrap()
        })
    });
    g.finish();
}

fn leading_order(c: &mut Criterion) {
    let d = DoubleWell::new(1.0, 2f64.sqrt(), 1.5).unwrap();
    c.bench_function("leading_roots/500", |b| {
        b.iter(|| leading_roots_count(black_box(&d), 500).unwrap())
    });
}

criterion_group!(
    benches,
    roots_and_actions,
    graphs,
    spectra,
    zero_sets,
    leading_order
);
criterion_main!(benches);
