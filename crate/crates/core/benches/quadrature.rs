use std::f64::consts::SQRT_2;

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use newton_cavity::billiard::{midpoint, trace_outcome, EntryState};
use newton_cavity::cavity::make_double_parabola;
use newton_cavity::resistance::{cavity_resistance, QuadratureSpec};
use newton_cavity::Parallelism;

fn resistance(c: &mut Criterion) {
    let shape = make_double_parabola(SQRT_2, 0.0).unwrap();
    let mut group = c.benchmark_group("double_parabola_200");
    group.sample_size(20);
    for (label, par) in [("serial", Parallelism::Serial), ("parallel", Parallelism::Auto)] {
        let spec = QuadratureSpec::square(200).with_parallelism(par);
        group.bench_with_input(BenchmarkId::from_parameter(label), &spec, |b, spec| {
            b.iter(|| cavity_resistance(black_box(&shape), spec).unwrap().value)
        });
    }
    group.finish();
}

fn traces(c: &mut Criterion) {
    let shape = make_double_parabola(SQRT_2, 0.0).unwrap();
    let entries: Vec<EntryState> = (0..1000)
        .map(|i| EntryState::new(midpoint(-0.5, 0.5, 1000, i), midpoint(-1.5, 1.5, 1000, (i * 7) % 1000)).unwrap())
        .collect();
    c.bench_function("trace_1000", |b| {
        b.iter(|| entries.iter().map(|e| trace_outcome(&shape, *e, 1000).exit_phi).sum::<f64>())
    });
}

criterion_group!(benches, resistance, traces);
criterion_main!(benches);
