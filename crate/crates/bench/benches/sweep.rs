use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};
use magbands_bench::poisson;
use magbands_core::bands::FiberSweep;
use magbands_core::dynamics::{evolve, prepare_packet, q1_second_moment, PacketSpec, VelocityOperatorData};
use magbands_core::fiber::SolverOptions;
use magbands_core::grid::KGrid;

fn sweep(c: &mut Criterion) {
    let field = poisson(2001, 1);
    let kgrid = KGrid::new(-4.0, 4.0, 41).unwrap();
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    group.bench_function("poisson_41k_n3", |b| {
        b.iter(|| FiberSweep::solve(&field, &kgrid, 3, &SolverOptions::default()).unwrap())
    });
    group.finish();

    let sweep = Arc::new(FiberSweep::solve(&field, &kgrid, 3, &SolverOptions::default()).unwrap());
    let data = VelocityOperatorData::new(&sweep);
    let packet = prepare_packet(Arc::clone(&sweep), &PacketSpec::ground_state(0.0, 0.5)).unwrap();
    c.bench_function("velocity_operator_data", |b| b.iter(|| VelocityOperatorData::new(&sweep)));
    c.bench_function("evolve_and_q1", |b| b.iter(|| q1_second_moment(&evolve(&packet, 37.0), &data)));
}

criterion_group!(benches, sweep);
criterion_main!(benches);
