use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use ra_multicast::conic::solve;
use ra_multicast::harness::{run_scheme, SchemeId};
use ra_multicast::run_ao;
use ra_multicast_bench::Fixture;

fn subproblems(c: &mut Criterion) {
    let mut group = c.benchmark_group("subproblem");
    for n in [4, 12, 20] {
        let fx = if n == 4 { Fixture::reference(0) } else { Fixture::antennas(n, 0) };
        let bf = fx.beamforming_program();
        group.bench_with_input(BenchmarkId::new("beamforming", n), &bf, |b, p| {
            b.iter(|| solve(black_box(&p.program)))
        });
        let bs = fx.boresight_program();
        group.bench_with_input(BenchmarkId::new("boresight", n), &bs, |b, p| {
            b.iter(|| solve(black_box(&p.program)))
        });
    }
    group.finish();
}

fn full_runs(c: &mut Criterion) {
    let mut group = c.benchmark_group("alternating");
    group.sample_size(20);
    let fx = Fixture::reference(0);
    group.bench_function("ra_optimized_seed1", |b| {
        b.iter(|| run_ao(&fx.config, &fx.geometry, black_box(1)).unwrap())
    });
    group.bench_function("fixed_directional_seed1", |b| {
        b.iter(|| run_scheme(SchemeId::FixedDirectional, &fx.config, &fx.geometry, black_box(1)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, subproblems, full_runs);
criterion_main!(benches);
