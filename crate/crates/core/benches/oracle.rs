use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use roomem::{
    simulate_pdp, Execution, PdsParams, Placement, PolGain, RoomGeometry, SimConfig, WallMaterial,
};

fn params() -> PdsParams {
    let v = PolGain::vertical();
    PdsParams::new(
        RoomGeometry::new(3.0, 4.0, 3.0).unwrap(),
        WallMaterial::new(0.4, 0.04).unwrap(),
        v,
        v,
        5e-3,
    )
    .unwrap()
}

fn bench_simulate(c: &mut Criterion) {
    let p = params();
    let mut group = c.benchmark_group("simulate_pdp");
    group.sample_size(10);
    for n in [2_000usize, 10_000] {
        let cfg = SimConfig {
            n_realizations: n,
            bin_width: 1e-9,
            max_delay: 40e-9,
            rng_seed: 1,
            placement: Placement::Uniform,
        };
        group.bench_with_input(BenchmarkId::new("sequential", n), &cfg, |b, cfg| {
            b.iter(|| simulate_pdp(&p, cfg, Execution::Sequential).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("parallel", n), &cfg, |b, cfg| {
            b.iter(|| simulate_pdp(&p, cfg, Execution::Parallel).unwrap())
        });
    }
    group.finish();
}

fn bench_fixed_distance(c: &mut Criterion) {
    let p = params();
    let cfg = SimConfig {
        n_realizations: 5_000,
        bin_width: 1e-9,
        max_delay: 40e-9,
        rng_seed: 1,
        placement: Placement::FixedDistance(roomem::DistanceCondition::new(1.8, false).unwrap()),
    };
    let mut group = c.benchmark_group("simulate_pdp_fixed_distance");
    group.sample_size(10);
    group.bench_function("sequential", |b| {
        b.iter(|| simulate_pdp(&p, &cfg, Execution::Sequential).unwrap())
    });
    group.bench_function("parallel", |b| {
        b.iter(|| simulate_pdp(&p, &cfg, Execution::Parallel).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_simulate, bench_fixed_distance);
criterion_main!(benches);
