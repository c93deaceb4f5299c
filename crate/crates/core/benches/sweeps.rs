use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use incentive_core::analysis::{multistart_uniqueness_probe, two_link_grid, CounterexampleOptions};
use incentive_core::par::Execution;
use incentive_core::routing::{braess, flow_monotonicity_check, EdgeTollSystem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MODES: [Execution; 2] = [Execution::Sequential, Execution::Parallel];

fn toll_grid(c: &mut Criterion) {
    let mut group = c.benchmark_group("two_link_grid_41x41");
    group.sample_size(10);
    for mode in MODES {
        let opts = CounterexampleOptions {
            execution: mode,
            ..CounterexampleOptions::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(format!("{mode:?}")), &opts, |b, opts| {
            b.iter(|| black_box(two_link_grid(opts).unwrap()))
        });
    }
    group.finish();
}

fn monotonicity_sweep(c: &mut Criterion) {
    let net = braess();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut draw = || (0..net.n_edges()).map(|_| rng.gen_range(-1.0..2.0)).collect::<Vec<f64>>();
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..200).map(|_| (draw(), draw())).collect();
    let mut group = c.benchmark_group("braess_monotonicity_200_pairs");
    group.sample_size(10);
    for mode in MODES {
        group.bench_function(BenchmarkId::from_parameter(format!("{mode:?}")), |b| {
            b.iter(|| black_box(mode.map(&pairs, |(p, q)| flow_monotonicity_check(&net, p, q, 1e-10).unwrap())))
        });
    }
    group.finish();
}

fn multistart(c: &mut Criterion) {
    let game = EdgeTollSystem::new(braess());
    let p = vec![0.1; game.network().n_edges()];
    let mut group = c.benchmark_group("braess_multistart_32");
    group.sample_size(10);
    for mode in MODES {
        group.bench_function(BenchmarkId::from_parameter(format!("{mode:?}")), |b| {
            b.iter(|| black_box(multistart_uniqueness_probe(&game, &p, 32, 7, 1e-10, mode).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, toll_grid, monotonicity_sweep, multistart);
criterion_main!(benches);
