use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use spectral_reach::commute::{commute, commute_mc, CommuteMethod, DEFAULT_WALK_CAP};
use spectral_reach::eig_sym;
use spectral_reach::replearn::{collect_dataset, train_graph_drawing, CollectConfig, TrainConfig};
use spectral_reach_bench::fixture;

fn eigensolver(c: &mut Criterion) {
    for name in ["four_room", "discrete_a"] {
        let (_, graph) = fixture(name);
        let lap = graph.laplacian();
        c.bench_function(&format!("eig_sym/{name}"), |b| b.iter(|| eig_sym(black_box(&lap)).unwrap()));
    }
}

fn first_passage(c: &mut Criterion) {
    let (_, graph) = fixture("four_room");
    c.bench_function("commute_solve/four_room", |b| {
        b.iter(|| commute(black_box(&graph), CommuteMethod::Solve, None).unwrap())
    });
}

fn monte_carlo(c: &mut Criterion) {
    let (_, graph) = fixture("four_room");
    let t = graph.n_states() - 1;
    c.bench_function("commute_mc/four_room/1e3", |b| {
        b.iter(|| commute_mc(black_box(&graph), 0, t, 1_000, DEFAULT_WALK_CAP, 0).unwrap())
    });
}

fn training(c: &mut Criterion) {
    let (maze, _) = fixture("four_room");
    let data = collect_dataset(&maze, CollectConfig::default()).unwrap();
    let config = TrainConfig {
        iterations: 500,
        ..Default::default()
    };
    let mut group = c.benchmark_group("training");
    group.sample_size(10);
    group.bench_function("four_room/500_iterations", |b| {
        b.iter(|| train_graph_drawing(black_box(&data), config).unwrap())
    });
    group.finish();
}

criterion_group!(benches, eigensolver, first_passage, monte_carlo, training);
criterion_main!(benches);
