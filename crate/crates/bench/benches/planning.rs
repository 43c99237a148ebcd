use std::hint::black_box;

use bubblecover::benchmark::{builtin, plan_in_cover};
use bubblecover::graph::{build_intersection_graph, shortest_bubble_path};
use bubblecover::samplers::{brm, ebg, rbg, SamplerConfig, Termination};
use bubblecover::trajopt::TrajoptConfig;
use bubblecover::Point;
use criterion::{criterion_group, criterion_main, Criterion};

fn samplers(c: &mut Criterion) {
    let env = builtin("room2d").unwrap();
    let ws = *env.workspace();
    let seed = Point::xy(1.0, 1.0);
    let cfg = SamplerConfig { max_bubbles: Some(300), n_sample: 300, ..SamplerConfig::default() };
    let mut g = c.benchmark_group("cover_room2d_300");
    g.sample_size(20);
    g.bench_function("brm", |b| b.iter(|| brm(&env.oracle(), &ws, black_box(&cfg)).unwrap()));
    g.bench_function("rbg", |b| b.iter(|| rbg(&env.oracle(), &ws, &seed, black_box(&cfg), Termination::BubbleCount).unwrap()));
    g.bench_function("ebg", |b| b.iter(|| ebg(&env.oracle(), &seed, black_box(&cfg), Termination::BubbleCount).unwrap()));
    g.finish();
}

fn search_and_trajopt(c: &mut Criterion) {
    let env = builtin("corridor2d").unwrap();
    let (start, goal) = (Point::xy(2.0, 5.0), Point::xy(18.0, 5.0));
    let cover = ebg(&env.oracle(), &start, &SamplerConfig::default(), Termination::GoalContained(goal)).unwrap();
    let mut g = c.benchmark_group("corridor2d");
    g.sample_size(20);
    g.bench_function("graph_and_dijkstra", |b| {
        b.iter(|| shortest_bubble_path(&build_intersection_graph(black_box(&cover)), &start, &goal).unwrap())
    });
    let trajopt = TrajoptConfig::default();
    g.bench_function("plan_in_cover", |b| b.iter(|| plan_in_cover(black_box(&cover), &start, &goal, &trajopt).unwrap()));
    g.finish();
}

criterion_group!(benches, samplers, search_and_trajopt);
criterion_main!(benches);
