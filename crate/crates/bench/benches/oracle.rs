use criterion::{criterion_group, criterion_main, Criterion};
use esa_core::oracle::{brute_force_bound, compute_upper_bound, DEFAULT_TOLERANCE};
use esa_core::scenarios;

fn upper_bound(c: &mut Criterion) {
    for (name, net) in scenarios::all() {
        c.bench_function(&format!("upper_bound/{name}"), |b| {
            b.iter(|| compute_upper_bound(&net, DEFAULT_TOLERANCE).unwrap().bound)
        });
    }
}

fn brute_force(c: &mut Criterion) {
    let net = scenarios::three_node_line();
    let mut g = c.benchmark_group("brute_force");
    g.sample_size(10);
    g.bench_function("three_node_line/0.02", |b| b.iter(|| brute_force_bound(&net, 0.02).unwrap()));
    g.finish();
}

criterion_group!(benches, upper_bound, brute_force);
criterion_main!(benches);
