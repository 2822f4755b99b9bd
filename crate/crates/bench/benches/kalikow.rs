use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use vlm_hawkes::kalikow_cascade::{CascadeContext, DEFAULT_TAIL_TOLERANCE};
use vlm_hawkes::kalikow_sat::{decompose_all, ResidualMode};
use vlm_hawkes::prm::Prm;
use vlm_hawkes::NeighborhoodPolicy;
use vlm_hawkes_bench::{cascade_lattice, saturation_ring};

fn saturation(c: &mut Criterion) {
    let mut group = c.benchmark_group("saturation_decompose");
    for n in [4u32, 8, 16] {
        let net = saturation_ring(n, 0.5);
        let nbhd = net.neighborhoods(NeighborhoodPolicy::Influence);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| decompose_all(black_box(&net), &nbhd, ResidualMode::Strict).unwrap())
        });
    }
    group.finish();

    let net = saturation_ring(8, 0.5);
    let nbhd = net.neighborhoods(NeighborhoodPolicy::Influence);
    let d = decompose_all(&net, &nbhd, ResidualMode::Strict).unwrap();
    let counts = vec![1u32; nbhd.of(0).members.len()];
    let k = nbhd.of(0).saturation_level();
    c.bench_function("saturation_p_k", |b| b.iter(|| d[0].p_k(black_box(k), black_box(&counts)).unwrap()));
}

fn cascade(c: &mut Criterion) {
    let net = cascade_lattice(8, 4, 0.2);
    let nbhd = net.neighborhoods(NeighborhoodPolicy::Influence);
    c.bench_function("cascade_context", |b| {
        b.iter(|| CascadeContext::new(black_box(&net), &nbhd, DEFAULT_TAIL_TOLERANCE).unwrap())
    });
    let ctx = CascadeContext::new(&net, &nbhd, DEFAULT_TAIL_TOLERANCE).unwrap();
    let prm = Prm::new(&net, 1);
    let top = net.len() - 1;
    c.bench_function("cascade_p_k_env", |b| {
        b.iter(|| {
            let site = ctx.site(&prm, top, black_box(10.0));
            site.p_k_env(2, &|_| true).unwrap()
        })
    });
}

criterion_group!(benches, saturation, cascade);
criterion_main!(benches);
