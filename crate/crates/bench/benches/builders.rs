use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use hitree::builder::{build_agnostic_raw, build_binary_raw};
use hitree::msf::{build_via_msf_raw, BackendKind, MsfOptions};
use hitree_bench::{consistent, mutated};

fn opts(backend: BackendKind) -> MsfOptions {
    MsfOptions {
        backend,
        check_invariants: false,
    }
}

fn builders(c: &mut Criterion) {
    let mut g = c.benchmark_group("build");
    g.sample_size(10);
    for n in [64usize, 256, 1024] {
        let m = 4 * n;
        let cs = consistent(n, m, 1);
        g.throughput(Throughput::Elements(m as u64));
        g.bench_with_input(BenchmarkId::new("baseline", n), &cs, |b, cs| {
            b.iter(|| build_binary_raw(n, cs).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("msf_fast", n), &cs, |b, cs| {
            b.iter(|| build_via_msf_raw(n, cs, opts(BackendKind::Fast)).unwrap())
        });
        if n <= 256 {
            g.bench_with_input(BenchmarkId::new("msf_naive", n), &cs, |b, cs| {
                b.iter(|| build_via_msf_raw(n, cs, opts(BackendKind::Naive)).unwrap())
            });
        }
        let bad = mutated(n, m, 1);
        g.bench_with_input(BenchmarkId::new("baseline_reject", n), &bad, |b, cs| {
            b.iter(|| build_binary_raw(n, cs).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("agnostic", n), &bad, |b, cs| {
            b.iter(|| build_agnostic_raw(n, cs).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, builders);
criterion_main!(benches);
