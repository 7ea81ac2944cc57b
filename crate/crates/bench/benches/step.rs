use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use sqz_bench::fixture;
use sqz_core::state_count;

fn step(c: &mut Criterion) {
    let mut g = c.benchmark_group("step");
    g.sample_size(20);
    for n in [25, 50, 100] {
        g.throughput(Throughput::Elements(state_count(n).expect("small N") as u64));
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            let (mut integ, mut s, noise) = fixture(n, 1 << 16);
            let mut k = 0;
            b.iter(|| {
                let z = noise.draws()[k % noise.len()];
                k += 1;
                integ.step(&mut s, z).expect("step succeeds")
            });
        });
    }
    g.finish();
}

criterion_group!(benches, step);
criterion_main!(benches);
