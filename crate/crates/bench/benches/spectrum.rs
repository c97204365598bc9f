use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use motifcast_bench::random_walk;
use motifcast_core::spectral::{amplitude_spectrum, dominant_periods};
use std::hint::black_box;

fn spectrum(c: &mut Criterion) {
    let mut group = c.benchmark_group("spectrum");
    // 17420 is the length of an hourly ETT file.
    for n in [1024, 5000, 17420] {
        let x = random_walk(n, 3);
        group.bench_with_input(BenchmarkId::new("amplitude_and_periods", n), &n, |bench, _| {
            bench.iter(|| dominant_periods(&amplitude_spectrum(black_box(&x)).unwrap(), 10).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, spectrum);
criterion_main!(benches);
