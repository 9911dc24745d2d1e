//! Sequential against data-parallel Monte Carlo.
//!
//! Build with `--no-default-features` to benchmark the sequential fallback,
//! in which case every worker count runs on the calling thread.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use sop_core::experiments::fig_base;
use sop_core::montecarlo::{simulate_tallies, McConfig};

fn bench_simulate(c: &mut Criterion) {
    let scenario = fig_base();
    let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let mut group = c.benchmark_group("simulate_200k");
    group.sample_size(10);
    let mut widths = vec![1, threads.max(2)];
    widths.dedup();
    for workers in widths {
        let cfg = McConfig { n_samples: 200_000, master_seed: 7, n_workers: workers, batch_size: 65_536 };
        // warm the FSO inverse table so only sampling is timed
        simulate_tallies(&scenario, &cfg).unwrap();
        group.bench_with_input(BenchmarkId::new("workers", workers), &cfg, |b, cfg| {
            b.iter(|| simulate_tallies(&scenario, cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_simulate);
criterion_main!(benches);
