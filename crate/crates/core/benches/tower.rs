use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use iwasawa_k::corpus::d1_torsion_corpus;
use iwasawa_k::padic::Prime;
use iwasawa_k::par::Execution;
use iwasawa_k::selftest::{run_selftest, SelftestConfig};
use iwasawa_k::tower::{tower_with, TowerOptions};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn towers(c: &mut Criterion) {
    let corpus = d1_torsion_corpus(Prime::new(3).unwrap()).unwrap();
    let mut group = c.benchmark_group("corpus-towers");
    group.sample_size(10);
    for (name, execution) in MODES {
        let opts = TowerOptions { execution, ..TowerOptions::default() };
        group.bench_function(BenchmarkId::new(name, 4), |b| {
            b.iter(|| corpus.iter().map(|(_, m)| tower_with(m, 4, &opts).len()).sum::<usize>())
        });
    }
    group.finish();
}

fn selftest(c: &mut Criterion) {
    let mut group = c.benchmark_group("selftest");
    group.sample_size(10);
    for (name, execution) in MODES {
        let cfg = SelftestConfig { max_group_order: 9, execution, ..SelftestConfig::default() };
        group.bench_function(name, |b| b.iter(|| run_selftest(&cfg).results.len()));
    }
    group.finish();
}

criterion_group!(benches, towers, selftest);
criterion_main!(benches);
