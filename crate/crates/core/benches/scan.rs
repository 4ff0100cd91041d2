//! Serial scan, chunked scan and the naive baseline on a generated workload.
//! Chunked scans run on the rayon pool when the `parallel` feature is on and
//! sequentially otherwise.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use fuzzymint::baseline::naive_scan_chunked;
use fuzzymint::bench::{workload, Scenario};
use fuzzymint::{naive_scan, scan_chunked, MetricKind, ScanConfig, Scanner, SimilarityMetric};

const CORPUS_BYTES: usize = 128 * 1024;
const PLANTS: usize = 30;

fn scans(c: &mut Criterion) {
    let chunks = std::thread::available_parallelism().map_or(4, |n| n.get().max(4));
    for scenario in [Scenario::One, Scenario::Two] {
        let work = workload(scenario, CORPUS_BYTES, PLANTS, 42).expect("workload");
        let corpus = &work.corpus.bytes;
        let mut group = c.benchmark_group(format!("scenario{}", scenario.number()));
        group.throughput(Throughput::Bytes(corpus.len() as u64));
        group.sample_size(10);
        for kind in MetricKind::ALL {
            let cfg = ScanConfig::new(SimilarityMetric::new(kind));
            let aut = cfg.build_automaton(&work.patterns).expect("automaton");
            let scanner = Scanner::new(&aut, cfg).expect("config");
            group.bench_function(BenchmarkId::new("serial", kind), |b| {
                b.iter(|| scanner.scan(corpus))
            });
            group.bench_function(BenchmarkId::new("chunked", kind), |b| {
                b.iter(|| scan_chunked(&scanner, corpus, chunks))
            });
            group.bench_function(BenchmarkId::new("baseline", kind), |b| {
                b.iter(|| naive_scan(&work.patterns, &cfg, corpus).expect("config"))
            });
            group.bench_function(BenchmarkId::new("baseline-chunked", kind), |b| {
                b.iter(|| naive_scan_chunked(&work.patterns, &cfg, corpus, chunks).expect("config"))
            });
        }
        group.finish();
    }
}

criterion_group!(benches, scans);
criterion_main!(benches);
