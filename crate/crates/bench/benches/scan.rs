use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use lppl_bench::bubble;
use lppl_core::{report, ScanConfig, SearchConfig};

fn scan_report(c: &mut Criterion) {
    let series = bubble(400, 15.0, 3);
    let config = ScanConfig {
        window_lengths: vec![60.0, 100.0, 160.0, 250.0],
        every: 50,
        search: SearchConfig { starts: 10, ..SearchConfig::default() },
        ..ScanConfig::default()
    };
    let mut group = c.benchmark_group("scan");
    group.sample_size(10);
    group.bench_function("report_400_points", |b| b.iter(|| report(black_box(&series), &config).unwrap()));
    group.finish();
}

criterion_group!(benches, scan_report);
criterion_main!(benches);
