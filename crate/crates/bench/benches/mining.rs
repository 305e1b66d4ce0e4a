use std::collections::BTreeMap;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use topicstream_bench::zipf_transactions;
use topicstream_core::fp::{fp_growth, hupm_mine, HupmParams, UtilityTable};

fn frequent_patterns(c: &mut Criterion) {
    let mut group = c.benchmark_group("fp_growth");
    for n in [500, 2000] {
        let txs = zipf_transactions(n, 2000, 1);
        group.bench_with_input(BenchmarkId::from_parameter(n), &txs, |b, txs| b.iter(|| fp_growth(txs, (n / 50) as u64)));
    }
    group.finish();
}

fn high_utility_patterns(c: &mut Criterion) {
    let mut group = c.benchmark_group("hupm_mine");
    for n in [500, 2000] {
        let table = UtilityTable::new(zipf_transactions(n, 2000, 2), BTreeMap::new());
        let params = HupmParams { min_util: 0.02 * table.total_utility() as f64, max_len: Some(4) };
        group.bench_with_input(BenchmarkId::from_parameter(n), &table, |b, t| b.iter(|| hupm_mine(t, &params)));
    }
    group.finish();
}

criterion_group!(benches, frequent_patterns, high_utility_patterns);
criterion_main!(benches);
