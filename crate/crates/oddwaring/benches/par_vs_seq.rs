//! Data-parallel core vs. a hand-rolled sequential loop.
//!
//! The library's parallel dispatch lives behind the `parallel` feature; the
//! sequential baselines here are feature-independent re-statements of the same
//! work, so one bench binary compares both regardless of how it was built.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use oddwaring::oddsq;
use oddwaring::survey::run_case;
use oddwaring::survey::CaseSpec;

fn sweep_sequential(max: i64) -> i64 {
    let mut best = 0;
    for m in 1..=max {
        best = best.max(oddsq::min_odd_squares(m));
    }
    best
}

fn bench_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("sweep_min_odd_squares");
    for max in [10_000i64, 100_000] {
        group.bench_with_input(BenchmarkId::new("library", max), &max, |b, &max| {
            b.iter(|| oddsq::sweep_min_odd_squares(max))
        });
        group.bench_with_input(BenchmarkId::new("sequential", max), &max, |b, &max| {
            b.iter(|| sweep_sequential(max))
        });
    }
    group.finish();
}

fn bench_survey(c: &mut Criterion) {
    let case = CaseSpec::by_label("2-iii", false).expect("known case");
    c.bench_function("survey_case_2_iii", |b| {
        b.iter(|| run_case(&case, None).expect("survey"))
    });
}

criterion_group!(benches, bench_sweep, bench_survey);
criterion_main!(benches);
