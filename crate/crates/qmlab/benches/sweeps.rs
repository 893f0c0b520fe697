//! Compares the parallel and sequential sweep paths on the workloads the
//! certificates actually run: max-reductions over rational observables,
//! exhaustive defect search, and a root-condition sweep over a ladder.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use qmlab::ladder::ladder_triple_action;
use qmlab::psl2z::build_psl2z_ladder;
use qmlab::qmcore::{counting_qm, defect_lower_bound_report};
use qmlab::rational::{rat, ratio};
use qmlab::sweep::{max_observed_seq, Observed};
use qmlab::triple::check_root_condition;
use qmlab::words::{enumerate_words, Presentation, Word};

fn observable(i: usize) -> Option<Observed<usize>> {
    // A term shaped like a defect entry: a handful of big-rational ops.
    let i = i as i64;
    let v = ratio(i * i + 7, i + 1) - ratio(i, 3) - rat(i / 2);
    Some(Observed {
        value: if v < rat(0) { -v } else { v },
        witness: i as usize,
    })
}

fn bench_max_reduction(c: &mut Criterion) {
    let mut group = c.benchmark_group("max_reduction");
    for n in [1 << 10, 1 << 14] {
        group.bench_with_input(BenchmarkId::new("seq", n), &n, |b, &n| {
            b.iter(|| max_observed_seq(black_box(n), observable))
        });
        #[cfg(feature = "parallel")]
        group.bench_with_input(BenchmarkId::new("par", n), &n, |b, &n| {
            b.iter(|| qmlab::sweep::max_observed_par(black_box(n), observable))
        });
    }
    group.finish();
}

fn bench_defect_search(c: &mut Criterion) {
    let pres = Presentation::free(2).unwrap();
    let mu = counting_qm(&Word::parse(&pres, "a").unwrap()).unwrap();
    let mut group = c.benchmark_group("defect_search");
    group.sample_size(10);
    for len in [3u32, 4] {
        group.bench_with_input(BenchmarkId::from_parameter(len), &len, |b, &len| {
            b.iter(|| defect_lower_bound_report(black_box(&mu), len).unwrap())
        });
    }
    group.finish();
}

fn bench_root_condition(c: &mut Criterion) {
    let e = build_psl2z_ladder(3, 2).unwrap();
    let (t, act) = ladder_triple_action(&e);
    let gs: Vec<Word> = enumerate_words(act.group(), 2)
        .unwrap()
        .into_iter()
        .filter(|w| !w.is_identity())
        .collect();
    let mut group = c.benchmark_group("root_condition");
    group.sample_size(10);
    group.bench_function("psl2z_ladder_len2", |b| {
        b.iter(|| {
            let obs = check_root_condition(black_box(&t), &act, act.sample_points(), &gs);
            assert!(obs.value <= rat(3));
            obs
        })
    });
    group.finish();
}

criterion_group!(benches, bench_max_reduction, bench_defect_search, bench_root_condition);
criterion_main!(benches);
