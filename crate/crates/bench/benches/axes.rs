use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use scd_axes_bench::{gaussian_matrix, planted, scored};
use scd_axes_core::contextual::wic_distances;
use scd_axes_core::metrics::{auc_mannwhitney, roc_from_scores};
use scd_axes_core::synthkit::{gen_ica_mixture, gen_planted_pairs, gen_planted_temporal};
use scd_axes_core::temporal::{change_scores, change_scores_at};
use scd_axes_core::transforms::{fit_ica, fit_pca, fit_raw, IcaConfig};

fn transforms(c: &mut Criterion) {
    let mut g = c.benchmark_group("fit_pca");
    for (n, d) in [(200, 64), (2000, 64), (2000, 256)] {
        let x = gaussian_matrix(n, d, 1);
        g.bench_with_input(BenchmarkId::from_parameter(format!("{n}x{d}")), &x, |b, x| {
            b.iter(|| fit_pca(black_box(x)).unwrap())
        });
    }
    g.finish();

    let mut g = c.benchmark_group("fit_ica");
    g.sample_size(20);
    for k in [3, 8] {
        let mix = gen_ica_mixture(2000, k, 5).unwrap();
        let cfg = IcaConfig::default();
        g.bench_with_input(BenchmarkId::from_parameter(k), &mix.observed, |b, x| {
            b.iter(|| fit_ica(black_box(x), &cfg).unwrap())
        });
    }
    g.finish();
}

fn metrics(c: &mut Criterion) {
    let s = scored(10_000, 3);
    c.bench_function("roc_from_scores/10k", |b| b.iter(|| roc_from_scores(black_box(&s)).unwrap()));
    let small = scored(1_000, 4);
    c.bench_function("auc_mannwhitney/1k", |b| b.iter(|| auc_mannwhitney(black_box(&small)).unwrap()));
}

fn evaluation(c: &mut Criterion) {
    let (store, pairs) = gen_planted_pairs(&planted(400, 1)).unwrap();
    let pca = fit_pca(&store.to_matrix()).unwrap();
    c.bench_function("wic_distances/400x64", |b| {
        b.iter(|| wic_distances(&store, &pairs, black_box(&pca), 0.1).unwrap())
    });

    let (store, data) = gen_planted_temporal(&planted(40, 100)).unwrap();
    let pca = fit_pca(&store.to_matrix()).unwrap();
    let raw = fit_raw(64);
    let mut g = c.benchmark_group("change_scores");
    g.sample_size(10);
    g.bench_function("raw/exhaustive", |b| {
        b.iter(|| change_scores(&store, &data, black_box(&raw), 1.0, None, 0).unwrap())
    });
    g.bench_function("pca/cap50", |b| {
        b.iter(|| change_scores(&store, &data, black_box(&pca), 0.1, Some(50), 0).unwrap())
    });
    g.bench_function("pca/five_fractions", |b| {
        b.iter(|| {
            change_scores_at(&store, &data, black_box(&pca), &[0.05, 0.1, 0.2, 0.5, 1.0], None, 0)
                .unwrap()
        })
    });
    g.finish();
}

criterion_group!(benches, transforms, metrics, evaluation);
criterion_main!(benches);
