//! End-to-end behaviour of the evaluators on planted fixtures.

use scd_axes_core::contextual::{wic_distances, wic_roc};
use scd_axes_core::embedstore::{EmbeddingStore, PairDataset, TemporalTarget};
use scd_axes_core::synthkit::{gen_planted_pairs, gen_planted_temporal, gen_planted_temporal_with_golds, PlantedSpec};
use scd_axes_core::temporal::{change_score, change_scores, spearman_sweep, temporal_roc};
use scd_axes_core::transforms::{fit_pca, fit_raw};
use scd_axes_core::rng::PortableRng;

fn pairs_spec() -> PlantedSpec {
    PlantedSpec {
        d: 64,
        n_signal_axes: 4,
        signal_strength: 3.0,
        noise_sigma: 1.0,
        n_items: 400,
        occurrences_per_period: 1,
        seed: 7,
    }
}

#[test]
fn noiseless_pairs_separate_perfectly() {
    let spec = PlantedSpec {
        noise_sigma: 1e-6,
        signal_strength: 1.0,
        n_items: 50,
        ..pairs_spec()
    };
    let (store, pairs) = gen_planted_pairs(&spec).unwrap();
    let d = wic_distances(&store, &pairs, &fit_raw(64), 1.0).unwrap();
    for p in &d {
        if p.label {
            assert!(p.distance < 1e-3);
        } else {
            assert!(p.distance >= 1.0 - 1e-4, "{}", p.distance);
        }
    }
    assert_eq!(wic_roc(&d).unwrap().auc, 1.0);
}

#[test]
fn pca_top_tenth_keeps_pair_auc() {
    let (store, pairs) = gen_planted_pairs(&pairs_spec()).unwrap();
    let rows = pairs.referenced_rows(&store).unwrap();
    let pca = fit_pca(&store.matrix_of(&rows)).unwrap();
    let full = wic_roc(&wic_distances(&store, &pairs, &fit_raw(64), 1.0).unwrap()).unwrap().auc;
    let top = wic_roc(&wic_distances(&store, &pairs, &pca, 0.1).unwrap()).unwrap().auc;
    assert!(top >= full - 0.02, "top {top} full {full}");
}

#[test]
fn distances_do_not_depend_on_partitioning() {
    let (store, pairs) = gen_planted_pairs(&PlantedSpec { n_items: 60, ..pairs_spec() }).unwrap();
    let raw = fit_raw(64);
    let all = wic_distances(&store, &pairs, &raw, 0.5).unwrap();
    let chunks: Vec<_> = pairs
        .instances()
        .chunks(7)
        .flat_map(|c| {
            let part = PairDataset::new(c.to_vec()).unwrap();
            wic_distances(&store, &part, &raw, 0.5).unwrap()
        })
        .collect();
    assert_eq!(all, chunks);
}

fn temporal_spec() -> PlantedSpec {
    PlantedSpec {
        d: 32,
        n_signal_axes: 3,
        signal_strength: 3.0,
        noise_sigma: 1.0,
        n_items: 12,
        occurrences_per_period: 20,
        seed: 3,
    }
}

#[test]
fn graded_golds_give_monotone_scores() {
    let (store, data) =
        gen_planted_temporal_with_golds(&temporal_spec(), &[0.0, 1.0, 2.0, 3.0]).unwrap();
    let table = change_scores(&store, &data, &fit_raw(32), 1.0, None, 0).unwrap();
    let scores: Vec<f64> = table.entries.iter().map(|e| e.score).collect();
    assert!(scores.windows(2).all(|w| w[0] < w[1]), "{scores:?}");
    assert!(table.spearman().unwrap() >= 0.9);
}

#[test]
fn change_score_is_symmetric_in_period_order() {
    let (store, data) = gen_planted_temporal(&temporal_spec()).unwrap();
    let pca = fit_pca(&store.to_matrix()).unwrap();
    for t in data.targets() {
        let swapped = TemporalTarget {
            period1_rows: t.period2_rows.clone(),
            period2_rows: t.period1_rows.clone(),
            ..t.clone()
        };
        for tr in [&fit_raw(32), &pca] {
            let a = change_score(&store, t, tr, 0.5, None, 0).unwrap().score;
            let b = change_score(&store, &swapped, tr, 0.5, None, 0).unwrap().score;
            assert!((a - b).abs() < 1e-12);
        }
        let raw = change_score(&store, t, &fit_raw(32), 1.0, None, 0).unwrap().score;
        let rot = change_score(&store, t, &pca, 1.0, None, 0).unwrap().score;
        assert!((raw - rot).abs() < 1e-8);
    }
}

#[test]
fn scaling_embeddings_scales_scores_only() {
    let (store, data) = gen_planted_temporal(&temporal_spec()).unwrap();
    let c = 4.0f32;
    let scaled = EmbeddingStore::new(
        store.dim(),
        store.row_ids().to_vec(),
        store.data().iter().map(|v| v * c).collect(),
    )
    .unwrap();
    let raw = fit_raw(32);
    let a = change_scores(&store, &data, &raw, 1.0, None, 0).unwrap();
    let b = change_scores(&scaled, &data, &raw, 1.0, None, 0).unwrap();
    for (x, y) in a.entries.iter().zip(&b.entries) {
        assert!((y.score - f64::from(c) * x.score).abs() <= 1e-12 * y.score);
    }
    assert_eq!(temporal_roc(&a).unwrap().auc, temporal_roc(&b).unwrap().auc);
    assert!((a.spearman().unwrap() - b.spearman().unwrap()).abs() < 1e-12);
}

#[test]
fn subsampled_scores_are_unbiased() {
    let mut rng = PortableRng::new(40);
    let ids: Vec<String> = (0..60).map(|i| format!("o{i}")).collect();
    let data: Vec<f32> = (0..60 * 4).map(|_| rng.gaussian() as f32).collect();
    let store = EmbeddingStore::new(4, ids.clone(), data).unwrap();
    let target = TemporalTarget {
        lemma: "w".into(),
        period1_rows: ids[..25].to_vec(),
        period2_rows: ids[25..].to_vec(),
        graded_gold: None,
        binary_gold: None,
    };
    let raw = fit_raw(4);
    let exact = change_score(&store, &target, &raw, 1.0, None, 0).unwrap().score;
    let samples: Vec<f64> = (0..50u64)
        .map(|seed| change_score(&store, &target, &raw, 1.0, Some(8), seed).unwrap().score)
        .collect();
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let sd = (samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let se = sd / n.sqrt();
    assert!((mean - exact).abs() <= 3.0 * se, "mean {mean} exact {exact} se {se}");
}

#[test]
fn sweep_reaches_full_value_after_signal_axes() {
    let spec = PlantedSpec {
        n_signal_axes: 1,
        n_items: 20,
        occurrences_per_period: 50,
        ..temporal_spec()
    };
    let (store, data) = gen_planted_temporal(&spec).unwrap();
    let rows = data.referenced_rows(&store).unwrap();
    let pca = fit_pca(&store.matrix_of(&rows)).unwrap();
    let grid: Vec<usize> = (1..=32).collect();
    let sweep = spearman_sweep(&store, &data, &pca, &grid, None, 0).unwrap();
    let full = *sweep.metric_values.last().unwrap();
    assert!((sweep.metric_values[0] - full).abs() <= 0.05, "{:?}", sweep.metric_values);
    assert!(full >= 0.9);
    let raw_full = spearman_sweep(&store, &data, &fit_raw(32), &[32], None, 0).unwrap();
    let direct = change_scores(&store, &data, &fit_raw(32), 1.0, None, 0).unwrap();
    assert_eq!(raw_full.metric_values[0], direct.spearman().unwrap());
}
