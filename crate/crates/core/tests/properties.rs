use nalgebra::DMatrix;
use proptest::prelude::*;

use scd_axes_core::embedstore::{
    load_pairs, load_store, load_temporal, save_pairs, save_store, save_temporal, EmbeddingStore,
    PairDataset, PairInstance, TemporalDataset, TemporalTarget,
};
use scd_axes_core::metrics::{auc_mannwhitney, roc_from_scores, spearman_rho, trapezoid_area, Scored};
use scd_axes_core::rng::PortableRng;
use scd_axes_core::synthkit::{oracle_skewness, oracle_spearman};
use scd_axes_core::transforms::{fit_ica, fit_pca, skewness, IcaConfig};
use scd_axes_core::Error;

fn scored() -> impl Strategy<Value = Vec<Scored>> {
    // Coarse scores so ties are common.
    prop::collection::vec((0i32..20, any::<bool>()), 2..60).prop_filter_map(
        "needs both classes",
        |v| {
            let s: Vec<Scored> = v
                .into_iter()
                .map(|(x, p)| Scored::new(f64::from(x) * 0.25, p))
                .collect();
            let pos = s.iter().filter(|x| x.positive).count();
            (pos > 0 && pos < s.len()).then_some(s)
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn trapezoid_equals_mann_whitney(s in scored()) {
        let roc = roc_from_scores(&s).unwrap();
        let mw = auc_mannwhitney(&s).unwrap();
        prop_assert!((roc.auc - mw).abs() < 1e-12);
        prop_assert!((trapezoid_area(&roc.points) - roc.auc).abs() < 1e-12);
        prop_assert_eq!((roc.points[0].fpr, roc.points[0].tpr), (0.0, 0.0));
        let last = roc.points.last().unwrap();
        prop_assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
    }

    #[test]
    fn negation_complements_auc(s in scored()) {
        let neg: Vec<Scored> = s.iter().map(|x| Scored::new(-x.score, x.positive)).collect();
        let a = roc_from_scores(&s).unwrap().auc;
        let b = roc_from_scores(&neg).unwrap().auc;
        prop_assert!((a + b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn duplication_keeps_auc(s in scored()) {
        let doubled: Vec<Scored> = s.iter().chain(&s).copied().collect();
        let a = roc_from_scores(&s).unwrap().auc;
        let b = roc_from_scores(&doubled).unwrap().auc;
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn monotone_relabel_keeps_roc(s in scored()) {
        let mapped: Vec<Scored> = s
            .iter()
            .map(|x| Scored::new((x.score * 0.7).exp() + 3.0, x.positive))
            .collect();
        let a = roc_from_scores(&s).unwrap();
        let b = roc_from_scores(&mapped).unwrap();
        let pts = |r: &scd_axes_core::RocResult| -> Vec<(f64, f64)> {
            r.points.iter().map(|p| (p.fpr, p.tpr)).collect()
        };
        prop_assert_eq!(pts(&a), pts(&b));
        prop_assert_eq!(a.auc, b.auc);
    }

    #[test]
    fn spearman_symmetry_and_monotone_invariance(
        v in prop::collection::vec((0i32..12, -50i32..50), 3..40)
    ) {
        let x: Vec<f64> = v.iter().map(|p| f64::from(p.0)).collect();
        let y: Vec<f64> = v.iter().map(|p| f64::from(p.1)).collect();
        match (spearman_rho(&x, &y), spearman_rho(&y, &x)) {
            (Ok(a), Ok(b)) => {
                prop_assert!((a - b).abs() < 1e-12);
                prop_assert!((-1.0..=1.0).contains(&a));
                let fx: Vec<f64> = x.iter().map(|t| t * t * t + 2.0 * t).collect();
                let c = spearman_rho(&fx, &y).unwrap();
                prop_assert!((a - c).abs() < 1e-12);
                prop_assert!((a - oracle_spearman(&x, &y)).abs() < 1e-12);
            }
            (Err(e), Err(_)) => prop_assert!(e.is_evaluation_undefined()),
            _ => prop_assert!(false, "asymmetric error behaviour"),
        }
    }

    #[test]
    fn skewness_matches_moment_oracle(x in prop::collection::vec(-100.0f64..100.0, 2..200)) {
        prop_assert!((skewness(&x) - oracle_skewness(&x)).abs() < 1e-12);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        prop_assert!((skewness(&x) + skewness(&neg)).abs() < 1e-12);
    }

    #[test]
    fn store_round_trip(
        dim in 1usize..6,
        rows in prop::collection::vec(prop::collection::vec(any::<f32>().prop_filter("finite", |v| v.is_finite()), 6), 0..12)
    ) {
        let ids: Vec<String> = (0..rows.len()).map(|i| format!("occ-{i}")).collect();
        let data: Vec<f32> = rows.iter().flat_map(|r| r[..dim].iter().copied()).collect();
        let store = EmbeddingStore::new(dim, ids, data).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_store(&store, dir.path().join("s")).unwrap();
        prop_assert_eq!(&load_store(dir.path().join("s")).unwrap(), &store);
        scd_axes_core::embedstore::save_csv(&store, dir.path().join("s.csv")).unwrap();
        prop_assert_eq!(&load_store(dir.path().join("s.csv")).unwrap(), &store);
    }

    #[test]
    fn dataset_round_trip(
        labels in prop::collection::vec(any::<bool>(), 1..20),
        golds in prop::collection::vec(prop::option::of(-10.0f64..10.0), 1..10),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let pairs = PairDataset::new(
            labels
                .iter()
                .enumerate()
                .map(|(i, &label)| PairInstance {
                    instance_id: format!("i{i}"),
                    row_a: format!("a{i}"),
                    row_b: format!("b{i}"),
                    label,
                })
                .collect(),
        )
        .unwrap();
        save_pairs(&pairs, dir.path().join("p.jsonl")).unwrap();
        prop_assert_eq!(&load_pairs(dir.path().join("p.jsonl")).unwrap(), &pairs);

        let temporal = TemporalDataset::new(
            golds
                .iter()
                .enumerate()
                .map(|(i, &g)| TemporalTarget {
                    lemma: format!("w{i}"),
                    period1_rows: vec![format!("x{i}")],
                    period2_rows: vec![format!("y{i}"), format!("z{i}")],
                    graded_gold: g,
                    binary_gold: g.map(|v| v > 0.0),
                })
                .collect(),
        )
        .unwrap();
        save_temporal(&temporal, dir.path().join("t.jsonl")).unwrap();
        prop_assert_eq!(&load_temporal(dir.path().join("t.jsonl")).unwrap(), &temporal);
    }

    #[test]
    fn validation_rejects_mutations(which in 0usize..5, pos in 0usize..8) {
        let ids: Vec<String> = (0..4).map(|i| format!("r{i}")).collect();
        let mut data = vec![0.5f32; 8];
        let mut row_ids = ids.clone();
        match which {
            0 => {
                data[pos] = f32::NAN;
                let hit = matches!(
                    EmbeddingStore::new(2, row_ids, data),
                    Err(Error::NonFinite { row, col }) if row == pos / 2 && col == pos % 2
                );
                prop_assert!(hit);
            }
            1 => {
                data[pos] = f32::INFINITY;
                prop_assert!(EmbeddingStore::new(2, row_ids, data).is_err());
            }
            2 => {
                row_ids[pos % 4] = row_ids[(pos + 1) % 4].clone();
                let hit = matches!(EmbeddingStore::new(2, row_ids, data), Err(Error::DuplicateId(_)));
                prop_assert!(hit);
            }
            3 => {
                data.truncate(pos);
                let hit = matches!(EmbeddingStore::new(2, row_ids, data), Err(Error::ByteLength { .. }));
                prop_assert!(hit);
            }
            _ => {
                let same = &ids[pos % 4];
                let inst = PairInstance {
                    instance_id: "i".into(),
                    row_a: same.clone(),
                    row_b: same.clone(),
                    label: pos % 2 == 0,
                };
                prop_assert!(PairDataset::new(vec![inst]).is_err());
                let t = TemporalTarget {
                    lemma: "w".into(),
                    period1_rows: vec![same.clone()],
                    period2_rows: if pos % 2 == 0 { vec![] } else { vec![same.clone()] },
                    graded_gold: None,
                    binary_gold: None,
                };
                prop_assert!(TemporalDataset::new(vec![t]).is_err());
            }
        }
    }
}

fn abs_corr(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        ab += (x - ma) * (y - mb);
        aa += (x - ma).powi(2);
        bb += (y - mb).powi(2);
    }
    (ab / (aa * bb).sqrt()).abs()
}

#[test]
fn ica_row_shuffle_invariance() {
    let mix = scd_axes_core::synthkit::gen_ica_mixture(2000, 4, 31).unwrap();
    let x = &mix.observed;
    let mut order: Vec<usize> = (0..x.nrows()).collect();
    PortableRng::new(5).shuffle(&mut order);
    let shuffled = DMatrix::from_fn(x.nrows(), x.ncols(), |r, c| x[(order[r], c)]);
    let cfg = IcaConfig {
        seed: 11,
        ..IcaConfig::default()
    };
    let a = fit_ica(x, &cfg).unwrap();
    let b = fit_ica(&shuffled, &cfg).unwrap();
    let ya = a.project(x, 1.0).unwrap();
    let yb = b.project(x, 1.0).unwrap();
    for i in 0..ya.ncols() {
        let best = (0..yb.ncols())
            .map(|j| abs_corr(ya.column(i).as_slice(), yb.column(j).as_slice()))
            .fold(0.0, f64::max);
        assert!(best >= 0.999, "component {i}: best match {best}");
    }
}

#[test]
fn pca_variance_matches_scores_on_random_data() {
    let mut rng = PortableRng::new(77);
    for trial in 0..20 {
        let d = 2 + trial % 7;
        let n = d + 5 + trial;
        let x = DMatrix::from_fn(n, d, |_, c| rng.gaussian() * (c + 1) as f64);
        let t = fit_pca(&x).unwrap();
        assert!(t.axis_scores.windows(2).all(|w| w[0] >= w[1]));
        let y = t.project(&x, 1.0).unwrap();
        let total: f64 = y.iter().map(|v| v * v).sum::<f64>() / n as f64;
        for (i, col) in y.column_iter().enumerate() {
            let var = col.iter().map(|v| v * v).sum::<f64>() / n as f64;
            assert!((var - t.axis_scores[i] * total).abs() < 1e-8);
        }
    }
}
