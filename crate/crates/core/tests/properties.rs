use proptest::prelude::*;

use riskcore::dataset::{split, undersample, LabeledDataset, SplitConfig};
use riskcore::importance::{dnn_contributions, select_top_fraction};
use riskcore::linalg::Matrix;
use riskcore::metrics::{confusion, derive, roc_auc};
use riskcore::mlp::{MlpConfig, MlpModel};
use riskcore::models::{Classifier, DecisionTree, KnnConfig, LrConfig, TreeConfig};
use riskcore::pca::pca_fit;
use riskcore::schema::{
    apply_scaling, decode_response, encode_response, fit_scaling, Answer, QuestionSpec, QuestionnaireSchema,
    ScalingOrientation,
};

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-50.0..50.0f64, rows * cols).prop_map(move |d| Matrix::from_vec(rows, cols, d).unwrap())
}

fn labelled(max_rows: usize, cols: usize) -> impl Strategy<Value = (Matrix, Vec<u8>)> {
    (4..max_rows).prop_flat_map(move |n| {
        (
            prop::collection::vec(0u8..4, n * cols),
            labels(n, n + 1),
        )
            .prop_map(move |(d, y)| {
                let d = d.into_iter().map(f64::from).collect();
                (Matrix::from_vec(y.len(), cols, d).unwrap(), y)
            })
    })
}

fn labels(min: usize, max: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..2, min..max).prop_map(|mut y| {
        y[0] = 0;
        y[1] = 1;
        y
    })
}

/// One feature holding the row index, so rows can be traced after resampling.
fn indexed(y: Vec<u8>) -> LabeledDataset {
    let n = y.len();
    let x = Matrix::from_vec(n, 1, (0..n).map(|i| i as f64).collect()).unwrap();
    LabeledDataset::new(x, y, None, vec!["row".into()]).unwrap()
}

fn schema() -> QuestionnaireSchema {
    QuestionnaireSchema::new(vec![
        QuestionSpec::single("A", "Gender", 3),
        QuestionSpec::multi("B", "Diet", 4),
        QuestionSpec::single("C", "Smoking", 5),
        QuestionSpec::fill_in("D", "Age"),
    ])
    .unwrap()
}

fn response() -> impl Strategy<Value = Vec<Answer>> {
    (0usize..3, prop::collection::btree_set(0usize..4, 0..=4), 0usize..5, 0.0..100.0f64).prop_map(
        |(a, b, c, d)| {
            vec![
                Answer::Single(a),
                Answer::Multi(b.into_iter().collect()),
                Answer::Single(c),
                Answer::FillIn(d),
            ]
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scaling_maps_into_unit_interval(m in (2usize..20, 1usize..6).prop_flat_map(|(r, c)| matrix(r, c))) {
        let p = fit_scaling(&m).unwrap();
        let inverted = apply_scaling(&p, &m, ScalingOrientation::Inverted).unwrap();
        let standard = apply_scaling(&p, &m, ScalingOrientation::Standard).unwrap();
        prop_assert!(inverted.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
        for c in 0..m.cols() {
            for r in 0..m.rows() {
                if p.constant[c] {
                    prop_assert_eq!(inverted.get(r, c), 0.0);
                    continue;
                }
                if m.get(r, c) == p.min[c] { prop_assert_eq!(inverted.get(r, c), 1.0); }
                if m.get(r, c) == p.max[c] { prop_assert_eq!(inverted.get(r, c), 0.0); }
                prop_assert!((inverted.get(r, c) - (1.0 - standard.get(r, c))).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn choice_encoding_round_trips_and_is_injective(a in response(), b in response()) {
        let s = schema();
        let (va, vb) = (encode_response(&s, &a).unwrap(), encode_response(&s, &b).unwrap());
        prop_assert_eq!(decode_response(&s, &va).unwrap(), a.clone());
        let choices_equal = a[..3] == b[..3];
        prop_assert_eq!(choices_equal, va[..va.len() - 1] == vb[..vb.len() - 1]);
    }

    #[test]
    fn split_partitions_rows(y in labels(5, 40), seed in any::<u64>(), frac in 0.2..0.8f64) {
        let n = y.len();
        let d = indexed(y);
        let cfg = SplitConfig { train_fraction: frac, seed, stratified: false };
        let (tr, te) = split(&d, &cfg).unwrap();
        prop_assert_eq!(tr.len(), (frac * n as f64).floor() as usize);
        let mut ids: Vec<usize> = tr.features().column(0).iter().chain(te.features().column(0).iter())
            .map(|&v| v as usize).collect();
        ids.sort_unstable();
        prop_assert_eq!(ids, (0..n).collect::<Vec<_>>());
        let (tr2, _) = split(&d, &cfg).unwrap();
        prop_assert_eq!(tr2.features(), tr.features());
    }

    #[test]
    fn undersample_keeps_every_minority_row(y in labels(4, 60), seed in any::<u64>()) {
        let d = indexed(y.clone());
        let b = undersample(&d, seed).unwrap();
        prop_assert_eq!(b.positives(), b.negatives());
        let minority = if d.positives() <= d.negatives() { 1 } else { 0 };
        let kept: Vec<usize> = b.features().column(0).iter().map(|&v| v as usize).collect();
        for (i, &label) in y.iter().enumerate() {
            if label == minority {
                prop_assert!(kept.contains(&i));
            }
        }
    }

    #[test]
    fn auc_ignores_increasing_transforms(
        (labels, scores) in (6usize..80).prop_flat_map(|n| (labels(n, n + 1), prop::collection::vec(-3.0..3.0f64, n))),
    ) {
        let base = roc_auc(&labels, &scores).unwrap();
        let warped: Vec<f64> = scores.iter().map(|s| (2.0 * s).exp() + 1.0).collect();
        prop_assert_eq!(roc_auc(&labels, &warped).unwrap().auc, base.auc);
        for w in base.points.windows(2) {
            prop_assert!(w[1].0 >= w[0].0 && w[1].1 >= w[0].1);
        }
        prop_assert_eq!(base.points.first().copied(), Some((0.0, 0.0)));
        prop_assert_eq!(base.points.last().copied(), Some((1.0, 1.0)));
    }

    #[test]
    fn complemented_predictions_swap_rates(pairs in prop::collection::vec((0u8..2, 0u8..2), 1..60)) {
        let (y, p): (Vec<u8>, Vec<u8>) = pairs.into_iter().unzip();
        let flipped: Vec<u8> = p.iter().map(|v| 1 - v).collect();
        let a = derive(&confusion(&y, &p).unwrap());
        let b = derive(&confusion(&y, &flipped).unwrap());
        prop_assert_eq!(a.sensitivity, b.fnr);
        prop_assert_eq!(a.fpr, b.specificity);
        prop_assert_eq!(a.counts.total(), y.len());
    }

    #[test]
    fn contributions_ignore_weight_signs(seed in any::<u64>(), flips in prop::collection::vec(any::<bool>(), 84 * 8)) {
        let cfg = MlpConfig { seed, ..MlpConfig::default() };
        let model = MlpModel::init(&cfg).unwrap();
        let mut flipped = model.clone();
        for (w, f) in flipped.weights_mut()[0].as_mut_slice().iter_mut().zip(&flips) {
            if *f { *w = -*w; }
        }
        let sigma: Vec<f64> = (0..84).map(|i| 0.1 + (i % 7) as f64 * 0.05).collect();
        let a = dnn_contributions(&model, &sigma).unwrap();
        let b = dnn_contributions(&flipped, &sigma).unwrap();
        prop_assert_eq!(&a.scores, &b.scores);
        let mut previous: Vec<usize> = Vec::new();
        for f in [0.10, 0.25, 0.50, 0.75, 1.0] {
            let top = select_top_fraction(&a, f).unwrap();
            prop_assert!(previous.iter().all(|i| top.contains(i)));
            previous = top;
        }
    }

    #[test]
    fn pca_variance_bounded_by_total(m in (3usize..15, 2usize..6).prop_flat_map(|(r, c)| matrix(r, c))) {
        let p = pca_fit(&m).unwrap();
        let explained = p.explained_variance[0] + p.explained_variance[1];
        prop_assert!(explained <= p.total_variance * (1.0 + 1e-9) + 1e-12);
        prop_assert!(p.explained_variance[0] + 1e-9 >= p.explained_variance[1]);
        let row = m.row(0);
        let coords = p.project_row(row);
        for k in 0..2 {
            let expect: f64 = row.iter().zip(&p.mean).zip(&p.axes[k]).map(|((x, mu), a)| (x - mu) * a).sum();
            prop_assert!((coords[k] - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
        }
    }

    #[test]
    fn predict_agrees_with_thresholded_proba((x, y) in labelled(30, 3)) {
        let lr = LrConfig::default().fit(&x, &y).unwrap();
        let knn = KnnConfig { k: 3 }.fit(&x, &y).unwrap();
        let tree = TreeConfig::default().fit(&x, &y).unwrap();
        let models: [&dyn Classifier; 3] = [&lr, &knn, &tree];
        for m in models {
            for r in x.iter_rows() {
                prop_assert_eq!(m.predict(r), u8::from(m.predict_proba(r) >= 0.5));
            }
        }
    }

    #[test]
    fn tree_fits_consistent_data((x, y) in labelled(40, 3)) {
        // keep only the first label seen for every distinct row
        let mut seen: Vec<(Vec<f64>, u8)> = Vec::new();
        let y: Vec<u8> = x.iter_rows().zip(&y).map(|(r, &l)| {
            match seen.iter().find(|(s, _)| s.as_slice() == r) {
                Some((_, first)) => *first,
                None => { seen.push((r.to_vec(), l)); l }
            }
        }).collect();
        prop_assume!(y.contains(&0) && y.contains(&1));
        let tree: DecisionTree = TreeConfig { max_depth: None, min_samples_split: 2 }.fit(&x, &y).unwrap();
        for (r, &l) in x.iter_rows().zip(&y) {
            prop_assert_eq!(tree.predict(r), l);
        }
    }
}
