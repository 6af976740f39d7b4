use std::path::Path;

use riskcore::dataset::{split, undersample, LabeledDataset, SplitConfig};
use riskcore::experiment::{cmd_ablate, cmd_importance, cmd_pca, cmd_run, cmd_synth};
use riskcore::linalg::{sigmoid, Matrix};
use riskcore::metrics::welch_t_test;
use riskcore::mlp;
use riskcore::protocol::{prepare_run, DataSource, ExperimentConfig, ModelKind, SyntheticSpec};
use riskcore::report::{check_outputs, Manifest};
use riskcore::schema::QuestionnaireSchema;
use riskcore::Error;

fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

fn toy(n: usize, positives: usize) -> LabeledDataset {
    let features = Matrix::from_vec(n, 1, (0..n).map(|i| i as f64).collect()).unwrap();
    let labels = (0..n).map(|i| u8::from(i < positives)).collect();
    LabeledDataset::new(features, labels, None, vec!["x".into()]).unwrap()
}

fn small(out: &Path, models: &[ModelKind]) -> ExperimentConfig {
    ExperimentConfig {
        data: DataSource::Synthetic(SyntheticSpec::planted(800, 2)),
        models: models.to_vec(),
        repeats: 3,
        seed: 5,
        out: out.to_path_buf(),
        fractions: vec![0.25, 0.5],
        ..ExperimentConfig::default()
    }
}

#[test]
fn welch_matches_scipy() {
    // scipy.stats.ttest_ind(a, b, equal_var=False)
    let cases: [(&[f64], &[f64], f64, f64, f64); 3] = [
        (
            &[0.912, 0.934, 0.921, 0.945, 0.928, 0.917, 0.939, 0.925, 0.931, 0.922],
            &[0.701, 0.742, 0.688, 0.731, 0.719, 0.725, 0.709, 0.737, 0.694, 0.716],
            32.100_048_935_847_12,
            14.093_435_554_248_497,
            1.398_615_191_042_889_2e-14,
        ),
        (
            &[0.30, 0.35, 0.28, 0.41, 0.33],
            &[0.31, 0.29, 0.36, 0.34, 0.30, 0.32, 0.35],
            0.394_837_559_267_890_94,
            5.581_033_511_642_998,
            0.707_606_827_988_642_8,
        ),
        (&[1.0, 3.0], &[2.0, 2.5, 2.2], -0.230_908_693_663_914_8, 1.042_435_605_399_043_8, 0.854_333_327_221_652_3),
    ];
    for (a, b, t, df, p) in cases {
        let w = welch_t_test(a, b).unwrap();
        assert!((w.t - t).abs() <= 1e-9 * t.abs().max(1.0), "t {} vs {t}", w.t);
        assert!((w.df - df).abs() <= 1e-9 * df, "df {} vs {df}", w.df);
        assert!((w.p_value - p).abs() <= 1e-7 * p, "p {} vs {p}", w.p_value);
    }
}

#[test]
fn normal_cdf_oracle_matches_scipy() {
    // scipy.stats.norm.cdf
    for (x, p) in [
        (-2.0, 0.022_750_131_948_179_195),
        (-0.5, 0.308_537_538_725_986_9),
        (0.0, 0.5),
        (0.3, 0.617_911_422_188_952_6),
        (1.7, 0.955_434_537_241_457),
    ] {
        assert!((normal_cdf(x) - p).abs() < 1e-14);
    }
}

#[test]
fn full_scale_counts() {
    let data = toy(55891, 184);
    let (train, test) = split(&data, &SplitConfig { seed: 3, ..Default::default() }).unwrap();
    assert_eq!((train.len(), test.len()), (44712, 11179));
    let balanced = undersample(&data, 1).unwrap();
    assert_eq!((balanced.positives(), balanced.negatives()), (184, 184));
}

#[test]
fn synthetic_rates_match_their_generating_model() {
    let spec = SyntheticSpec::planted(20_000, 17);
    let synth = spec.generate(&QuestionnaireSchema::reference()).unwrap();
    let n = synth.risk.len() as f64;
    let labels = synth.dataset.labels();
    let suspected = synth.dataset.suspected().unwrap();

    let p_label: Vec<f64> = synth.risk.iter().map(|&z| sigmoid(z)).collect();
    let p_flag: Vec<f64> = synth
        .suspect_margin
        .iter()
        .map(|&m| normal_cdf(m / synth.suspected_noise_sd))
        .collect();
    for (p, observed) in [(p_label, labels), (p_flag, suspected)] {
        let expected = p.iter().sum::<f64>() / n;
        let sd = (p.iter().map(|q| q * (1.0 - q)).sum::<f64>()).sqrt() / n;
        let rate = observed.iter().filter(|&&v| v == 1).count() as f64 / n;
        assert!((rate - expected).abs() < 4.0 * sd, "rate {rate} vs expected {expected} (sd {sd})");
    }
}

#[test]
fn network_best_epoch_is_no_worse_than_start() {
    let cfg = ExperimentConfig {
        data: DataSource::Synthetic(SyntheticSpec::planted(1500, 8)),
        ..ExperimentConfig::default()
    };
    let (data, _) = cfg.load_data().unwrap();
    for run in 0..2 {
        let prep = prepare_run(&data, &cfg, run).unwrap();
        let x = prep.train.features();
        let model = mlp::train(x, prep.train.labels(), &cfg.dnn_config(x.cols(), prep.seeds.model)).unwrap();
        let start = model.history[0].train_loss;
        let best = model.history.iter().find(|h| h.epoch == model.best_epoch).unwrap();
        assert!(best.train_loss <= start, "{} > {start}", best.train_loss);
    }
}

#[test]
fn every_verb_writes_checked_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), &[ModelKind::Baseline, ModelKind::Lr, ModelKind::Dnn]);

    let run = cmd_run(&cfg).unwrap();
    assert_eq!(run.runs.len(), 3);
    assert!(run.aggregates[&ModelKind::Baseline].auc.mean.is_none());

    let stored = cmd_importance(&cfg).unwrap();
    assert_eq!(stored.source, "artifacts");
    let dnn = stored.dnn.as_ref().unwrap();
    assert_eq!(dnn.top.len(), 9);
    assert_eq!(dnn.top_per_run.len(), 3);

    let ablation = cmd_ablate(&cfg).unwrap();
    let ks: Vec<usize> = ablation.fractions.iter().map(|f| f.k).collect();
    assert_eq!(ks, [21, 42, 84]);

    let pca = cmd_pca(&cfg).unwrap();
    let layers: Vec<&str> = pca.layers.iter().map(|l| l.layer.as_str()).collect();
    assert_eq!(layers, ["input", "hidden1", "hidden2"]);

    for name in [
        "metrics.json",
        "summary.csv",
        "pvalues.json",
        "runs/run_00.json",
        "models/run_02.json",
        "importance_dnn.csv",
        "importance_lr.csv",
        "importance_top.json",
        "ablation.csv",
        "pca_hidden2.csv",
        "pca_summary.json",
    ] {
        assert!(dir.path().join(name).is_file(), "{name} missing");
    }
    let report = check_outputs(dir.path()).unwrap();
    assert_eq!(report.manifests, 4);
    let manifest = Manifest::load(&dir.path().join("manifest-run.json")).unwrap();
    assert_eq!(manifest.seeds.len(), 3);

    std::fs::write(dir.path().join("summary.csv"), "tampered").unwrap();
    assert!(check_outputs(dir.path()).is_err());
}

#[test]
fn importance_from_stored_models_matches_retraining() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(&dir.path().join("a"), &[ModelKind::Lr, ModelKind::Dnn]);
    let inline = cmd_importance(&cfg).unwrap();
    cmd_run(&cfg).unwrap();
    let stored = cmd_importance(&cfg).unwrap();
    assert_eq!(inline.source, "inline");
    assert_eq!(stored.source, "artifacts");
    assert_eq!(inline.dnn, stored.dnn);
    assert_eq!(inline.lr, stored.lr);
}

#[test]
fn synth_round_trips_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), &[ModelKind::Lr]);
    let truth = cmd_synth(&cfg).unwrap();
    assert_eq!(truth.informative_dims.len(), 9);

    let csv_cfg = ExperimentConfig {
        data: DataSource::Csv(dir.path().join("dataset.csv")),
        out: dir.path().join("from_csv"),
        ..cfg.clone()
    };
    let (from_csv, none) = csv_cfg.load_data().unwrap();
    let (direct, _) = cfg.load_data().unwrap();
    assert!(none.is_none());
    assert_eq!(from_csv.labels(), direct.labels());
    assert_eq!(from_csv.suspected(), direct.suspected());
    assert_eq!(from_csv.features(), direct.features());
    assert!(matches!(cmd_synth(&csv_cfg), Err(Error::InvalidConfig(_))));
}

#[test]
fn missing_artifacts_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(check_outputs(dir.path()), Err(Error::MissingArtifacts(_))));
    let cfg = small(dir.path(), &[ModelKind::Baseline, ModelKind::Lr, ModelKind::Dnn]);
    cmd_run(&cfg).unwrap();
    std::fs::remove_file(dir.path().join("models/run_01.json")).unwrap();
    assert!(matches!(check_outputs(dir.path()), Err(Error::MissingArtifacts(_))));
    assert!(matches!(cmd_importance(&cfg), Err(Error::MissingArtifacts(_))));
}
