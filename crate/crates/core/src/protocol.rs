//! The repeated-run evaluation protocol.
//!
//! Every repeat splits the data 80/20, undersamples the training side to a
//! 1:1 class ratio, scales both sides to [0, 1], fits each selected model on
//! the balanced training set and scores it on the untouched test set.
//!
//! Run `r` draws its split from `seed + r`, its undersampling from
//! `seed + 10_000 + r` and every model-level stream (network init, SVM
//! folds) from `seed + 20_000 + r`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::{debug, info};
use serde::{Deserialize, Serialize};

use crate::dataset::{
    feature_stddev, generate_synthetic, split, undersample, LabeledDataset, SplitConfig, SuspectedConfig,
    SyntheticConfig, SyntheticData, SyntheticTruth,
};
use crate::error::{Error, Result};
use crate::importance::{AblationRanking, LrScoreMode};
use crate::linalg::Matrix;
use crate::metrics::{aggregate, evaluate_baseline, evaluate_scores, metric_values, welch_t_test};
use crate::metrics::{AggregateReport, Metric, RunMetrics};
use crate::mlp::{self, MlpConfig, MlpModel};
use crate::models::{
    AdaBoost, BoostConfig, Classifier, DecisionTree, Knn, KnnConfig, LrConfig, LrModel, SvmConfig, SvmModel,
    TreeConfig,
};
use crate::schema::{apply_scaling, fit_scaling, vector_dimension, QuestionnaireSchema, ScalingOrientation};

pub const UNDERSAMPLE_OFFSET: u64 = 10_000;
pub const MODEL_OFFSET: u64 = 20_000;
pub const DEFAULT_FRACTIONS: [f64; 5] = [0.10, 0.25, 0.50, 0.75, 1.00];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Baseline,
    Lr,
    Knn,
    Svm,
    Dt,
    Adaboost,
    Dnn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 7] = [
        ModelKind::Baseline,
        ModelKind::Lr,
        ModelKind::Knn,
        ModelKind::Svm,
        ModelKind::Dt,
        ModelKind::Adaboost,
        ModelKind::Dnn,
    ];

    pub fn key(self) -> &'static str {
        match self {
            ModelKind::Baseline => "baseline",
            ModelKind::Lr => "lr",
            ModelKind::Knn => "knn",
            ModelKind::Svm => "svm",
            ModelKind::Dt => "dt",
            ModelKind::Adaboost => "adaboost",
            ModelKind::Dnn => "dnn",
        }
    }

    /// Row label in the summary table.
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Baseline => "Baseline",
            ModelKind::Lr => "Logistic Regression",
            ModelKind::Knn => "KNN",
            ModelKind::Svm => "Support Vector Machines",
            ModelKind::Dt => "Decision Tree",
            ModelKind::Adaboost => "AdaBoost",
            ModelKind::Dnn => "Deep Neural Networks",
        }
    }

    /// Models with a continuous score get an ROC curve; hard-label and vote
    /// models do not.
    pub fn reports_auc(self) -> bool {
        matches!(self, ModelKind::Lr | ModelKind::Svm | ModelKind::Dnn)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        ModelKind::ALL
            .into_iter()
            .find(|m| m.key() == s)
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown model `{s}`; expected one of baseline, lr, knn, svm, dt, adaboost, dnn"
                ))
            })
    }
}

/// Planted informative dimensions of the default synthetic dataset.
pub const PLANTED_DIMS: [usize; 9] = [4, 13, 22, 31, 40, 49, 58, 67, 76];
pub const PLANTED_COEFFICIENTS: [f64; 9] = [6.0, -5.0, 5.5, -6.0, 5.0, -5.5, 6.0, -5.0, 5.5];

/// Serializable recipe for a synthetic dataset over the configured schema.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_samples: usize,
    pub informative_dims: Vec<usize>,
    pub true_coefficients: Vec<f64>,
    pub intercept: f64,
    pub seed: u64,
    pub fill_in_range: (f64, f64),
    pub suspected: SuspectedConfig,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec::planted(4000, 0)
    }
}

impl SyntheticSpec {
    /// Nine strong factors spread over the reference layout. The intercept
    /// puts roughly a third of the rows in the positive class.
    pub fn planted(n_samples: usize, seed: u64) -> Self {
        let sum: f64 = PLANTED_COEFFICIENTS.iter().sum();
        SyntheticSpec {
            n_samples,
            informative_dims: PLANTED_DIMS.to_vec(),
            true_coefficients: PLANTED_COEFFICIENTS.to_vec(),
            intercept: -0.5 * sum - 0.75,
            seed,
            fill_in_range: (0.0, 100.0),
            suspected: SuspectedConfig::default(),
        }
    }

    pub fn to_config(&self, schema: &QuestionnaireSchema) -> SyntheticConfig {
        SyntheticConfig {
            schema: schema.clone(),
            n_samples: self.n_samples,
            informative_dims: self.informative_dims.clone(),
            true_coefficients: self.true_coefficients.clone(),
            intercept: self.intercept,
            seed: self.seed,
            fill_in_range: self.fill_in_range,
            suspected: self.suspected.clone(),
        }
    }

    pub fn generate(&self, schema: &QuestionnaireSchema) -> Result<SyntheticData> {
        generate_synthetic(&self.to_config(schema))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    /// Path to a dataset CSV (`label`, optional `suspected`, one column per factor).
    Csv(PathBuf),
    Synthetic(SyntheticSpec),
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Synthetic(SyntheticSpec::default())
    }
}

/// Hyperparameters per model family. Seeds inside `svm` and `dnn` are
/// replaced by the run's model seed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelOverrides {
    pub lr: LrConfig,
    pub knn: KnnConfig,
    pub svm: SvmConfig,
    pub dt: TreeConfig,
    pub adaboost: BoostConfig,
    pub dnn: MlpConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataSource,
    /// Questionnaire layout; the bundled reference layout when absent.
    pub schema: Option<PathBuf>,
    pub models: Vec<ModelKind>,
    pub repeats: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub fractions: Vec<f64>,
    pub train_fraction: f64,
    pub stratified: bool,
    pub scaling: ScalingOrientation,
    /// Scale the test set with the training set's ranges instead of its own.
    pub leakage_safe: bool,
    pub lr_score: LrScoreMode,
    pub ablation_ranking: AblationRanking,
    /// Repeat whose network is projected by `pca`.
    pub pca_run: usize,
    pub overrides: ModelOverrides,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            data: DataSource::default(),
            schema: None,
            models: ModelKind::ALL.to_vec(),
            repeats: 10,
            seed: 0,
            out: PathBuf::from("out"),
            fractions: DEFAULT_FRACTIONS.to_vec(),
            train_fraction: 0.8,
            stratified: false,
            scaling: ScalingOrientation::Inverted,
            leakage_safe: false,
            lr_score: LrScoreMode::Coefficient,
            ablation_ranking: AblationRanking::PerRepeat,
            pca_run: 0,
            overrides: ModelOverrides::default(),
        }
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl ExperimentConfig {
    /// Parses a config; relative paths are taken relative to `base_dir`.
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = serde_json::from_str(text)?;
        if let DataSource::Csv(p) = &mut cfg.data {
            *p = resolve(base_dir, p);
        }
        if let Some(p) = &mut cfg.schema {
            *p = resolve(base_dir, p);
        }
        cfg.out = resolve(base_dir, &cfg.out);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_json(&text, base)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.repeats == 0 {
            return bad("repeats must be at least 1".into());
        }
        if self.models.is_empty() {
            return bad("select at least one model".into());
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!("train_fraction {} outside (0, 1)", self.train_fraction));
        }
        if let Some(&f) = self.fractions.iter().find(|&&f| !(f > 0.0 && f <= 1.0)) {
            return Err(Error::InvalidFraction(f));
        }
        if self.pca_run >= self.repeats {
            return bad(format!("pca_run {} but only {} repeats", self.pca_run, self.repeats));
        }
        self.overrides.dnn.validate()?;
        Ok(())
    }

    /// Selected models in canonical order, without duplicates.
    pub fn model_list(&self) -> Vec<ModelKind> {
        let mut m = self.models.clone();
        m.sort_unstable();
        m.dedup();
        m
    }

    pub fn load_schema(&self) -> Result<QuestionnaireSchema> {
        match &self.schema {
            Some(p) => QuestionnaireSchema::load(p),
            None => Ok(QuestionnaireSchema::reference()),
        }
    }

    /// Reads or generates the dataset; synthetic sources also return their
    /// planted truth.
    pub fn load_data(&self) -> Result<(LabeledDataset, Option<SyntheticTruth>)> {
        match &self.data {
            DataSource::Csv(p) => {
                let data = LabeledDataset::load_csv(p)?;
                if self.schema.is_some() {
                    let n = vector_dimension(&self.load_schema()?);
                    if n != data.dimension() {
                        return Err(Error::Data(format!(
                            "{} has {} factor columns but the schema encodes {n}",
                            p.display(),
                            data.dimension()
                        )));
                    }
                }
                Ok((data, None))
            }
            DataSource::Synthetic(spec) => {
                let s = spec.generate(&self.load_schema()?)?;
                Ok((s.dataset, Some(s.truth)))
            }
        }
    }

    /// Network settings for input width `n` and the given seed.
    pub fn dnn_config(&self, n: usize, seed: u64) -> MlpConfig {
        self.overrides.dnn.clone().with_input(n).with_seed(seed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSeeds {
    pub run: usize,
    pub split: u64,
    pub undersample: u64,
    pub model: u64,
}

pub fn run_seeds(base: u64, run: usize) -> RunSeeds {
    let r = run as u64;
    RunSeeds {
        run,
        split: base.wrapping_add(r),
        undersample: base.wrapping_add(UNDERSAMPLE_OFFSET).wrapping_add(r),
        model: base.wrapping_add(MODEL_OFFSET).wrapping_add(r),
    }
}

/// Scaled, balanced training set and scaled test set of one repeat.
#[derive(Clone, Debug)]
pub struct PreparedRun {
    pub seeds: RunSeeds,
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    /// Per-factor sample std of the scaled training features.
    pub sigma: Vec<f64>,
}

impl PreparedRun {
    /// Both sides restricted to `cols`, in the given order.
    pub fn project(&self, cols: &[usize]) -> Result<PreparedRun> {
        Ok(PreparedRun {
            seeds: self.seeds,
            train: self.train.project_columns(cols)?,
            test: self.test.project_columns(cols)?,
            sigma: cols.iter().map(|&c| self.sigma[c]).collect(),
        })
    }
}

pub fn prepare_run(data: &LabeledDataset, cfg: &ExperimentConfig, run: usize) -> Result<PreparedRun> {
    let seeds = run_seeds(cfg.seed, run);
    let split_cfg = SplitConfig {
        train_fraction: cfg.train_fraction,
        seed: seeds.split,
        stratified: cfg.stratified,
    };
    let (train, test) = split(data, &split_cfg)?;
    let train = undersample(&train, seeds.undersample)?;
    let train_params = fit_scaling(train.features())?;
    let test_params = if cfg.leakage_safe {
        train_params.clone()
    } else {
        fit_scaling(test.features())?
    };
    let train = train.with_features(apply_scaling(&train_params, train.features(), cfg.scaling)?)?;
    let test = test.with_features(apply_scaling(&test_params, test.features(), cfg.scaling)?)?;
    let sigma = feature_stddev(&train)?;
    debug!(
        "run {run}: {} balanced train rows, {} test rows ({} positive)",
        train.len(),
        test.len(),
        test.positives()
    );
    Ok(PreparedRun {
        seeds,
        train,
        test,
        sigma,
    })
}

/// A model fitted on one repeat's training set.
#[derive(Clone, Debug)]
pub enum FittedModel {
    Baseline,
    Lr(LrModel),
    Knn(Knn),
    Svm(SvmModel),
    Dt(DecisionTree),
    Adaboost(AdaBoost),
    Dnn(MlpModel),
}

impl FittedModel {
    fn classifier(&self) -> Option<&dyn Classifier> {
        match self {
            FittedModel::Baseline => None,
            FittedModel::Lr(m) => Some(m),
            FittedModel::Knn(m) => Some(m),
            FittedModel::Svm(m) => Some(m),
            FittedModel::Dt(m) => Some(m),
            FittedModel::Adaboost(m) => Some(m),
            FittedModel::Dnn(m) => Some(m),
        }
    }

    /// Scores for every row; `None` for the baseline, which has no model.
    pub fn scores(&self, x: &Matrix) -> Option<Vec<f64>> {
        self.classifier()
            .map(|c| x.iter_rows().map(|r| c.predict_proba(r)).collect())
    }
}

pub fn fit_model(kind: ModelKind, prep: &PreparedRun, cfg: &ExperimentConfig) -> Result<FittedModel> {
    let (x, y) = (prep.train.features(), prep.train.labels());
    let o = &cfg.overrides;
    Ok(match kind {
        ModelKind::Baseline => FittedModel::Baseline,
        ModelKind::Lr => {
            let m = o.lr.fit(x, y)?;
            if !m.converged {
                info!("run {}: logistic regression stopped after {} iterations", prep.seeds.run, m.iterations);
            }
            FittedModel::Lr(m)
        }
        ModelKind::Knn => FittedModel::Knn(o.knn.fit(x, y)?),
        ModelKind::Svm => {
            let svm = SvmConfig {
                seed: prep.seeds.model,
                ..o.svm.clone()
            };
            FittedModel::Svm(svm.fit(x, y)?)
        }
        ModelKind::Dt => FittedModel::Dt(o.dt.fit(x, y)?),
        ModelKind::Adaboost => FittedModel::Adaboost(o.adaboost.fit(x, y)?),
        ModelKind::Dnn => FittedModel::Dnn(mlp::train(x, y, &cfg.dnn_config(x.cols(), prep.seeds.model))?),
    })
}

/// Test-set metrics of a fitted model.
pub fn evaluate_model(kind: ModelKind, model: &FittedModel, prep: &PreparedRun) -> Result<RunMetrics> {
    match model.scores(prep.test.features()) {
        None => evaluate_baseline(prep.test.labels(), prep.test.suspected()),
        Some(s) => evaluate_scores(prep.test.labels(), &s, kind.reports_auc()),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmChoice {
    pub c: f64,
    pub gamma: f64,
    pub converged: bool,
}

/// Metrics of every model on one repeat.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seeds: RunSeeds,
    pub train_rows: usize,
    pub test_rows: usize,
    pub test_positives: usize,
    pub metrics: BTreeMap<ModelKind, RunMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub svm: Option<SvmChoice>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dnn_best_epoch: Option<usize>,
}

/// Fitted models kept for importance scoring and projections.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunArtifacts {
    pub run: usize,
    pub factor_names: Vec<String>,
    pub sigma: Vec<f64>,
    pub dnn: Option<MlpModel>,
    pub lr: Option<LrModel>,
}

/// Symmetric matrix of two-sided Welch p-values between models, one per
/// table metric. The diagonal is 1; pairs without a defined test are `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PValueReport {
    pub models: Vec<ModelKind>,
    pub matrices: BTreeMap<Metric, Vec<Vec<Option<f64>>>>,
}

pub fn pvalue_report(runs: &[RunRecord], models: &[ModelKind]) -> PValueReport {
    let mut matrices = BTreeMap::new();
    for metric in Metric::TABLE {
        let values: Vec<Vec<f64>> = models
            .iter()
            .map(|m| {
                let per_run: Vec<RunMetrics> = runs.iter().filter_map(|r| r.metrics.get(m).cloned()).collect();
                metric_values(&per_run, metric)
            })
            .collect();
        let n = models.len();
        let mut p = vec![vec![None; n]; n];
        for i in 0..n {
            p[i][i] = Some(1.0);
            for j in i + 1..n {
                let v = welch_t_test(&values[i], &values[j]).ok().map(|w| w.p_value);
                p[i][j] = v;
                p[j][i] = v;
            }
        }
        matrices.insert(metric, p);
    }
    PValueReport {
        models: models.to_vec(),
        matrices,
    }
}

#[derive(Clone, Debug)]
pub struct ProtocolOutput {
    pub models: Vec<ModelKind>,
    pub runs: Vec<RunRecord>,
    pub artifacts: Vec<RunArtifacts>,
    pub aggregates: BTreeMap<ModelKind, AggregateReport>,
    pub pvalues: PValueReport,
}

/// One repeat of every selected model.
pub fn run_repeat(data: &LabeledDataset, cfg: &ExperimentConfig, run: usize) -> Result<(RunRecord, RunArtifacts)> {
    let prep = prepare_run(data, cfg, run)?;
    let mut record = RunRecord {
        run,
        seeds: prep.seeds,
        train_rows: prep.train.len(),
        test_rows: prep.test.len(),
        test_positives: prep.test.positives(),
        metrics: BTreeMap::new(),
        svm: None,
        dnn_best_epoch: None,
    };
    let mut artifacts = RunArtifacts {
        run,
        factor_names: data.factor_names().to_vec(),
        sigma: prep.sigma.clone(),
        dnn: None,
        lr: None,
    };
    for kind in cfg.model_list() {
        let model = fit_model(kind, &prep, cfg)?;
        let metrics = evaluate_model(kind, &model, &prep)?;
        debug!("run {run}: {kind} sensitivity {:?} auc {:?}", metrics.sensitivity, metrics.auc);
        record.metrics.insert(kind, metrics);
        match model {
            FittedModel::Svm(m) => {
                record.svm = Some(SvmChoice {
                    c: m.c,
                    gamma: m.gamma,
                    converged: m.converged,
                })
            }
            FittedModel::Dnn(m) => {
                record.dnn_best_epoch = Some(m.best_epoch);
                artifacts.dnn = Some(m);
            }
            FittedModel::Lr(m) => artifacts.lr = Some(m),
            _ => {}
        }
    }
    Ok((record, artifacts))
}

/// All repeats, aggregates and pairwise p-values.
pub fn run_protocol(data: &LabeledDataset, cfg: &ExperimentConfig) -> Result<ProtocolOutput> {
    cfg.validate()?;
    let models = cfg.model_list();
    let mut runs = Vec::with_capacity(cfg.repeats);
    let mut artifacts = Vec::with_capacity(cfg.repeats);
    for r in 0..cfg.repeats {
        let (rec, art) = run_repeat(data, cfg, r)?;
        info!("run {r} done");
        runs.push(rec);
        artifacts.push(art);
    }
    let aggregates = models
        .iter()
        .map(|m| {
            let per_run: Vec<RunMetrics> = runs.iter().map(|r| r.metrics[m].clone()).collect();
            (*m, aggregate(&per_run))
        })
        .collect();
    let pvalues = pvalue_report(&runs, &models);
    Ok(ProtocolOutput {
        models,
        runs,
        artifacts,
        aggregates,
        pvalues,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_streams_do_not_collide() {
        let s = run_seeds(7, 3);
        assert_eq!((s.split, s.undersample, s.model), (10, 10_010, 20_010));
        assert_eq!(run_seeds(u64::MAX, 1).split, 0);
    }

    #[test]
    fn model_names_round_trip() {
        for m in ModelKind::ALL {
            assert_eq!(m.key().parse::<ModelKind>().unwrap(), m);
        }
        assert!("rf".parse::<ModelKind>().is_err());
        assert_eq!(" DNN ".parse::<ModelKind>().unwrap(), ModelKind::Dnn);
    }

    #[test]
    fn config_defaults_and_paths() {
        let cfg = ExperimentConfig::from_json(
            r#"{"data": {"csv": "d.csv"}, "models": ["dnn", "lr", "dnn"], "out": "/tmp/x"}"#,
            Path::new("/base"),
        )
        .unwrap();
        assert_eq!(cfg.data, DataSource::Csv(PathBuf::from("/base/d.csv")));
        assert_eq!(cfg.out, PathBuf::from("/tmp/x"));
        assert_eq!(cfg.model_list(), vec![ModelKind::Lr, ModelKind::Dnn]);
        assert_eq!(cfg.repeats, 10);
        assert_eq!(cfg.fractions, DEFAULT_FRACTIONS.to_vec());
        assert!(ExperimentConfig::from_json(r#"{"repeat": 3}"#, Path::new(".")).is_err());
    }

    #[test]
    fn invalid_configs() {
        let base = ExperimentConfig::default();
        for cfg in [
            ExperimentConfig { repeats: 0, ..base.clone() },
            ExperimentConfig { models: vec![], ..base.clone() },
            ExperimentConfig { fractions: vec![0.0], ..base.clone() },
            ExperimentConfig { train_fraction: 1.0, ..base.clone() },
            ExperimentConfig { pca_run: 10, ..base.clone() },
        ] {
            assert!(cfg.validate().is_err());
        }
        assert!(base.validate().is_ok());
    }

    #[test]
    fn pvalues_are_symmetric_with_unit_diagonal() {
        let mk = |v: f64| RunMetrics {
            sensitivity: Some(v),
            ..Default::default()
        };
        let runs: Vec<RunRecord> = (0..4)
            .map(|r| RunRecord {
                run: r,
                seeds: run_seeds(0, r),
                train_rows: 0,
                test_rows: 0,
                test_positives: 0,
                metrics: [
                    (ModelKind::Lr, mk(0.5 + 0.01 * r as f64)),
                    (ModelKind::Dnn, mk(0.7 - 0.02 * r as f64)),
                    (ModelKind::Knn, mk(0.6)),
                ]
                .into_iter()
                .collect(),
                svm: None,
                dnn_best_epoch: None,
            })
            .collect();
        let models = [ModelKind::Lr, ModelKind::Knn, ModelKind::Dnn];
        let p = pvalue_report(&runs, &models);
        let m = &p.matrices[&Metric::Sensitivity];
        for i in 0..3 {
            assert_eq!(m[i][i], Some(1.0));
            for j in 0..3 {
                assert_eq!(m[i][j], m[j][i]);
            }
        }
        assert!(m[0][2].unwrap() < 0.05);
        assert!(p.matrices[&Metric::Auc][0][1].is_none());
    }
}
