//! The command-line verbs. Each writes into the configured output
//! directory and finishes with a manifest listing every file it wrote.

use std::collections::BTreeMap;
use std::time::Instant;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::dataset::SyntheticTruth;
use crate::error::{Error, Result};
use crate::importance::{
    average_scores, dnn_contributions, lr_contributions, run_ablation, select_top_fraction, AblationResult,
    ContributionRanking, LrScoreMode, ScoreTable,
};
use crate::metrics::Metric;
use crate::mlp;
use crate::pca::{project_layers, separability_probe};
use crate::protocol::{
    prepare_run, run_protocol, run_seeds, DataSource, ExperimentConfig, ModelKind, ProtocolOutput, RunArtifacts,
    RunSeeds,
};
use crate::report::{self, manifest_name, metrics_report, table_csv, Manifest, OutputDir, Timings};

pub const TOP_FRACTION: f64 = 0.10;

struct Clock {
    start: Instant,
    last: Instant,
    phases: BTreeMap<String, f64>,
}

impl Clock {
    fn new() -> Self {
        let now = Instant::now();
        Clock {
            start: now,
            last: now,
            phases: BTreeMap::new(),
        }
    }

    fn lap(&mut self, name: &str) {
        let now = Instant::now();
        self.phases.insert(name.to_string(), (now - self.last).as_secs_f64());
        self.last = now;
    }

    fn finish(self) -> Timings {
        Timings {
            total_seconds: self.start.elapsed().as_secs_f64(),
            phases: self.phases,
        }
    }
}

fn all_seeds(cfg: &ExperimentConfig) -> Vec<RunSeeds> {
    (0..cfg.repeats).map(|r| run_seeds(cfg.seed, r)).collect()
}

/// Repeated evaluation of every selected model.
///
/// Writes `metrics.json`, `summary.csv`, `pvalues.json`, one
/// `runs/run_XX.json` per repeat and, when the network or the regression
/// ran, `models/run_XX.json`.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<ProtocolOutput> {
    cfg.validate()?;
    let mut clock = Clock::new();
    let (data, _) = cfg.load_data()?;
    clock.lap("load");
    let result = run_protocol(&data, cfg)?;
    clock.lap("protocol");

    let mut out = OutputDir::create(&cfg.out)?;
    out.write_json("metrics.json", &metrics_report(&result, cfg.seed))?;
    out.write("summary.csv", table_csv(&result.models, &result.aggregates)?.as_bytes())?;
    out.write_json("pvalues.json", &result.pvalues)?;
    for rec in &result.runs {
        out.write_json(&report::run_file(rec.run), rec)?;
    }
    for art in result.artifacts.iter().filter(|a| a.dnn.is_some() || a.lr.is_some()) {
        out.write_json(&report::model_file(art.run), art)?;
    }
    clock.lap("write");
    out.finish("run", cfg, all_seeds(cfg), clock.finish())?;
    Ok(result)
}

/// Score tables for one scoring method.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImportanceSummary {
    pub method: String,
    pub table: ScoreTable,
    /// Top factors of the averaged scores.
    pub top: Vec<String>,
    /// Top factor indices of every repeat.
    pub top_per_run: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub fraction: f64,
    pub source: String,
    pub dnn: Option<ImportanceSummary>,
    pub lr: Option<ImportanceSummary>,
}

fn summarise(method: &str, rankings: &[ContributionRanking]) -> Result<ImportanceSummary> {
    let table = average_scores(rankings)?;
    let overall = table.ranking(vec![0.0; table.mean.len()])?;
    let top = select_top_fraction(&overall, TOP_FRACTION)?
        .into_iter()
        .map(|i| table.factor_names[i].clone())
        .collect();
    let top_per_run = rankings
        .iter()
        .map(|r| select_top_fraction(r, TOP_FRACTION))
        .collect::<Result<_>>()?;
    Ok(ImportanceSummary {
        method: method.to_string(),
        table,
        top,
        top_per_run,
    })
}

fn scores_csv(table: &ScoreTable) -> Result<String> {
    let ranking = table.ranking(vec![0.0; table.mean.len()])?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["rank", "index", "factor", "mean", "std"])?;
    for (rank, &i) in ranking.order.iter().enumerate() {
        let std = table.std[i].map_or_else(|| "None".to_string(), |s| s.to_string());
        w.write_record([
            (rank + 1).to_string(),
            i.to_string(),
            table.factor_names[i].clone(),
            table.mean[i].to_string(),
            std,
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Fitted models of a previous `run`, or `None` when there is none.
fn load_run_artifacts(cfg: &ExperimentConfig) -> Result<Option<Vec<RunArtifacts>>> {
    let manifest_path = cfg.out.join(manifest_name("run"));
    if !manifest_path.exists() {
        return Ok(None);
    }
    let manifest = Manifest::load(&manifest_path)?;
    if manifest.config.seed != cfg.seed || manifest.config.repeats != cfg.repeats {
        warn!("reusing models from {} (seed {}, {} repeats)", manifest_path.display(), manifest.config.seed, manifest.config.repeats);
    }
    let mut arts = Vec::with_capacity(manifest.config.repeats);
    for r in 0..manifest.config.repeats {
        let path = cfg.out.join(report::model_file(r));
        let text = std::fs::read_to_string(&path).map_err(|_| Error::MissingArtifacts(path.clone()))?;
        let art: RunArtifacts = serde_json::from_str(&text)?;
        if art.dnn.is_none() || art.lr.is_none() {
            return Err(Error::MissingArtifacts(path));
        }
        arts.push(art);
    }
    Ok(Some(arts))
}

fn train_artifacts(cfg: &ExperimentConfig) -> Result<Vec<RunArtifacts>> {
    let (data, _) = cfg.load_data()?;
    let inline = ExperimentConfig {
        models: vec![ModelKind::Lr, ModelKind::Dnn],
        ..cfg.clone()
    };
    Ok(run_protocol(&data, &inline)?.artifacts)
}

/// Network and regression factor scores, averaged over repeats.
///
/// Reuses the models of an earlier `run` in the same output directory,
/// otherwise trains them.
pub fn cmd_importance(cfg: &ExperimentConfig) -> Result<ImportanceReport> {
    cfg.validate()?;
    let mut clock = Clock::new();
    let (arts, source) = match load_run_artifacts(cfg)? {
        Some(a) => (a, "artifacts"),
        None => (train_artifacts(cfg)?, "inline"),
    };
    clock.lap("models");
    let mut dnn = Vec::new();
    let mut lr = Vec::new();
    for a in &arts {
        if let Some(m) = &a.dnn {
            dnn.push(dnn_contributions(m, &a.sigma)?.with_factor_names(&a.factor_names)?);
        }
        if let Some(m) = &a.lr {
            lr.push(lr_contributions(m, &a.sigma, cfg.lr_score)?.with_factor_names(&a.factor_names)?);
        }
    }
    let lr_method = match cfg.lr_score {
        LrScoreMode::Coefficient => "lr_coefficient",
        LrScoreMode::CoefficientTimesSigma => "lr_coefficient_times_sigma",
    };
    let report = ImportanceReport {
        fraction: TOP_FRACTION,
        source: source.to_string(),
        dnn: (!dnn.is_empty()).then(|| summarise("dnn", &dnn)).transpose()?,
        lr: (!lr.is_empty()).then(|| summarise(lr_method, &lr)).transpose()?,
    };
    let mut out = OutputDir::create(&cfg.out)?;
    if let Some(s) = &report.dnn {
        out.write("importance_dnn.csv", scores_csv(&s.table)?.as_bytes())?;
    }
    if let Some(s) = &report.lr {
        out.write("importance_lr.csv", scores_csv(&s.table)?.as_bytes())?;
    }
    out.write_json("importance_top.json", &report)?;
    clock.lap("write");
    out.finish("importance", cfg, all_seeds(cfg), clock.finish())?;
    Ok(report)
}

fn ablation_csv(result: &AblationResult) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "fraction",
        "k",
        "sensitivity_mean",
        "sensitivity_std",
        "fpr_mean",
        "fpr_std",
        "auc_mean",
        "auc_std",
    ])?;
    let fmt = |v: Option<f64>| v.map_or_else(|| "None".to_string(), |x| x.to_string());
    for f in &result.fractions {
        let mut row = vec![f.fraction.to_string(), f.k.to_string()];
        for m in [Metric::Sensitivity, Metric::Fpr, Metric::Auc] {
            let s = f.summary.get(m);
            row.push(fmt(s.mean));
            row.push(fmt(s.std));
        }
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Retrains the network on the top fractions of factors.
pub fn cmd_ablate(cfg: &ExperimentConfig) -> Result<AblationResult> {
    cfg.validate()?;
    let mut clock = Clock::new();
    let (data, _) = cfg.load_data()?;
    clock.lap("load");
    let result = run_ablation(&data, &cfg.fractions, cfg)?;
    clock.lap("ablation");
    let mut out = OutputDir::create(&cfg.out)?;
    out.write("ablation.csv", ablation_csv(&result)?.as_bytes())?;
    out.write_json("ablation.json", &result)?;
    out.finish("ablate", cfg, all_seeds(cfg), clock.finish())?;
    Ok(result)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerSummary {
    pub layer: String,
    pub rows: usize,
    pub probe_accuracy: f64,
    pub explained_variance: [f64; 2],
    pub total_variance: f64,
    pub rank_deficient: bool,
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaSummary {
    pub run: usize,
    pub layers: Vec<LayerSummary>,
}

/// Two-component projections of the test set at every layer of the
/// network of repeat `pca_run`.
pub fn cmd_pca(cfg: &ExperimentConfig) -> Result<PcaSummary> {
    cfg.validate()?;
    let mut clock = Clock::new();
    let (data, _) = cfg.load_data()?;
    let run = cfg.pca_run;
    let prep = prepare_run(&data, cfg, run)?;
    let stored = load_run_artifacts(cfg).ok().flatten().and_then(|a| a.into_iter().nth(run)).and_then(|a| a.dnn);
    let model = match stored {
        Some(m) if m.input_size() == data.dimension() => m,
        _ => {
            let x = prep.train.features();
            mlp::train(x, prep.train.labels(), &cfg.dnn_config(x.cols(), prep.seeds.model))?
        }
    };
    clock.lap("model");
    let layers = project_layers(&model, prep.test.features(), prep.test.labels())?;
    let mut out = OutputDir::create(&cfg.out)?;
    let mut summary = PcaSummary {
        run,
        layers: Vec::new(),
    };
    for l in &layers {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["pc1", "pc2", "label"])?;
        for (c, y) in l.coords.iter().zip(&l.labels) {
            w.write_record([c[0].to_string(), c[1].to_string(), y.to_string()])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
        out.write(&format!("pca_{}.csv", l.layer), &bytes)?;
        if l.degenerate {
            warn!("layer {} has constant activations", l.layer);
        }
        summary.layers.push(LayerSummary {
            layer: l.layer.clone(),
            rows: l.coords.len(),
            probe_accuracy: separability_probe(&l.coords, &l.labels)?,
            explained_variance: l.pca.explained_variance,
            total_variance: l.pca.total_variance,
            rank_deficient: l.pca.rank_deficient,
            degenerate: l.degenerate,
        });
    }
    out.write_json("pca_summary.json", &summary)?;
    clock.lap("projections");
    out.finish("pca", cfg, vec![run_seeds(cfg.seed, run)], clock.finish())?;
    Ok(summary)
}

/// Writes the configured synthetic dataset and its planted truth.
pub fn cmd_synth(cfg: &ExperimentConfig) -> Result<SyntheticTruth> {
    let DataSource::Synthetic(spec) = &cfg.data else {
        return Err(Error::InvalidConfig("synth needs a synthetic data source".into()));
    };
    let mut clock = Clock::new();
    let synthetic = spec.generate(&cfg.load_schema()?)?;
    let mut bytes = Vec::new();
    synthetic.dataset.write_csv(&mut bytes)?;
    let mut out = OutputDir::create(&cfg.out)?;
    out.write("dataset.csv", &bytes)?;
    out.write_json("truth.json", &synthetic.truth)?;
    info!(
        "{} rows, {} positive, {} flagged",
        synthetic.dataset.len(),
        synthetic.dataset.positives(),
        synthetic.dataset.suspected().map_or(0, |s| s.iter().filter(|&&v| v == 1).count())
    );
    clock.lap("generate");
    out.finish("synth", cfg, Vec::new(), clock.finish())?;
    Ok(synthetic.truth)
}
