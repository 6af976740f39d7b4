//! Factor contribution scores, ranking, top-fraction selection and
//! retraining on the selected factors.
//!
//! The network score of factor `i` is `σ_i · Σ_j |w_ij|` over the first-layer
//! weights; the regression score is `|β_i|`, optionally times `σ_i`.

use log::info;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::metrics::{aggregate, evaluate_scores, AggregateReport, MetricSummary, RunMetrics};
use crate::mlp::{self, MlpModel};
use crate::models::LrModel;
use crate::protocol::{prepare_run, ExperimentConfig, FittedModel};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrScoreMode {
    #[default]
    Coefficient,
    CoefficientTimesSigma,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMethod {
    Dnn,
    Lr(LrScoreMode),
    /// Mean of several rankings' scores.
    Averaged,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContributionRanking {
    pub scores: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Factor indices by descending score, ties by lower index.
    pub order: Vec<usize>,
    pub factor_names: Vec<String>,
    pub method: ScoreMethod,
}

fn default_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("x{i}")).collect()
}

fn descending_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

impl ContributionRanking {
    pub fn from_scores(scores: Vec<f64>, sigma: Vec<f64>, method: ScoreMethod) -> Self {
        ContributionRanking {
            order: descending_order(&scores),
            factor_names: default_names(scores.len()),
            scores,
            sigma,
            method,
        }
    }

    pub fn with_factor_names(mut self, names: &[String]) -> Result<Self> {
        if names.len() != self.scores.len() {
            return Err(Error::DimensionMismatch {
                expected: self.scores.len(),
                actual: names.len(),
            });
        }
        self.factor_names = names.to_vec();
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Zero-based rank of every factor.
    pub fn ranks(&self) -> Vec<usize> {
        let mut r = vec![0; self.order.len()];
        for (rank, &i) in self.order.iter().enumerate() {
            r[i] = rank;
        }
        r
    }
}

fn check_sigma(sigma: &[f64], n: usize) -> Result<()> {
    if sigma.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: sigma.len(),
        });
    }
    if sigma.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return Err(Error::NonFiniteValue("sigma".into()));
    }
    Ok(())
}

pub fn dnn_contributions(model: &MlpModel, sigma: &[f64]) -> Result<ContributionRanking> {
    let w = model.first_layer_weights();
    check_sigma(sigma, w.rows())?;
    let scores = w
        .iter_rows()
        .zip(sigma)
        .map(|(row, s)| s * row.iter().map(|v| v.abs()).sum::<f64>())
        .collect();
    Ok(ContributionRanking::from_scores(scores, sigma.to_vec(), ScoreMethod::Dnn))
}

pub fn lr_contributions(model: &LrModel, sigma: &[f64], mode: LrScoreMode) -> Result<ContributionRanking> {
    check_sigma(sigma, model.coefficients.len())?;
    let scores = model
        .coefficients
        .iter()
        .zip(sigma)
        .map(|(c, s)| match mode {
            LrScoreMode::Coefficient => c.abs(),
            LrScoreMode::CoefficientTimesSigma => c.abs() * s,
        })
        .collect();
    Ok(ContributionRanking::from_scores(scores, sigma.to_vec(), ScoreMethod::Lr(mode)))
}

/// `ceil(fraction · n)`, with a small allowance so that e.g. 0.25 · 84
/// is not pushed to 22 by rounding.
pub fn top_k(n: usize, fraction: f64) -> Result<usize> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidFraction(fraction));
    }
    Ok(((fraction * n as f64 - 1e-9).ceil() as usize).clamp(1, n))
}

/// The `ceil(fraction · N)` highest-scoring factor indices, best first.
pub fn select_top_fraction(ranking: &ContributionRanking, fraction: f64) -> Result<Vec<usize>> {
    let k = top_k(ranking.len(), fraction)?;
    Ok(ranking.order[..k].to_vec())
}

/// Per-factor mean and standard deviation of scores across rankings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub factor_names: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<Option<f64>>,
}

impl ScoreTable {
    /// Ranking by mean score; σ is the mean σ across runs.
    pub fn ranking(&self, sigma: Vec<f64>) -> Result<ContributionRanking> {
        ContributionRanking::from_scores(self.mean.clone(), sigma, ScoreMethod::Averaged)
            .with_factor_names(&self.factor_names)
    }
}

pub fn average_scores(rankings: &[ContributionRanking]) -> Result<ScoreTable> {
    let first = rankings.first().ok_or(Error::EmptyBatch)?;
    let n = first.len();
    if let Some(r) = rankings.iter().find(|r| r.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: r.len(),
        });
    }
    let (mean, std) = (0..n)
        .map(|i| {
            let v: Vec<f64> = rankings.iter().map(|r| r.scores[i]).collect();
            let s = MetricSummary::from_values(&v);
            (s.mean.unwrap_or(0.0), s.std)
        })
        .unzip();
    Ok(ScoreTable {
        factor_names: first.factor_names.clone(),
        mean,
        std,
    })
}

/// Which ranking selects the columns of a retrained network.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationRanking {
    /// Each repeat uses the ranking of its own full-factor network.
    #[default]
    PerRepeat,
    /// Every repeat uses the ranking of the scores averaged over repeats.
    Averaged,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractionResult {
    pub fraction: f64,
    pub k: usize,
    /// Selected factor indices per repeat, ascending.
    pub selected: Vec<Vec<usize>>,
    pub runs: Vec<RunMetrics>,
    pub summary: AggregateReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationResult {
    pub ranking: AblationRanking,
    /// Scores of the full-factor network of every repeat.
    pub rankings: Vec<ContributionRanking>,
    pub fractions: Vec<FractionResult>,
}

impl AblationResult {
    pub fn get(&self, fraction: f64) -> Option<&FractionResult> {
        self.fractions.iter().find(|f| f.fraction == fraction)
    }
}

/// Retrains the network on the top-scoring factors for every fraction.
///
/// Each repeat reuses the split, undersampling and seeds of the standard
/// run. The full-factor network of that repeat provides the ranking. The
/// fraction 1.0 is always evaluated.
pub fn run_ablation(data: &LabeledDataset, fractions: &[f64], cfg: &ExperimentConfig) -> Result<AblationResult> {
    cfg.validate()?;
    let mut fractions = fractions.to_vec();
    if let Some(&f) = fractions.iter().find(|&&f| !(f > 0.0 && f <= 1.0)) {
        return Err(Error::InvalidFraction(f));
    }
    if !fractions.contains(&1.0) {
        fractions.push(1.0);
    }
    let mut preps = Vec::with_capacity(cfg.repeats);
    let mut rankings = Vec::with_capacity(cfg.repeats);
    for r in 0..cfg.repeats {
        let prep = prepare_run(data, cfg, r)?;
        let x = prep.train.features();
        let full = mlp::train(x, prep.train.labels(), &cfg.dnn_config(x.cols(), prep.seeds.model))?;
        rankings.push(dnn_contributions(&full, &prep.sigma)?.with_factor_names(data.factor_names())?);
        preps.push(prep);
    }
    let shared = match cfg.ablation_ranking {
        AblationRanking::PerRepeat => None,
        AblationRanking::Averaged => {
            let table = average_scores(&rankings)?;
            let n = rankings.len() as f64;
            let sigma = (0..data.dimension())
                .map(|i| rankings.iter().map(|r| r.sigma[i]).sum::<f64>() / n)
                .collect();
            Some(table.ranking(sigma)?)
        }
    };
    let mut results = Vec::with_capacity(fractions.len());
    for &fraction in &fractions {
        let k = top_k(data.dimension(), fraction)?;
        let mut selected = Vec::with_capacity(cfg.repeats);
        let mut runs = Vec::with_capacity(cfg.repeats);
        for (prep, ranking) in preps.iter().zip(&rankings) {
            let mut cols = select_top_fraction(shared.as_ref().unwrap_or(ranking), fraction)?;
            cols.sort_unstable();
            let sub = prep.project(&cols)?;
            let model = mlp::train(
                sub.train.features(),
                sub.train.labels(),
                &cfg.dnn_config(k, prep.seeds.model),
            )?;
            let scores = FittedModel::Dnn(model)
                .scores(sub.test.features())
                .expect("network has scores");
            runs.push(evaluate_scores(sub.test.labels(), &scores, true)?);
            selected.push(cols);
        }
        info!("ablation fraction {fraction}: k = {k}");
        results.push(FractionResult {
            fraction,
            k,
            selected,
            summary: aggregate(&runs),
            runs,
        });
    }
    Ok(AblationResult {
        ranking: cfg.ablation_ranking,
        rankings,
        fractions: results,
    })
}
