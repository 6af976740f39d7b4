use serde::{Deserialize, Serialize};

use super::tree::{DecisionTree, SortedColumns, TreeConfig};
use super::Classifier;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoostConfig {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
}

impl Default for BoostConfig {
    fn default() -> Self {
        BoostConfig {
            n_estimators: 200,
            max_depth: 10,
            min_samples_split: 10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostRound {
    pub error: f64,
    pub alpha: f64,
}

/// Two-class SAMME ensemble of weighted decision trees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaBoost {
    learners: Vec<DecisionTree>,
    rounds: Vec<BoostRound>,
    /// Sum of sample weights after every accepted round (1 up to rounding).
    weight_sums: Vec<f64>,
}

impl BoostConfig {
    /// SAMME with K = 2: α = ln((1 − ε) / ε), misclassified samples are
    /// multiplied by e^α and the weights renormalised. Boosting stops when a
    /// learner reaches ε ≥ 0.5 (discarded) or ε = 0 (kept with α = 1).
    pub fn fit(&self, x: &Matrix, y: &[u8]) -> Result<AdaBoost> {
        if x.rows() != y.len() {
            return Err(Error::LengthMismatch {
                left: x.rows(),
                right: y.len(),
            });
        }
        for class in [0u8, 1] {
            if !y.contains(&class) {
                return Err(Error::MissingClass(class));
            }
        }
        if self.n_estimators == 0 || self.max_depth == 0 || self.min_samples_split < 2 {
            return Err(Error::InvalidConfig(
                "adaboost: n_estimators and max_depth must be positive, min_samples_split ≥ 2".into(),
            ));
        }
        let tree_cfg = TreeConfig {
            max_depth: Some(self.max_depth),
            min_samples_split: self.min_samples_split,
        };
        let n = y.len();
        let sorted = SortedColumns::new(x);
        let mut w = vec![1.0 / n as f64; n];
        let mut model = AdaBoost {
            learners: Vec::new(),
            rounds: Vec::new(),
            weight_sums: Vec::new(),
        };
        for _ in 0..self.n_estimators {
            let tree = tree_cfg.fit_presorted(x, y, &w, &sorted)?;
            let miss: Vec<bool> = (0..n).map(|i| tree.predict(x.row(i)) != y[i]).collect();
            let total: f64 = w.iter().sum();
            let err = miss.iter().zip(&w).filter(|(m, _)| **m).map(|(_, wi)| wi).sum::<f64>() / total;
            if err >= 0.5 {
                break;
            }
            if err <= 0.0 {
                model.learners.push(tree);
                model.rounds.push(BoostRound { error: 0.0, alpha: 1.0 });
                model.weight_sums.push(w.iter().sum());
                break;
            }
            let alpha = ((1.0 - err) / err).ln();
            let factor = alpha.exp();
            for (wi, &m) in w.iter_mut().zip(&miss) {
                if m {
                    *wi *= factor;
                }
            }
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|wi| *wi /= s);
            model.learners.push(tree);
            model.rounds.push(BoostRound { error: err, alpha });
            model.weight_sums.push(w.iter().sum());
        }
        Ok(model)
    }
}

impl AdaBoost {
    pub fn len(&self) -> usize {
        self.learners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.learners.is_empty()
    }

    pub fn rounds(&self) -> &[BoostRound] {
        &self.rounds
    }

    pub fn weight_sums(&self) -> &[f64] {
        &self.weight_sums
    }
}

impl Classifier for AdaBoost {
    /// α-weighted share of learners voting positive. An empty ensemble
    /// scores 0.5.
    fn predict_proba(&self, x: &[f64]) -> f64 {
        let total: f64 = self.rounds.iter().map(|r| r.alpha).sum();
        if total <= 0.0 {
            return 0.5;
        }
        let pos: f64 = self
            .learners
            .iter()
            .zip(&self.rounds)
            .filter(|(t, _)| t.predict(x) == 1)
            .map(|(_, r)| r.alpha)
            .sum();
        pos / total
    }
}
