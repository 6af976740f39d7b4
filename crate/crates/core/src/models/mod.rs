//! The non-neural classifiers: logistic regression, k-nearest neighbours,
//! Gini decision trees, SAMME AdaBoost and an RBF support vector machine.

mod adaboost;
mod knn;
mod logistic;
mod svm;
mod tree;

pub use adaboost::{AdaBoost, BoostConfig, BoostRound};
pub use knn::{Knn, KnnConfig};
pub use logistic::{LrConfig, LrModel};
pub use svm::{rbf_kernel, smo_solve, DualSolution, SvmConfig, SvmModel};
pub use tree::{gini, DecisionTree, SortedColumns, TreeConfig};

use crate::mlp::MlpModel;

/// A fitted binary classifier.
///
/// `predict_proba` is a score in `[0, 1]`; methods without a probability
/// model return a hard 0/1 or a vote fraction.
pub trait Classifier {
    fn predict_proba(&self, x: &[f64]) -> f64;

    fn predict(&self, x: &[f64]) -> u8 {
        u8::from(self.predict_proba(x) >= 0.5)
    }
}

impl Classifier for MlpModel {
    fn predict_proba(&self, x: &[f64]) -> f64 {
        self.forward(x).expect("input matches network width")
    }
}
