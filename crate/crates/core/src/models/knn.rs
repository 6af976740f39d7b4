use serde::{Deserialize, Serialize};

use super::Classifier;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnnConfig {
    pub k: usize,
}

impl Default for KnnConfig {
    fn default() -> Self {
        KnnConfig { k: 5 }
    }
}

/// Euclidean k-nearest-neighbour vote. Distance ties go to the lower row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    k: usize,
    train: Matrix,
    labels: Vec<u8>,
}

impl KnnConfig {
    pub fn fit(&self, x: &Matrix, y: &[u8]) -> Result<Knn> {
        if x.rows() != y.len() {
            return Err(Error::LengthMismatch {
                left: x.rows(),
                right: y.len(),
            });
        }
        if self.k == 0 || self.k > x.rows() {
            return Err(Error::InvalidK {
                k: self.k,
                n: x.rows(),
            });
        }
        Ok(Knn {
            k: self.k,
            train: x.clone(),
            labels: y.to_vec(),
        })
    }
}

impl Knn {
    /// Indices of the k nearest training rows, nearest first.
    pub fn neighbours(&self, x: &[f64]) -> Vec<usize> {
        let mut d: Vec<(f64, usize)> = self
            .train
            .iter_rows()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < d.len() {
            d.select_nth_unstable_by(self.k - 1, cmp);
            d.truncate(self.k);
        }
        d.sort_by(cmp);
        d.into_iter().map(|(_, i)| i).collect()
    }
}

impl Classifier for Knn {
    /// Fraction of positive labels among the k nearest neighbours.
    fn predict_proba(&self, x: &[f64]) -> f64 {
        let pos = self
            .neighbours(x)
            .into_iter()
            .filter(|&i| self.labels[i] == 1)
            .count();
        pos as f64 / self.k as f64
    }
}
