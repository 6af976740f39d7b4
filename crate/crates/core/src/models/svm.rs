//! RBF support vector machine trained with SMO, with (C, γ) chosen by a
//! stratified k-fold grid search on F1.

use log::{debug, warn};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::Classifier;
use crate::dataset::seeded_rng;
use crate::error::{Error, Result};
use crate::linalg::{sigmoid, Matrix};
use crate::metrics::{confusion, derive};

const TAU: f64 = 1e-12;

pub fn rbf_kernel(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

fn kernel_matrix(x: &Matrix, gamma: f64) -> Matrix {
    let n = x.rows();
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        k.set(i, i, 1.0);
        for j in 0..i {
            let v = rbf_kernel(x.row(i), x.row(j), gamma);
            k.set(i, j, v);
            k.set(j, i, v);
        }
    }
    k
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    /// Inclusive range of base-2 exponents searched for C.
    pub c_exponents: (i32, i32),
    /// Inclusive range of base-2 exponents searched for γ.
    pub gamma_exponents: (i32, i32),
    pub cv_folds: usize,
    /// KKT violation tolerance of the SMO stopping rule.
    pub tol: f64,
    /// Cap on SMO pair updates per solve.
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c_exponents: (-3, 3),
            gamma_exponents: (-3, 3),
            cv_folds: 3,
            tol: 1e-3,
            max_iter: 200_000,
            seed: 0,
        }
    }
}

/// Solution of the C-SVC dual `min ½ αᵀQα − eᵀα, 0 ≤ α ≤ C, yᵀα = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    /// Offset: the decision value is `Σ α_t y_t K(x_t, x) − rho`.
    pub rho: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// SMO with maximal-violating-pair working set selection.
/// `y` holds ±1 labels; `kernel` is the full Gram matrix.
pub fn smo_solve(kernel: &Matrix, y: &[f64], c: f64, tol: f64, max_iter: usize) -> DualSolution {
    let n = y.len();
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let q = |i: usize, j: usize| y[i] * y[j] * kernel.get(i, j);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let mut gmax = f64::NEG_INFINITY;
        let mut gmin = f64::INFINITY;
        let (mut i, mut j) = (usize::MAX, usize::MAX);
        for t in 0..n {
            let v = -y[t] * grad[t];
            let up = (y[t] > 0.0 && alpha[t] < c) || (y[t] < 0.0 && alpha[t] > 0.0);
            let low = (y[t] > 0.0 && alpha[t] > 0.0) || (y[t] < 0.0 && alpha[t] < c);
            if up && v > gmax {
                gmax = v;
                i = t;
            }
            if low && v < gmin {
                gmin = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < tol {
            converged = true;
            break;
        }
        iterations += 1;
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let qij = q(i, j);
        let qii = kernel.get(i, i);
        let qjj = kernel.get(j, j);
        if y[i] != y[j] {
            let quad = (qii + qjj + 2.0 * qij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (qii + qjj - 2.0 * qij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(t, i) * di + q(t, j) * dj;
        }
    }

    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free_sum, mut free) = (0.0, 0usize);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 { free_sum / free as f64 } else { 0.5 * (ub + lb) };
    DualSolution {
        alpha,
        rho,
        iterations,
        converged,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    support_vectors: Matrix,
    /// α_t · y_t for every support vector.
    dual_coef: Vec<f64>,
    rho: f64,
    pub c: f64,
    pub gamma: f64,
    pub converged: bool,
    /// Mean CV F1, indexed `[c_index][gamma_index]`; empty when CV was skipped.
    pub cv_f1: Vec<Vec<f64>>,
}

impl SvmModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter_rows()
            .zip(&self.dual_coef)
            .map(|(sv, a)| a * rbf_kernel(sv, x, self.gamma))
            .sum::<f64>()
            - self.rho
    }

    pub fn support_vector_count(&self) -> usize {
        self.dual_coef.len()
    }
}

impl Classifier for SvmModel {
    /// Sigmoid of the margin; rank-preserving, so it only matters for ROC.
    fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.decision(x))
    }
}

fn signed(y: &[u8]) -> Vec<f64> {
    y.iter().map(|&v| if v == 1 { 1.0 } else { -1.0 }).collect()
}

fn sub_kernel(k: &Matrix, rows: &[usize], cols: &[usize]) -> Matrix {
    let mut out = Matrix::zeros(rows.len(), cols.len());
    for (a, &r) in rows.iter().enumerate() {
        let src = k.row(r);
        for (b, &c) in cols.iter().enumerate() {
            out.set(a, b, src[c]);
        }
    }
    out
}

impl SvmConfig {
    fn grid(&self) -> (Vec<f64>, Vec<f64>) {
        let pow = |(lo, hi): (i32, i32)| (lo..=hi).map(|e| 2f64.powi(e)).collect::<Vec<_>>();
        (pow(self.c_exponents), pow(self.gamma_exponents))
    }

    /// Stratified fold index of every row.
    fn folds(&self, y: &[u8], k: usize) -> Vec<usize> {
        let mut rng = seeded_rng(self.seed);
        let mut fold = vec![0; y.len()];
        for class in [0u8, 1] {
            let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
            idx.shuffle(&mut rng);
            for (pos, i) in idx.into_iter().enumerate() {
                fold[i] = pos % k;
            }
        }
        fold
    }

    /// Trains with fixed hyperparameters.
    pub fn fit_fixed(&self, x: &Matrix, y: &[u8], c: f64, gamma: f64) -> Result<SvmModel> {
        check_classes(x, y)?;
        if !(c > 0.0 && gamma > 0.0) {
            return Err(Error::InvalidConfig("svm: c and gamma must be positive".into()));
        }
        let k = kernel_matrix(x, gamma);
        Ok(self.refit(x, y, &k, c, gamma, Vec::new()))
    }

    fn refit(&self, x: &Matrix, y: &[u8], k: &Matrix, c: f64, gamma: f64, cv_f1: Vec<Vec<f64>>) -> SvmModel {
        let sol = smo_solve(k, &signed(y), c, self.tol, self.max_iter);
        if !sol.converged {
            warn!("SMO hit max_iter = {} (c = {c}, gamma = {gamma})", self.max_iter);
        }
        let sv: Vec<usize> = (0..y.len()).filter(|&i| sol.alpha[i] > 0.0).collect();
        let ys = signed(y);
        SvmModel {
            support_vectors: x.select_rows(&sv),
            dual_coef: sv.iter().map(|&i| sol.alpha[i] * ys[i]).collect(),
            rho: sol.rho,
            c,
            gamma,
            converged: sol.converged,
            cv_f1,
        }
    }

    /// Grid search over (C, γ) maximising mean CV F1, then a refit on all
    /// rows. Ties prefer the smaller C, then the smaller γ.
    pub fn fit(&self, x: &Matrix, y: &[u8]) -> Result<SvmModel> {
        check_classes(x, y)?;
        let (cs, gammas) = self.grid();
        if cs.is_empty() || gammas.is_empty() {
            return Err(Error::InvalidConfig("svm: empty search grid".into()));
        }
        let minority = y.iter().filter(|&&v| v == 1).count().min(y.iter().filter(|&&v| v == 0).count());
        let k_folds = self.cv_folds.min(minority);
        if k_folds < 2 {
            debug!("too few rows per class for cross-validation; using the smallest grid cell");
            let k = kernel_matrix(x, gammas[0]);
            return Ok(self.refit(x, y, &k, cs[0], gammas[0], Vec::new()));
        }
        let fold = self.folds(y, k_folds);
        let mut scores = vec![vec![0.0; gammas.len()]; cs.len()];
        for (gi, &gamma) in gammas.iter().enumerate() {
            let k = kernel_matrix(x, gamma);
            for f in 0..k_folds {
                let train: Vec<usize> = (0..y.len()).filter(|&i| fold[i] != f).collect();
                let held: Vec<usize> = (0..y.len()).filter(|&i| fold[i] == f).collect();
                let k_train = sub_kernel(&k, &train, &train);
                let k_held = sub_kernel(&k, &held, &train);
                let y_train: Vec<u8> = train.iter().map(|&i| y[i]).collect();
                let y_held: Vec<u8> = held.iter().map(|&i| y[i]).collect();
                let ys = signed(&y_train);
                for (ci, &c) in cs.iter().enumerate() {
                    let sol = smo_solve(&k_train, &ys, c, self.tol, self.max_iter);
                    let preds: Vec<u8> = (0..held.len())
                        .map(|h| {
                            let f: f64 = k_held
                                .row(h)
                                .iter()
                                .zip(&sol.alpha)
                                .zip(&ys)
                                .map(|((kv, a), yv)| kv * a * yv)
                                .sum::<f64>()
                                - sol.rho;
                            u8::from(f >= 0.0)
                        })
                        .collect();
                    let f1 = derive(&confusion(&y_held, &preds)?).f1.unwrap_or(0.0);
                    scores[ci][gi] += f1 / k_folds as f64;
                }
            }
        }
        let mut best = (0, 0);
        for ci in 0..cs.len() {
            for gi in 0..gammas.len() {
                if scores[ci][gi] > scores[best.0][best.1] {
                    best = (ci, gi);
                }
            }
        }
        let (c, gamma) = (cs[best.0], gammas[best.1]);
        debug!("svm grid search picked c = {c}, gamma = {gamma}");
        let k = kernel_matrix(x, gamma);
        Ok(self.refit(x, y, &k, c, gamma, scores))
    }
}

fn check_classes(x: &Matrix, y: &[u8]) -> Result<()> {
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
    Ok(())
}
