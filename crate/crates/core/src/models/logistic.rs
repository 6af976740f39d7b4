use log::warn;
use serde::{Deserialize, Serialize};

use super::Classifier;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, sigmoid, Matrix};

/// Unregularized logistic regression fitted by Newton's method on the mean
/// log-likelihood.
///
/// Each Newton step is halved until the negative log-likelihood does not
/// increase. A small ridge on the Hessian keeps the step defined when
/// columns are constant or collinear; it does not change the fixed point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LrConfig {
    pub max_iters: usize,
    /// Stop once the gradient norm falls below this.
    pub tol: f64,
}

impl Default for LrConfig {
    fn default() -> Self {
        LrConfig {
            max_iters: 100,
            tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LrModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl LrModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        dot(&self.coefficients, x) + self.intercept
    }
}

impl Classifier for LrModel {
    fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.decision(x))
    }
}

/// Mean negative log-likelihood, computed from logits without clamping.
fn mean_nll(x: &Matrix, y: &[u8], w: &[f64], b: f64) -> f64 {
    let total: f64 = x
        .iter_rows()
        .zip(y)
        .map(|(r, &yi)| {
            let z = dot(w, r) + b;
            // log(1 + e^z) - y z
            let softplus = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
            softplus - f64::from(yi) * z
        })
        .sum();
    total / x.rows() as f64
}

/// Gradient of the mean log-likelihood and its negated Hessian, over the
/// weights followed by the intercept.
fn derivatives(x: &Matrix, y: &[u8], w: &[f64], b: f64) -> (Vec<f64>, Matrix) {
    let d = w.len() + 1;
    let mut g = vec![0.0; d];
    let mut h = Matrix::zeros(d, d);
    let mut xi = vec![1.0; d];
    for (r, &yi) in x.iter_rows().zip(y) {
        xi[..d - 1].copy_from_slice(r);
        let p = sigmoid(dot(w, r) + b);
        let resid = f64::from(yi) - p;
        let weight = p * (1.0 - p);
        for j in 0..d {
            g[j] += resid * xi[j];
            let wj = weight * xi[j];
            if wj != 0.0 {
                for (hjk, xk) in h.row_mut(j)[..=j].iter_mut().zip(&xi) {
                    *hjk += wj * xk;
                }
            }
        }
    }
    let n = x.rows() as f64;
    g.iter_mut().for_each(|v| *v /= n);
    for j in 0..d {
        for k in 0..=j {
            let v = h.get(j, k) / n;
            h.set(j, k, v);
            h.set(k, j, v);
        }
    }
    (g, h)
}

/// Solves `(h + ridge·I) s = g` by Cholesky; `None` if not positive definite.
fn solve_spd(h: &Matrix, g: &[f64], ridge: f64) -> Option<Vec<f64>> {
    let d = g.len();
    let mut l = Matrix::zeros(d, d);
    for j in 0..d {
        let mut diag = h.get(j, j) + ridge - (0..j).map(|k| l.get(j, k) * l.get(j, k)).sum::<f64>();
        if diag.is_nan() || diag <= 0.0 {
            return None;
        }
        diag = diag.sqrt();
        l.set(j, j, diag);
        for i in j + 1..d {
            let v = (h.get(i, j) - (0..j).map(|k| l.get(i, k) * l.get(j, k)).sum::<f64>()) / diag;
            l.set(i, j, v);
        }
    }
    let mut z = vec![0.0; d];
    for i in 0..d {
        z[i] = (g[i] - (0..i).map(|k| l.get(i, k) * z[k]).sum::<f64>()) / l.get(i, i);
    }
    let mut s = vec![0.0; d];
    for i in (0..d).rev() {
        s[i] = (z[i] - (i + 1..d).map(|k| l.get(k, i) * s[k]).sum::<f64>()) / l.get(i, i);
    }
    Some(s)
}

impl LrConfig {
    pub fn fit(&self, x: &Matrix, y: &[u8]) -> Result<LrModel> {
        self.fit_traced(x, y).map(|(m, _)| m)
    }

    /// Fits and also returns the objective (mean NLL) after every iteration,
    /// starting with the value at the zero initialisation.
    pub fn fit_traced(&self, x: &Matrix, y: &[u8]) -> Result<(LrModel, Vec<f64>)> {
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
        let d = x.cols();
        let mut w = vec![0.0; d];
        let mut b = 0.0;
        let mut nll = mean_nll(x, y, &w, b);
        let mut trace = vec![nll];
        let mut converged = false;
        let mut iterations = 0;
        'outer: while iterations < self.max_iters {
            let (g, h) = derivatives(x, y, &w, b);
            if norm(&g) < self.tol {
                converged = true;
                break;
            }
            iterations += 1;
            let scale = (0..=d).map(|j| h.get(j, j)).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
            let mut ridge = 1e-10 * scale;
            let dir = loop {
                if let Some(s) = solve_spd(&h, &g, ridge) {
                    break s;
                }
                ridge *= 100.0;
            };
            let mut step = 1.0;
            loop {
                let w_new: Vec<f64> = w.iter().zip(&dir).map(|(a, s)| a + step * s).collect();
                let b_new = b + step * dir[d];
                let nll_new = mean_nll(x, y, &w_new, b_new);
                if nll_new <= nll {
                    w = w_new;
                    b = b_new;
                    nll = nll_new;
                    trace.push(nll);
                    break;
                }
                step *= 0.5;
                if step < 1e-12 {
                    // no decrease along the Newton direction; at the optimum up to rounding
                    converged = true;
                    break 'outer;
                }
            }
        }
        if !converged {
            warn!("logistic regression stopped after {iterations} iterations without converging");
        }
        Ok((
            LrModel {
                coefficients: w,
                intercept: b,
                iterations,
                converged,
            },
            trace,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::seeded_rng;
    use rand::Rng;

    #[test]
    fn separated_feature_gets_positive_weight() {
        let x = Matrix::from_rows(&[[1.0], [1.0], [0.0], [0.0], [0.9], [0.1]]).unwrap();
        let y = [1, 1, 0, 0, 1, 0];
        let m = LrConfig { max_iters: 200, ..Default::default() }.fit(&x, &y).unwrap();
        assert!(m.coefficients[0] > 0.0);
    }

    #[test]
    fn null_feature_gets_near_zero_weight() {
        // every feature value appears once with each label, so the
        // likelihood is maximised at coefficient 0 exactly
        let mut rng = seeded_rng(2);
        let values: Vec<f64> = (0..500).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
        let rows: Vec<[f64; 1]> = values.iter().chain(&values).map(|&v| [v]).collect();
        let y: Vec<u8> = (0..1000).map(|i| u8::from(i < 500)).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let m = LrConfig::default().fit(&x, &y).unwrap();
        assert!(m.coefficients[0].abs() < 0.1, "{}", m.coefficients[0]);
        assert!(m.converged);
    }

    #[test]
    fn boundary_scores_one_half() {
        let m = LrModel {
            coefficients: vec![2.0, -1.0],
            intercept: -1.0,
            iterations: 0,
            converged: true,
        };
        assert_eq!(m.predict_proba(&[1.0, 1.0]), 0.5);
        assert_eq!(m.predict(&[1.0, 1.0]), 1);
    }

    #[test]
    fn objective_never_increases() {
        let mut rng = seeded_rng(8);
        let rows: Vec<[f64; 3]> = (0..200).map(|_| [rng.random(), rng.random(), rng.random()]).collect();
        let y: Vec<u8> = rows
            .iter()
            .map(|r| u8::from(r[0] + 0.3 * rng.random::<f64>() > 0.6))
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let (_, trace) = LrConfig::default().fit_traced(&x, &y).unwrap();
        assert!(trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn single_class_rejected() {
        let x = Matrix::from_rows(&[[1.0], [2.0]]).unwrap();
        assert!(matches!(LrConfig::default().fit(&x, &[1, 1]), Err(Error::MissingClass(0))));
    }
}
