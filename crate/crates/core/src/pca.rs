//! Two-component PCA by power iteration with deflation, layer-wise
//! projections of network activations, and a logistic separability probe.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, Matrix};
use crate::mlp::MlpModel;
use crate::models::{Classifier, LrConfig};

pub const POWER_TOL: f64 = 1e-10;
pub const POWER_MAX_ITER: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// Unit-length principal axes, leading first.
    pub axes: [Vec<f64>; 2],
    pub explained_variance: [f64; 2],
    /// Trace of the sample covariance.
    pub total_variance: f64,
    /// Set when the second eigenvalue is numerically zero.
    pub rank_deficient: bool,
}

fn covariance(x: &Matrix, mean: &[f64]) -> Matrix {
    let d = x.cols();
    let mut c = Matrix::zeros(d, d);
    let mut centred = vec![0.0; d];
    for r in x.iter_rows() {
        for ((c, v), m) in centred.iter_mut().zip(r).zip(mean) {
            *c = v - m;
        }
        for i in 0..d {
            let ci = centred[i];
            if ci != 0.0 {
                for (cij, cj) in c.row_mut(i).iter_mut().zip(&centred) {
                    *cij += ci * cj;
                }
            }
        }
    }
    let scale = 1.0 / (x.rows() - 1) as f64;
    c.as_mut_slice().iter_mut().for_each(|v| *v *= scale);
    c
}

fn mat_vec(m: &Matrix, v: &[f64]) -> Vec<f64> {
    m.iter_rows().map(|r| dot(r, v)).collect()
}

/// Flips the sign so the largest-magnitude entry is positive.
fn canonical_sign(v: &mut [f64]) {
    let lead = v
        .iter()
        .copied()
        .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
    if lead < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Unit vector orthogonal to every vector in `against`.
fn orthogonal_unit(d: usize, against: &[&[f64]]) -> Vec<f64> {
    for k in 0..d {
        let mut v = vec![0.0; d];
        v[k] = 1.0;
        for a in against {
            let p = dot(&v, a);
            v.iter_mut().zip(a.iter()).for_each(|(x, y)| *x -= p * y);
        }
        let n = norm(&v);
        if n > 1e-8 {
            v.iter_mut().for_each(|x| *x /= n);
            return v;
        }
    }
    unreachable!("d ≥ 2 always leaves an orthogonal direction")
}

/// Leading eigenpair of a symmetric PSD matrix. Returns `None` when the
/// matrix annihilates the iterate (zero spectrum).
fn power_iteration(c: &Matrix, scale: f64) -> Option<(Vec<f64>, f64)> {
    let d = c.cols();
    // start off-axis so a coordinate-aligned eigenvector is not missed
    let mut v: Vec<f64> = (0..d).map(|i| 1.0 + (i as f64 + 1.0).sqrt() * 1e-3).collect();
    let n0 = norm(&v);
    v.iter_mut().for_each(|x| *x /= n0);
    for _ in 0..POWER_MAX_ITER {
        let mut w = mat_vec(c, &v);
        let n = norm(&w);
        if n <= 1e-14 * scale {
            return None;
        }
        w.iter_mut().for_each(|x| *x /= n);
        // eigenvalues are ≥ 0 so the iterate never flips sign
        let change = w.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = w;
        if change < POWER_TOL {
            break;
        }
    }
    let lambda = dot(&v, &mat_vec(c, &v));
    Some((v, lambda.max(0.0)))
}

pub fn pca_fit(x: &Matrix) -> Result<PcaModel> {
    if x.rows() < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            got: x.rows(),
        });
    }
    if x.cols() < 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            actual: x.cols(),
        });
    }
    if !x.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    let d = x.cols();
    let mean = x.column_means();
    let mut c = covariance(x, &mean);
    let total_variance: f64 = (0..d).map(|i| c.get(i, i)).sum();
    let scale = total_variance.max(f64::MIN_POSITIVE);

    let (mut a1, l1) = power_iteration(&c, scale).unwrap_or_else(|| (orthogonal_unit(d, &[]), 0.0));
    for i in 0..d {
        for j in 0..d {
            let v = c.get(i, j) - l1 * a1[i] * a1[j];
            c.set(i, j, v);
        }
    }
    let (mut a2, l2) = match power_iteration(&c, scale) {
        Some((mut v, l)) => {
            // re-orthogonalise against the first axis to remove drift
            let p = dot(&v, &a1);
            v.iter_mut().zip(&a1).for_each(|(x, y)| *x -= p * y);
            let n = norm(&v);
            v.iter_mut().for_each(|x| *x /= n);
            (v, l)
        }
        None => (orthogonal_unit(d, &[&a1]), 0.0),
    };
    canonical_sign(&mut a1);
    canonical_sign(&mut a2);
    let rank_deficient = l2 <= 1e-10 * scale;
    Ok(PcaModel {
        mean,
        axes: [a1, a2],
        explained_variance: [l1, if rank_deficient { l2.max(0.0) } else { l2 }],
        total_variance,
        rank_deficient,
    })
}

impl PcaModel {
    /// `(x - mean) · axis` for both axes.
    pub fn project_row(&self, x: &[f64]) -> [f64; 2] {
        let centred: Vec<f64> = x.iter().zip(&self.mean).map(|(v, m)| v - m).collect();
        [dot(&centred, &self.axes[0]), dot(&centred, &self.axes[1])]
    }

    pub fn project(&self, x: &Matrix) -> Vec<[f64; 2]> {
        x.iter_rows().map(|r| self.project_row(r)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerProjection {
    /// `input`, `hidden1`, `hidden2`, ...
    pub layer: String,
    pub coords: Vec<[f64; 2]>,
    pub labels: Vec<u8>,
    pub pca: PcaModel,
    /// All activations of the layer are constant (e.g. every unit dead).
    pub degenerate: bool,
}

/// Fits an independent PCA to the inputs and to every hidden layer's
/// activations.
pub fn project_layers(model: &MlpModel, x: &Matrix, labels: &[u8]) -> Result<Vec<LayerProjection>> {
    if x.rows() != labels.len() {
        return Err(Error::LengthMismatch {
            left: x.rows(),
            right: labels.len(),
        });
    }
    let hidden = model.layer_sizes().len() - 2;
    let mut layers: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(x.rows()); hidden + 1];
    for r in x.iter_rows() {
        let acts = model.activations(r)?;
        for (l, a) in acts.into_iter().take(hidden + 1).enumerate() {
            layers[l].push(a);
        }
    }
    layers
        .into_iter()
        .enumerate()
        .map(|(l, rows)| {
            let m = Matrix::from_rows(&rows)?;
            let pca = pca_fit(&m)?;
            Ok(LayerProjection {
                layer: if l == 0 { "input".to_string() } else { format!("hidden{l}") },
                coords: pca.project(&m),
                labels: labels.to_vec(),
                degenerate: pca.total_variance <= 1e-24,
                pca,
            })
        })
        .collect()
}

/// Training accuracy of a logistic regression on 2-D points.
pub fn separability_probe(coords: &[[f64; 2]], labels: &[u8]) -> Result<f64> {
    let x = Matrix::from_rows(coords)?;
    let model = LrConfig::default().fit(&x, labels)?;
    let correct = coords
        .iter()
        .zip(labels)
        .filter(|(c, &y)| model.predict(&c[..]) == y)
        .count();
    Ok(correct as f64 / labels.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::seeded_rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn points_on_diagonal() {
        let x = Matrix::from_rows(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [5.0, 5.0]]).unwrap();
        let p = pca_fit(&x).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert!((p.axes[0][0] - s).abs() < 1e-10 && (p.axes[0][1] - s).abs() < 1e-10);
        assert!(p.explained_variance[1].abs() < 1e-10);
        assert!(p.rank_deficient);
        assert!(dot(&p.axes[0], &p.axes[1]).abs() < 1e-10);
    }

    #[test]
    fn isotropic_cloud_has_similar_variances() {
        let mut rng = seeded_rng(21);
        let rows: Vec<[f64; 2]> = (0..5000)
            .map(|_| [rng.sample(StandardNormal), rng.sample(StandardNormal)])
            .collect();
        let p = pca_fit(&Matrix::from_rows(&rows).unwrap()).unwrap();
        let [a, b] = p.explained_variance;
        assert!(a >= b);
        assert!((a - b) / a < 0.1, "{a} vs {b}");
    }

    #[test]
    fn projection_is_centred_dot_product() {
        let mut rng = seeded_rng(3);
        let rows: Vec<[f64; 3]> = (0..20).map(|_| [rng.random(), rng.random(), rng.random()]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let p = pca_fit(&x).unwrap();
        let c = p.project_row(x.row(4));
        let centred: Vec<f64> = x.row(4).iter().zip(&p.mean).map(|(a, b)| a - b).collect();
        assert_eq!(c[0], dot(&centred, &p.axes[0]));
        assert!(p.explained_variance[0] + p.explained_variance[1] <= p.total_variance + 1e-12);
    }

    #[test]
    fn zero_data_is_degenerate() {
        let p = pca_fit(&Matrix::zeros(5, 3)).unwrap();
        assert!(p.rank_deficient);
        assert_eq!(p.total_variance, 0.0);
        assert!(dot(&p.axes[0], &p.axes[1]).abs() < 1e-12);
        assert!(pca_fit(&Matrix::zeros(2, 3)).is_err());
        assert!(pca_fit(&Matrix::zeros(5, 1)).is_err());
    }

    #[test]
    fn probe_on_separated_and_identical_points() {
        let coords: Vec<[f64; 2]> = (0..20)
            .map(|i| if i < 10 { [-1.0 - i as f64 * 0.1, 0.0] } else { [1.0 + i as f64 * 0.1, 0.5] })
            .collect();
        let labels: Vec<u8> = (0..20).map(|i| u8::from(i >= 10)).collect();
        assert_eq!(separability_probe(&coords, &labels).unwrap(), 1.0);

        let same = vec![[0.3, 0.3]; 10];
        let y = [1, 1, 1, 0, 0, 0, 0, 0, 0, 0];
        assert!((separability_probe(&same, &y).unwrap() - 0.7).abs() < 1e-12);
        assert!(separability_probe(&same, &[1; 10]).is_err());
    }
}
