//! Feed-forward network with ReLU hidden layers and a sigmoid output,
//! trained with Adam on binary cross-entropy plus an L2 penalty on the
//! hidden-layer kernels, with patience-based early stopping.
//!
//! Weight matrix `l` is stored `fan_in × fan_out`, so row `i` of the first
//! matrix holds the connections of input factor `i` to every unit of the
//! first hidden layer.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{seeded_rng, LabeledDataset};
use crate::error::{Error, Result};
use crate::linalg::{dot, sigmoid, Matrix};

const PROB_CLAMP: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpConfig {
    pub layer_sizes: Vec<usize>,
    /// L2 coefficient applied to every weight matrix except the output one.
    pub l2_hidden: f64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub validation_fraction: f64,
    pub patience: usize,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            layer_sizes: vec![84, 8, 8, 1],
            l2_hidden: 0.02,
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 32,
            validation_fraction: 0.2,
            patience: 10,
            max_epochs: 500,
            seed: 0,
        }
    }
}

impl MlpConfig {
    /// Same architecture with a different input width.
    pub fn with_input(mut self, n: usize) -> Self {
        if let Some(first) = self.layer_sizes.first_mut() {
            *first = n;
        }
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("mlp: {m}")));
        if self.layer_sizes.len() < 3 {
            return bad("need input, at least one hidden layer and an output");
        }
        if self.layer_sizes.last() != Some(&1) {
            return bad("output layer must have exactly one unit");
        }
        if self.layer_sizes.contains(&0) {
            return bad("layer sizes must be positive");
        }
        let positive = [self.learning_rate, self.epsilon];
        if positive.iter().any(|v| v.is_nan() || *v <= 0.0) || self.l2_hidden.is_nan() || self.l2_hidden < 0.0 {
            return bad("learning_rate and epsilon must be positive, l2_hidden non-negative");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("betas must lie in [0, 1)");
        }
        if self.batch_size == 0 || self.patience == 0 || self.max_epochs == 0 {
            return bad("batch_size, patience and max_epochs must be positive");
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return bad("validation_fraction must lie in (0, 1)");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    weights: Vec<Matrix>,
    biases: Vec<Vec<f64>>,
    config: MlpConfig,
    /// Entry 0 holds the losses before the first update.
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
}

/// Parameter-shaped gradient (or Adam moment) buffers.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    fn zeros_like(model: &MlpModel) -> Self {
        Gradients {
            weights: model
                .weights
                .iter()
                .map(|w| Matrix::zeros(w.rows(), w.cols()))
                .collect(),
            biases: model.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    /// Weight and bias tensors interleaved per layer: w0, b0, w1, b1, ...
    pub fn tensors(&self) -> Vec<&[f64]> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| [w.as_slice(), b.as_slice()])
            .collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| [w.as_mut_slice(), b.as_mut_slice()])
            .collect()
    }
}

impl MlpModel {
    /// Glorot-uniform weights, zero biases.
    pub fn init(config: &MlpConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = seeded_rng(config.seed);
        Ok(Self::init_with(config, &mut rng))
    }

    fn init_with<R: Rng>(config: &MlpConfig, rng: &mut R) -> Self {
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for pair in config.layer_sizes.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let data = (0..fan_in * fan_out)
                .map(|_| rng.random_range(-limit..limit))
                .collect();
            weights.push(Matrix::from_vec(fan_in, fan_out, data).expect("shape"));
            biases.push(vec![0.0; fan_out]);
        }
        MlpModel {
            weights,
            biases,
            config: config.clone(),
            history: Vec::new(),
            best_epoch: 0,
        }
    }

    pub fn config(&self) -> &MlpConfig {
        &self.config
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.config.layer_sizes
    }

    pub fn input_size(&self) -> usize {
        self.config.layer_sizes[0]
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [Matrix] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.biases
    }

    /// Input → first-hidden-layer matrix, `N × H`.
    pub fn first_layer_weights(&self) -> &Matrix {
        &self.weights[0]
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(Matrix::is_finite)
            && self.biases.iter().flatten().all(|b| b.is_finite())
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| [w.as_mut_slice(), b.as_mut_slice()])
            .collect()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_size() {
            return Err(Error::DimensionMismatch {
                expected: self.input_size(),
                actual: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        Ok(())
    }

    /// Pre-activations of every layer, plus the activations feeding each
    /// layer (`acts[0]` is the input itself).
    fn forward_pass(&self, x: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let last = self.weights.len() - 1;
        let mut acts = Vec::with_capacity(self.weights.len() + 1);
        let mut pre = Vec::with_capacity(self.weights.len());
        acts.push(x.to_vec());
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let input = &acts[l];
            let mut z = b.clone();
            for (i, &a) in input.iter().enumerate() {
                if a != 0.0 {
                    for (zj, wij) in z.iter_mut().zip(w.row(i)) {
                        *zj += a * wij;
                    }
                }
            }
            let a: Vec<f64> = if l == last {
                z.iter().map(|&v| sigmoid(v)).collect()
            } else {
                z.iter().map(|&v| v.max(0.0)).collect()
            };
            pre.push(z);
            acts.push(a);
        }
        (acts, pre)
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        let (acts, _) = self.forward_pass(x);
        Ok(acts.last().expect("output layer")[0])
    }

    /// Activations ordered input, hidden 1, ..., output.
    pub fn activations(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_input(x)?;
        Ok(self.forward_pass(x).0)
    }

    fn l2_penalty(&self) -> f64 {
        let hidden = self.weights.len() - 1;
        self.config.l2_hidden
            * self.weights[..hidden]
                .iter()
                .flat_map(|w| w.as_slice())
                .map(|v| v * v)
                .sum::<f64>()
    }

    fn loss_rows(&self, x: &Matrix, y: &[u8], rows: &[usize]) -> f64 {
        let bce: f64 = rows
            .iter()
            .map(|&r| {
                let (acts, _) = self.forward_pass(x.row(r));
                let p = acts.last().expect("output")[0].clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
                if y[r] == 1 {
                    -p.ln()
                } else {
                    -(1.0 - p).ln()
                }
            })
            .sum();
        bce / rows.len() as f64 + self.l2_penalty()
    }

    fn gradient_rows(&self, x: &Matrix, y: &[u8], rows: &[usize]) -> Gradients {
        let mut g = Gradients::zeros_like(self);
        let scale = 1.0 / rows.len() as f64;
        let last = self.weights.len() - 1;
        for &r in rows {
            let (acts, pre) = self.forward_pass(x.row(r));
            let p = acts[last + 1][0];
            // derivative of the clamped loss is zero where the clamp is active
            let clamped = !(PROB_CLAMP..=1.0 - PROB_CLAMP).contains(&p);
            let mut delta = vec![if clamped { 0.0 } else { (p - f64::from(y[r])) * scale }];
            for l in (0..=last).rev() {
                let input = &acts[l];
                let gw = &mut g.weights[l];
                for (i, &a) in input.iter().enumerate() {
                    if a != 0.0 {
                        for (gij, d) in gw.row_mut(i).iter_mut().zip(&delta) {
                            *gij += a * d;
                        }
                    }
                }
                for (gb, d) in g.biases[l].iter_mut().zip(&delta) {
                    *gb += d;
                }
                if l > 0 {
                    let w = &self.weights[l];
                    delta = (0..w.rows())
                        .map(|i| {
                            if pre[l - 1][i] > 0.0 {
                                dot(w.row(i), &delta)
                            } else {
                                0.0
                            }
                        })
                        .collect();
                }
            }
        }
        let lambda2 = 2.0 * self.config.l2_hidden;
        for (gw, w) in g.weights[..last].iter_mut().zip(&self.weights) {
            for (gv, wv) in gw.as_mut_slice().iter_mut().zip(w.as_slice()) {
                *gv += lambda2 * wv;
            }
        }
        g
    }

    /// Mean binary cross-entropy plus the hidden-layer L2 penalty.
    pub fn loss(&self, x: &Matrix, y: &[u8]) -> Result<f64> {
        self.check_batch(x, y)?;
        let rows: Vec<usize> = (0..x.rows()).collect();
        Ok(self.loss_rows(x, y, &rows))
    }

    /// Exact gradient of [`MlpModel::loss`]. ReLU uses subgradient 0 at 0.
    pub fn gradient(&self, x: &Matrix, y: &[u8]) -> Result<Gradients> {
        self.check_batch(x, y)?;
        let rows: Vec<usize> = (0..x.rows()).collect();
        Ok(self.gradient_rows(x, y, &rows))
    }

    fn check_batch(&self, x: &Matrix, y: &[u8]) -> Result<()> {
        if x.rows() == 0 {
            return Err(Error::EmptyBatch);
        }
        if x.rows() != y.len() {
            return Err(Error::LengthMismatch {
                left: x.rows(),
                right: y.len(),
            });
        }
        if x.cols() != self.input_size() {
            return Err(Error::DimensionMismatch {
                expected: self.input_size(),
                actual: x.cols(),
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: MlpModel = serde_json::from_str(text)?;
        model.config.validate()?;
        let consistent = model.weights.len() + 1 == model.config.layer_sizes.len()
            && model.weights.iter().zip(model.config.layer_sizes.windows(2)).all(|(w, s)| {
                w.rows() == s[0] && w.cols() == s[1]
            })
            && model.biases.iter().zip(&model.config.layer_sizes[1..]).all(|(b, &s)| b.len() == s);
        if !consistent {
            return Err(Error::Data("model weights disagree with layer_sizes".into()));
        }
        Ok(model)
    }
}

/// Adam with bias-corrected moments (no AMSGrad).
#[derive(Clone, Debug)]
pub struct Adam {
    learning_rate: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    t: i32,
    m: Gradients,
    v: Gradients,
}

impl Adam {
    pub fn new(model: &MlpModel) -> Self {
        let c = &model.config;
        Adam {
            learning_rate: c.learning_rate,
            beta1: c.beta1,
            beta2: c.beta2,
            epsilon: c.epsilon,
            t: 0,
            m: Gradients::zeros_like(model),
            v: Gradients::zeros_like(model),
        }
    }

    pub fn step(&mut self, model: &mut MlpModel, grads: &Gradients) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t);
        let bc2 = 1.0 - self.beta2.powi(self.t);
        let (b1, b2) = (self.beta1, self.beta2);
        let params = model.tensors_mut();
        let ms = self.m.tensors_mut();
        let vs = self.v.tensors_mut();
        let gs = grads.tensors();
        for (((p, m), v), g) in params.into_iter().zip(ms).zip(vs).zip(gs) {
            for (((pk, mk), vk), gk) in p.iter_mut().zip(m.iter_mut()).zip(v.iter_mut()).zip(g) {
                *mk = b1 * *mk + (1.0 - b1) * gk;
                *vk = b2 * *vk + (1.0 - b2) * gk * gk;
                let m_hat = *mk / bc1;
                let v_hat = *vk / bc2;
                *pk -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
    }
}

/// Stops once the monitored loss has failed to improve for `patience`
/// consecutive epochs.
#[derive(Clone, Debug)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: Option<usize>,
    wait: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping {
            patience,
            best: f64::INFINITY,
            best_epoch: None,
            wait: 0,
        }
    }

    /// Records the loss of `epoch`; returns true if training should stop.
    pub fn update(&mut self, epoch: usize, loss: f64) -> bool {
        if loss < self.best {
            self.best = loss;
            self.best_epoch = Some(epoch);
            self.wait = 0;
        } else {
            self.wait += 1;
        }
        self.wait >= self.patience
    }

    pub fn best_epoch(&self) -> Option<usize> {
        self.best_epoch
    }

    pub fn improved_at(&self, epoch: usize) -> bool {
        self.best_epoch == Some(epoch)
    }
}

/// Trains a fresh network on `(x, y)`.
///
/// A validation subset of `validation_fraction` rows is held out once, before
/// the first epoch. The returned model carries the weights of the epoch with
/// the lowest validation loss.
pub fn train(x: &Matrix, y: &[u8], config: &MlpConfig) -> Result<MlpModel> {
    config.validate()?;
    if x.rows() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.rows(),
            right: y.len(),
        });
    }
    if x.cols() != config.layer_sizes[0] {
        return Err(Error::DimensionMismatch {
            expected: config.layer_sizes[0],
            actual: x.cols(),
        });
    }
    let pos = y.iter().filter(|&&v| v == 1).count();
    let neg = y.len() - pos;
    if pos.min(neg) < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: pos.min(neg),
        });
    }
    let mut rng = seeded_rng(config.seed);
    let mut model = MlpModel::init_with(config, &mut rng);

    let n = x.rows();
    let n_val = ((config.validation_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let val_rows = order.split_off(n - n_val);
    let mut train_rows = order;

    let mut history = vec![EpochRecord {
        epoch: 0,
        train_loss: model.loss_rows(x, y, &train_rows),
        val_loss: model.loss_rows(x, y, &val_rows),
    }];
    let mut adam = Adam::new(&model);
    let mut stopper = EarlyStopping::new(config.patience);
    let mut best = (model.weights.clone(), model.biases.clone());

    for epoch in 1..=config.max_epochs {
        train_rows.shuffle(&mut rng);
        for batch in train_rows.chunks(config.batch_size) {
            let g = model.gradient_rows(x, y, batch);
            adam.step(&mut model, &g);
        }
        let record = EpochRecord {
            epoch,
            train_loss: model.loss_rows(x, y, &train_rows),
            val_loss: model.loss_rows(x, y, &val_rows),
        };
        history.push(record);
        let monitored = if record.val_loss.is_finite() {
            record.val_loss
        } else {
            f64::INFINITY
        };
        let stop = stopper.update(epoch, monitored);
        if stopper.improved_at(epoch) {
            best = (model.weights.clone(), model.biases.clone());
        }
        if stop {
            break;
        }
    }
    model.weights = best.0;
    model.biases = best.1;
    model.best_epoch = stopper.best_epoch().unwrap_or(0);
    model.history = history;
    Ok(model)
}

pub fn train_dataset(data: &LabeledDataset, config: &MlpConfig) -> Result<MlpModel> {
    train(data.features(), data.labels(), config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(sizes: &[usize]) -> MlpConfig {
        MlpConfig {
            layer_sizes: sizes.to_vec(),
            seed: 3,
            ..Default::default()
        }
    }

    #[test]
    fn init_shapes_and_determinism() {
        let cfg = MlpConfig::default();
        let a = MlpModel::init(&cfg).unwrap();
        let b = MlpModel::init(&cfg).unwrap();
        assert_eq!(a, b);
        let shapes: Vec<_> = a.weights().iter().map(|w| (w.rows(), w.cols())).collect();
        assert_eq!(shapes, vec![(84, 8), (8, 8), (8, 1)]);
        assert!(a.biases().iter().flatten().all(|&b| b == 0.0));
        let limit = (6.0f64 / 92.0).sqrt();
        assert!(a.first_layer_weights().as_slice().iter().all(|w| w.abs() <= limit));
        assert_eq!(a.first_layer_weights().cols(), 8);
    }

    #[test]
    fn invalid_configs_rejected() {
        for sizes in [vec![4, 1], vec![4, 3, 2], vec![4, 0, 1]] {
            assert!(MlpModel::init(&small_config(&sizes)).is_err());
        }
        let cfg = MlpConfig { learning_rate: 0.0, ..Default::default() };
        assert!(matches!(MlpModel::init(&cfg), Err(Error::InvalidConfig(_))));
    }

    fn zeroed(sizes: &[usize]) -> MlpModel {
        let mut m = MlpModel::init(&small_config(sizes)).unwrap();
        for w in m.weights_mut() {
            w.as_mut_slice().fill(0.0);
        }
        m
    }

    #[test]
    fn forward_basics() {
        let m = zeroed(&[3, 4, 4, 1]);
        assert_eq!(m.forward(&[0.3, 0.1, 0.9]).unwrap(), 0.5);
        assert!(matches!(m.forward(&[0.0; 2]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(m.forward(&[f64::NAN, 0.0, 0.0]), Err(Error::NonFiniteInput)));

        let mut relu = zeroed(&[1, 1, 1]);
        relu.weights_mut()[0].set(0, 0, -2.0);
        let acts = relu.activations(&[1.0]).unwrap();
        assert_eq!(acts.len(), 3);
        assert_eq!(acts[1], vec![0.0]);

        let trained = MlpModel::init(&small_config(&[3, 4, 4, 1])).unwrap();
        let p = trained.forward(&[1.0, 1.0, 1.0]).unwrap();
        assert!(p > 0.0 && p < 1.0);
        assert_eq!(p.to_bits(), trained.forward(&[1.0, 1.0, 1.0]).unwrap().to_bits());
    }

    #[test]
    fn loss_values() {
        let m = zeroed(&[2, 2, 1]);
        let x = Matrix::from_rows(&[[0.5, 0.5]]).unwrap();
        assert!((m.loss(&x, &[1]).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);

        let mut confident = zeroed(&[2, 2, 1]);
        confident.biases_mut()[1][0] = 100.0;
        let l = confident.loss(&x, &[1]).unwrap();
        assert!((0.0..1e-11).contains(&l));

        let mut single = zeroed(&[1, 1, 1]);
        single.weights_mut()[0].set(0, 0, 3.0);
        let zero_input = Matrix::from_rows(&[[0.0]]).unwrap();
        let l = single.loss(&zero_input, &[1]).unwrap();
        assert!((l - std::f64::consts::LN_2 - 0.18).abs() < 1e-12);

        assert!(matches!(m.loss(&Matrix::zeros(0, 2), &[]), Err(Error::EmptyBatch)));
    }

    #[test]
    fn zero_network_is_stationary_on_balanced_batch() {
        let m = zeroed(&[3, 4, 4, 1]);
        let x = Matrix::from_rows(&[[0.1, 0.5, 0.9], [0.7, 0.2, 0.3]]).unwrap();
        let g = m.gradient(&x, &[1, 0]).unwrap();
        assert!(g.tensors().iter().flat_map(|t| t.iter()).all(|&v| v.abs() < 1e-15));
    }

    #[test]
    fn duplicated_batch_has_same_gradient() {
        let m = MlpModel::init(&small_config(&[3, 4, 4, 1])).unwrap();
        let x = Matrix::from_rows(&[[0.1, 0.5, 0.9], [0.7, 0.2, 0.3]]).unwrap();
        let xx = Matrix::from_rows(&[x.row(0), x.row(1), x.row(0), x.row(1)]).unwrap();
        let g1 = m.gradient(&x, &[1, 0]).unwrap();
        let g2 = m.gradient(&xx, &[1, 0, 1, 0]).unwrap();
        for (a, b) in g1.tensors().iter().zip(g2.tensors()) {
            for (u, v) in a.iter().zip(b) {
                assert!((u - v).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn adam_ignores_zero_gradient() {
        let mut m = MlpModel::init(&small_config(&[3, 4, 4, 1])).unwrap();
        let before = m.clone();
        let mut adam = Adam::new(&m);
        let zero = Gradients::zeros_like(&m);
        for _ in 0..5 {
            adam.step(&mut m, &zero);
        }
        assert_eq!(m, before);
    }

    #[test]
    fn early_stopping_rule() {
        let mut stop = EarlyStopping::new(10);
        let mut stopped_at = None;
        for epoch in 1..=100 {
            if stop.update(epoch, epoch as f64) {
                stopped_at = Some(epoch);
                break;
            }
        }
        assert_eq!(stopped_at, Some(11));
        assert_eq!(stop.best_epoch(), Some(1));
    }

    fn separable(n: usize) -> (Matrix, Vec<u8>) {
        let mut rng = seeded_rng(17);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let label = (i % 2) as u8;
            let shift = if label == 1 { 0.6 } else { 0.0 };
            rows.push([rng.random::<f64>() * 0.4 + shift, rng.random::<f64>()]);
            y.push(label);
        }
        (Matrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn training_reduces_loss_and_is_deterministic() {
        let (x, y) = separable(200);
        let cfg = MlpConfig {
            layer_sizes: vec![2, 8, 8, 1],
            learning_rate: 0.01,
            seed: 5,
            ..Default::default()
        };
        let a = train(&x, &y, &cfg).unwrap();
        let b = train(&x, &y, &cfg).unwrap();
        assert_eq!(a, b);
        let best = a.history[a.best_epoch];
        assert!(best.train_loss < a.history[0].train_loss);
        assert!(a.is_finite());
        let acc = (0..x.rows())
            .filter(|&i| u8::from(a.forward(x.row(i)).unwrap() >= 0.5) == y[i])
            .count();
        assert!(acc as f64 / x.rows() as f64 > 0.95);
    }

    #[test]
    fn training_needs_two_per_class() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [0.5]]).unwrap();
        let cfg = small_config(&[1, 2, 1]);
        assert!(matches!(train(&x, &[1, 0, 0], &cfg), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn json_round_trip() {
        let m = MlpModel::init(&small_config(&[3, 4, 4, 1])).unwrap();
        let back = MlpModel::from_json(&m.to_json().unwrap()).unwrap();
        for (a, b) in m.weights().iter().zip(back.weights()) {
            for (u, v) in a.as_slice().iter().zip(b.as_slice()) {
                assert!((u - v).abs() <= 1e-12 * u.abs().max(1.0));
            }
        }
    }
}
