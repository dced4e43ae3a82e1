//! Small fully connected ReLU regressor trained with Adam on mean squared
//! error. Inputs and targets are standardized internally.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{argument, DeupError, Result};
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Datasets no larger than this train full-batch.
    pub batch_size: usize,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: vec![128, 128, 128],
            epochs: 400,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 256,
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden.iter().any(|&h| h == 0) {
            return Err(argument("hidden layer sizes must be positive"));
        }
        if self.batch_size == 0 || !(self.learning_rate > 0.0) {
            return Err(argument("batch size and learning rate must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Relu,
}

/// Dense ReLU network with all parameters in one flat vector.
///
/// Layer `l` stores an `out × in` row-major weight block followed by `out`
/// biases. The output layer is linear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    layer_sizes: Vec<usize>,
    params: Vec<f64>,
}

impl Network {
    /// Uniform `±1/√fan_in` initialization for weights and biases.
    pub fn init(layer_sizes: Vec<usize>, rng: &mut impl Rng) -> Self {
        let mut params = Vec::new();
        for w in layer_sizes.windows(2) {
            let bound = 1.0 / (w[0] as f64).sqrt();
            for _ in 0..w[0] * w[1] + w[1] {
                params.push(rng.gen_range(-bound..bound));
            }
        }
        Self { layer_sizes, params }
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn layers(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let mut offset = 0;
        self.layer_sizes.windows(2).map(move |w| {
            let start = offset;
            offset += w[0] * w[1] + w[1];
            (start, w[0], w[1])
        })
    }

    pub fn forward(&self, x: &[f64]) -> f64 {
        let mut a = x.to_vec();
        let n_layers = self.layer_sizes.len() - 1;
        for (l, (off, nin, nout)) in self.layers().enumerate() {
            let w = &self.params[off..off + nin * nout];
            let b = &self.params[off + nin * nout..off + nin * nout + nout];
            let mut z: Vec<f64> = (0..nout)
                .map(|o| b[o] + w[o * nin..(o + 1) * nin].iter().zip(&a).map(|(p, q)| p * q).sum::<f64>())
                .collect();
            if l + 1 < n_layers {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            a = z;
        }
        a[0]
    }

    /// Mean squared error over `(xs, ys)` and its gradient w.r.t. every parameter.
    pub fn loss_and_gradient(&self, xs: &[Vec<f64>], ys: &[f64]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        let layers: Vec<_> = self.layers().collect();
        let n_layers = layers.len();
        let scale = 1.0 / xs.len() as f64;
        for (x, &y) in xs.iter().zip(ys) {
            // activations[l] is the input to layer l; pre[l] its pre-activation.
            let mut activations = vec![x.clone()];
            let mut pre = Vec::with_capacity(n_layers);
            for (l, &(off, nin, nout)) in layers.iter().enumerate() {
                let a = &activations[l];
                let w = &self.params[off..off + nin * nout];
                let b = &self.params[off + nin * nout..off + nin * nout + nout];
                let z: Vec<f64> = (0..nout)
                    .map(|o| b[o] + w[o * nin..(o + 1) * nin].iter().zip(a).map(|(p, q)| p * q).sum::<f64>())
                    .collect();
                let next = if l + 1 < n_layers { z.iter().map(|v| v.max(0.0)).collect() } else { z.clone() };
                pre.push(z);
                activations.push(next);
            }
            let out = activations[n_layers][0];
            let diff = out - y;
            loss += diff * diff * scale;
            let mut delta = vec![2.0 * diff * scale];
            for l in (0..n_layers).rev() {
                let (off, nin, nout) = layers[l];
                let a = &activations[l];
                for o in 0..nout {
                    let d = delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    let row = &mut grad[off + o * nin..off + (o + 1) * nin];
                    row.iter_mut().zip(a).for_each(|(g, ai)| *g += d * ai);
                    grad[off + nin * nout + o] += d;
                }
                if l > 0 {
                    let w = &self.params[off..off + nin * nout];
                    let mut prev = vec![0.0; nin];
                    for o in 0..nout {
                        let d = delta[o];
                        if d != 0.0 {
                            prev.iter_mut().zip(&w[o * nin..(o + 1) * nin]).for_each(|(p, wi)| *p += d * wi);
                        }
                    }
                    for (p, z) in prev.iter_mut().zip(&pre[l - 1]) {
                        if *z <= 0.0 {
                            *p = 0.0;
                        }
                    }
                    delta = prev;
                }
            }
        }
        (loss, grad)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpPredictor {
    network: Network,
    activation: Activation,
    x_mean: Vec<f64>,
    x_scale: Vec<f64>,
    y_mean: f64,
    y_scale: f64,
    /// Training MSE in target units after the last epoch.
    final_training_mse: f64,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], cfg: &MlpConfig) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * grad[i];
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
}

fn column_stats(xs: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let d = xs[0].len();
    let n = xs.len() as f64;
    let mut mean = vec![0.0; d];
    let mut scale = vec![1.0; d];
    for j in 0..d {
        mean[j] = xs.iter().map(|x| x[j]).sum::<f64>() / n;
        let sd = (xs.iter().map(|x| (x[j] - mean[j]).powi(2)).sum::<f64>() / n).sqrt();
        if sd > 1e-12 {
            scale[j] = sd;
        }
    }
    (mean, scale)
}

impl MlpPredictor {
    pub fn fit(xs: &[Vec<f64>], ys: &[f64], cfg: &MlpConfig, rng: &mut RngStream) -> Result<Self> {
        cfg.validate()?;
        if xs.is_empty() || xs.len() != ys.len() {
            return Err(argument(format!("mlp fit needs matching nonempty data ({} / {})", xs.len(), ys.len())));
        }
        let d = xs[0].len();
        if d == 0 || xs.iter().any(|x| x.len() != d) {
            return Err(argument("mlp inputs must share one nonzero dimension"));
        }
        let (x_mean, x_scale) = column_stats(xs);
        let n = ys.len() as f64;
        let y_mean = ys.iter().sum::<f64>() / n;
        let y_sd = (ys.iter().map(|y| (y - y_mean).powi(2)).sum::<f64>() / n).sqrt();
        let y_scale = if y_sd > 1e-12 { y_sd } else { 1.0 };
        let xs_std: Vec<Vec<f64>> = xs
            .iter()
            .map(|x| x.iter().zip(&x_mean).zip(&x_scale).map(|((v, m), s)| (v - m) / s).collect())
            .collect();
        let ys_std: Vec<f64> = ys.iter().map(|y| (y - y_mean) / y_scale).collect();

        let mut sizes = vec![d];
        sizes.extend(&cfg.hidden);
        sizes.push(1);
        let mut network = Network::init(sizes, rng);
        let mut adam = Adam::new(network.params.len());
        let mut order: Vec<usize> = (0..xs.len()).collect();
        let full_batch = xs.len() <= cfg.batch_size;
        for epoch in 0..cfg.epochs {
            if full_batch {
                let (loss, grad) = network.loss_and_gradient(&xs_std, &ys_std);
                if !loss.is_finite() {
                    return Err(DeupError::TrainingDiverged { epoch, loss });
                }
                adam.step(&mut network.params, &grad, cfg);
            } else {
                order.shuffle(rng);
                for chunk in order.chunks(cfg.batch_size) {
                    let bx: Vec<Vec<f64>> = chunk.iter().map(|&i| xs_std[i].clone()).collect();
                    let by: Vec<f64> = chunk.iter().map(|&i| ys_std[i]).collect();
                    let (loss, grad) = network.loss_and_gradient(&bx, &by);
                    if !loss.is_finite() {
                        return Err(DeupError::TrainingDiverged { epoch, loss });
                    }
                    adam.step(&mut network.params, &grad, cfg);
                }
            }
        }
        let mut model = Self {
            network,
            activation: Activation::Relu,
            x_mean,
            x_scale,
            y_mean,
            y_scale,
            final_training_mse: 0.0,
        };
        let mse = xs.iter().zip(ys).map(|(x, y)| (model.predict(x) - y).powi(2)).sum::<f64>() / n;
        if !mse.is_finite() {
            return Err(DeupError::TrainingDiverged { epoch: cfg.epochs, loss: mse });
        }
        model.final_training_mse = mse;
        Ok(model)
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let z: Vec<f64> = x
            .iter()
            .zip(&self.x_mean)
            .zip(&self.x_scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect();
        self.network.forward(&z) * self.y_scale + self.y_mean
    }

    pub fn dimension(&self) -> usize {
        self.network.layer_sizes[0]
    }

    pub fn layer_sizes(&self) -> &[usize] {
        self.network.layer_sizes()
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn final_training_mse(&self) -> f64 {
        self.final_training_mse
    }
}

pub fn mlp_fit(d: &Dataset, cfg: &MlpConfig, rng: &mut RngStream) -> Result<MlpPredictor> {
    MlpPredictor::fit(&d.inputs(), &d.targets(), cfg, rng)
}
