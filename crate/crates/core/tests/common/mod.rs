#![allow(dead_code)]

use deup::density::KdePredictor;
use deup::models::mlp::Network;
use deup::models::GpPredictor;
use nalgebra::{DMatrix, DVector};

/// Posterior mean and variance from an explicit inverse of the kernel matrix,
/// in target units, using the fitted hyperparameters of `gp`.
pub fn dense_posterior(gp: &GpPredictor, xs: &[Vec<f64>], ys: &[f64], q: &[f64]) -> (f64, f64) {
    let n = xs.len();
    let s2 = gp.target_scale().powi(2);
    let sv = gp.signal_variance();
    let k = |a: &[f64], b: &[f64]| {
        let r2: f64 = a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum();
        sv * gp.kernel().correlation(r2, gp.lengthscale())
    };
    let diag = gp.noise_variance() + gp.jitter() * s2;
    let kmat = DMatrix::from_fn(n, n, |i, j| k(&xs[i], &xs[j]) + if i == j { diag } else { 0.0 });
    let inv = kmat.try_inverse().expect("invertible kernel matrix");
    let kq = DVector::from_fn(n, |i, _| k(&xs[i], q));
    let centered = DVector::from_fn(n, |i, _| ys[i] - gp.target_mean());
    let mean = gp.target_mean() + (kq.transpose() * &inv * centered)[(0, 0)];
    let var = sv + gp.noise_variance() - (kq.transpose() * &inv * &kq)[(0, 0)];
    (mean, var)
}

/// Central finite difference of the training loss in parameter `i`.
pub fn loss_derivative_fd(net: &Network, xs: &[Vec<f64>], ys: &[f64], i: usize, h: f64) -> f64 {
    let mut plus = net.clone();
    plus.params_mut()[i] += h;
    let mut minus = net.clone();
    minus.params_mut()[i] -= h;
    (plus.loss_and_gradient(xs, ys).0 - minus.loss_and_gradient(xs, ys).0) / (2.0 * h)
}

/// Trapezoid rule over the data range padded by ten bandwidths.
pub fn kde_mass_1d(kde: &KdePredictor, n: usize) -> f64 {
    let h = kde.bandwidth();
    let lo = kde.points().iter().map(|p| p[0]).fold(f64::INFINITY, f64::min) - 10.0 * h;
    let hi = kde.points().iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max) + 10.0 * h;
    let step = (hi - lo) / n as f64;
    (0..=n)
        .map(|i| {
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            w * kde.log_density(&[lo + i as f64 * step]).unwrap().exp() * step
        })
        .sum()
}
