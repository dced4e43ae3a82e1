//! Analytic oracles with known optima and controllable observation noise.
//!
//! All oracles follow the maximization convention.

use std::f64::consts::PI;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::acquisition::BoxDomain;
use crate::data::InputPoint;
use crate::error::{argument, Result};
use crate::rng::RngStream;

/// Ackley function in maximization form (global maximum 0 at the origin).
pub fn ackley(x: &[f64], a: f64, b: f64, c: f64) -> f64 {
    let d = x.len() as f64;
    let sq = x.iter().map(|v| v * v).sum::<f64>() / d;
    let cs = x.iter().map(|v| (c * v).cos()).sum::<f64>() / d;
    a * (-b * sq.sqrt()).exp() + cs.exp() - a - std::f64::consts::E
}

/// Ackley with the usual constants `A = 20`, `B = 0.2`, `c = 2π`.
pub fn ackley_default(x: &[f64]) -> f64 {
    ackley(x, 20.0, 0.2, 2.0 * PI)
}

/// Negated Levi N.13 function; maximum 0 at `(1, 1)`.
pub fn levi13(x: f64, y: f64) -> f64 {
    let s = |v: f64| v.sin().powi(2);
    -(s(3.0 * PI * x) + (x - 1.0).powi(2) * (1.0 + s(3.0 * PI * y)) + (y - 1.0).powi(2) * (1.0 + s(2.0 * PI * y)))
}

/// Maximizer of the raw 1-D profile below on `[0, 1]`.
pub const SYNTH1D_ARGMAX: f64 = 0.051_816_907_126_747_17;
const SYNTH1D_RAW_PEAK: f64 = 0.510_750_610_379_644;

fn synth1d_raw(x: f64) -> f64 {
    0.4 * (-(x - 0.55).powi(2) / 0.002).exp() + 0.6 * (9.0 * PI * x).sin() * (-3.0 * x).exp()
}

/// Multimodal 1-D test function on `[0, 1]`:
/// `0.4·exp(-(x-0.55)²/0.002) + 0.6·sin(9πx)·exp(-3x)`, divided by its peak
/// value so that the global maximum equals 1 at [`SYNTH1D_ARGMAX`].
/// Local maxima sit near 0.052 (global), 0.274, 0.542, 0.718 and 0.941.
pub fn synth1d(x: f64) -> f64 {
    synth1d_raw(x) / SYNTH1D_RAW_PEAK
}

/// Observation noise standard deviation as a function of the input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NoiseProfile {
    Zero,
    Constant(f64),
    /// `σ(x) = base + amplitude · (1 + sin(frequency · mean(x))) / 2`.
    Hetero { base: f64, amplitude: f64, frequency: f64 },
}

impl NoiseProfile {
    pub fn std(&self, x: &[f64]) -> f64 {
        match *self {
            NoiseProfile::Zero => 0.0,
            NoiseProfile::Constant(s) => s,
            NoiseProfile::Hetero { base, amplitude, frequency } => {
                let m = x.iter().sum::<f64>() / x.len() as f64;
                base + amplitude * 0.5 * (1.0 + (frequency * m).sin())
            }
        }
    }

    pub fn variance(&self, x: &[f64]) -> f64 {
        self.std(x).powi(2)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            NoiseProfile::Zero => true,
            NoiseProfile::Constant(s) => s >= 0.0 && s.is_finite(),
            NoiseProfile::Hetero { base, amplitude, frequency } => {
                base >= 0.0 && amplitude >= 0.0 && frequency.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(argument(format!("invalid noise profile {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OracleFunction {
    Ackley,
    Levi13,
    Synth1d,
}

/// A ground-truth function `f*` with Gaussian observation noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Oracle {
    name: String,
    function: OracleFunction,
    dimension: usize,
    domain: BoxDomain,
    noise: NoiseProfile,
    known_optimum: Option<(Vec<f64>, f64)>,
}

impl Oracle {
    pub fn ackley(dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(argument("ackley needs dimension >= 1"));
        }
        Ok(Self {
            name: "ackley".into(),
            function: OracleFunction::Ackley,
            dimension,
            domain: BoxDomain::new(vec![-10.0; dimension], vec![15.0; dimension])?,
            noise: NoiseProfile::Zero,
            known_optimum: Some((vec![0.0; dimension], 0.0)),
        })
    }

    pub fn levi13() -> Self {
        Self {
            name: "levi13".into(),
            function: OracleFunction::Levi13,
            dimension: 2,
            domain: BoxDomain::new(vec![-10.0; 2], vec![10.0; 2]).expect("valid box"),
            noise: NoiseProfile::Zero,
            known_optimum: Some((vec![1.0, 1.0], 0.0)),
        }
    }

    pub fn synth1d() -> Self {
        Self {
            name: "synth1d".into(),
            function: OracleFunction::Synth1d,
            dimension: 1,
            domain: BoxDomain::new(vec![0.0], vec![1.0]).expect("valid box"),
            noise: NoiseProfile::Zero,
            known_optimum: Some((vec![SYNTH1D_ARGMAX], 1.0)),
        }
    }

    /// Registry lookup by name. `dimension` is only free for `ackley`.
    pub fn by_name(name: &str, dimension: usize) -> Result<Self> {
        let fixed = |o: Oracle| {
            if o.dimension == dimension {
                Ok(o)
            } else {
                Err(argument(format!("oracle `{name}` has dimension {}, requested {dimension}", o.dimension)))
            }
        };
        match name.to_ascii_lowercase().as_str() {
            "ackley" => Self::ackley(dimension),
            "levi13" | "levi" | "levy13" => fixed(Self::levi13()),
            "synth1d" => fixed(Self::synth1d()),
            other => Err(argument(format!("unknown oracle `{other}` (expected ackley, levi13 or synth1d)"))),
        }
    }

    pub fn with_noise(mut self, noise: NoiseProfile) -> Result<Self> {
        noise.validate()?;
        self.noise = noise;
        Ok(self)
    }

    pub fn with_domain(mut self, domain: BoxDomain) -> Result<Self> {
        if domain.dimension() != self.dimension {
            return Err(argument("domain dimension does not match oracle"));
        }
        self.domain = domain;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn noise(&self) -> &NoiseProfile {
        &self.noise
    }

    pub fn known_optimum(&self) -> Option<(&[f64], f64)> {
        self.known_optimum.as_ref().map(|(x, v)| (x.as_slice(), *v))
    }

    /// Noise-free value `f*(x)`.
    pub fn value(&self, x: &[f64]) -> f64 {
        match self.function {
            OracleFunction::Ackley => ackley_default(x),
            OracleFunction::Levi13 => levi13(x[0], x[1]),
            OracleFunction::Synth1d => synth1d(x[0]),
        }
    }

    /// `K` independent draws `f*(x) + σ(x)·N(0, 1)`.
    pub fn sample(&self, x: &InputPoint, rng: &mut RngStream, replicates: usize) -> Result<Vec<f64>> {
        if replicates == 0 {
            return Err(argument("replicates must be >= 1"));
        }
        if x.dimension() != self.dimension || !self.domain.contains(x.coords()) {
            return Err(argument(format!("query {:?} is outside the oracle domain", x.coords())));
        }
        let f = self.value(x.coords());
        let sigma = self.noise.std(x.coords());
        Ok((0..replicates)
            .map(|_| {
                if sigma == 0.0 {
                    f
                } else {
                    let z: f64 = StandardNormal.sample(rng);
                    f + sigma * z
                }
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn ackley_origin_is_zero() {
        for d in [1, 2, 5, 10] {
            assert!(ackley_default(&vec![0.0; d]).abs() < 1e-14);
        }
    }

    #[test]
    fn ackley_unit_axis_point_matches_independent_evaluation() {
        // Written out term by term for x = e_1, d = 10.
        let root_mean_sq = (1.0f64 / 10.0).sqrt();
        let mean_cos = (9.0 + (2.0 * PI).cos()) / 10.0;
        let expected = 20.0 * (-0.2 * root_mean_sq).exp() + mean_cos.exp() - 20.0 - 1f64.exp();
        let mut x = vec![0.0; 10];
        x[0] = 1.0;
        assert!((ackley_default(&x) - expected).abs() < 1e-12);
    }

    #[test]
    fn ackley_negative_off_origin() {
        let o = Oracle::ackley(4).unwrap();
        let mut rng = RngStream::new(3, "ackley");
        for _ in 0..10_000 {
            let x = o.domain().sample_uniform(&mut rng);
            if x.iter().any(|v| *v != 0.0) {
                assert!(ackley_default(&x) < 0.0);
            }
        }
    }

    #[test]
    fn levi_reference_values() {
        assert!(levi13(1.0, 1.0).abs() < 1e-28);
        assert!((levi13(0.0, 0.0) + 2.0).abs() < 1e-12);
        let mut rng = RngStream::new(9, "levi");
        for _ in 0..10_000 {
            let (x, y) = (rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
            assert!(levi13(x, y) <= 0.0);
        }
    }

    #[test]
    fn synth1d_peak_is_one() {
        assert!((synth1d(SYNTH1D_ARGMAX) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn synth1d_dense_grid() {
        let n = 100_000;
        let (mut best_x, mut best) = (0.0, f64::NEG_INFINITY);
        let vals: Vec<f64> = (0..=n).map(|i| synth1d(i as f64 / n as f64)).collect();
        for (i, &v) in vals.iter().enumerate() {
            if v > best {
                best = v;
                best_x = i as f64 / n as f64;
            }
        }
        assert!((best_x - SYNTH1D_ARGMAX).abs() < 1e-3);
        assert!((best - 1.0).abs() < 1e-3 && best <= 1.0 + 1e-12);
        let local_maxima = vals.windows(3).filter(|w| w[1] > w[0] && w[1] > w[2]).count();
        assert!(local_maxima >= 3, "found {local_maxima}");
    }

    #[test]
    fn noise_free_samples_are_exact() {
        let o = Oracle::levi13();
        let x = InputPoint::new(vec![0.3, -2.0]).unwrap();
        let ys = o.sample(&x, &mut RngStream::new(1, "noise"), 4).unwrap();
        assert!(ys.iter().all(|y| y.to_bits() == levi13(0.3, -2.0).to_bits()));
    }

    #[test]
    fn constant_noise_variance() {
        let o = Oracle::synth1d().with_noise(NoiseProfile::Constant(0.5)).unwrap();
        let x = InputPoint::scalar(0.3).unwrap();
        let ys = o.sample(&x, &mut RngStream::new(2, "noise"), 100_000).unwrap();
        let v = crate::stats::sample_variance(&ys);
        assert!((0.2375..=0.2625).contains(&v), "variance {v}");
    }

    #[test]
    fn out_of_domain_rejected() {
        let o = Oracle::synth1d();
        assert!(o.sample(&InputPoint::scalar(1.5).unwrap(), &mut RngStream::new(0, "x"), 1).is_err());
    }

    #[test]
    fn registry() {
        assert_eq!(Oracle::by_name("ackley", 10).unwrap().dimension(), 10);
        assert!(Oracle::by_name("levi13", 3).is_err());
        assert!(Oracle::by_name("branin", 2).is_err());
    }

    #[test]
    fn known_optima_are_not_beaten() {
        for o in [Oracle::synth1d(), Oracle::levi13()] {
            let (_, best) = o.known_optimum().unwrap();
            let n = if o.dimension() == 1 { 100_000 } else { 1000 };
            let dom = o.domain().clone();
            let mut grid_max = f64::NEG_INFINITY;
            if o.dimension() == 1 {
                for i in 0..=n {
                    let x = dom.lower()[0] + (dom.upper()[0] - dom.lower()[0]) * i as f64 / n as f64;
                    grid_max = grid_max.max(o.value(&[x]));
                }
            } else {
                for i in 0..=n {
                    for j in 0..=n {
                        let x = -10.0 + 20.0 * i as f64 / n as f64;
                        let y = -10.0 + 20.0 * j as f64 / n as f64;
                        grid_max = grid_max.max(o.value(&[x, y]));
                    }
                }
            }
            assert!(grid_max <= best + 1e-9, "{}: {grid_max}", o.name());
        }
        let o = Oracle::ackley(5).unwrap();
        let mut rng = RngStream::new(4, "ackley-opt");
        for _ in 0..1_000_000 {
            assert!(o.value(&o.domain().sample_uniform(&mut rng)) <= 1e-9);
        }
    }
}
