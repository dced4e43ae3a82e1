//! Isotropic Gaussian kernel density estimation, evaluated in log space.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, InputPoint};
use crate::error::{argument, Result};
use crate::stats::LN_SQRT_2PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdePredictor {
    points: Vec<Vec<f64>>,
    bandwidth: f64,
}

/// Silverman's rule of thumb, `1.06 · σ̄ · n^(-1/(d+4))`, where `σ̄` is the
/// mean per-dimension sample standard deviation. Falls back to 1 when the
/// spread is zero or undefined.
pub fn silverman_bandwidth(points: &[Vec<f64>]) -> f64 {
    let n = points.len();
    if n < 2 {
        return 1.0;
    }
    let d = points[0].len();
    let mut sd_sum = 0.0;
    for j in 0..d {
        let col: Vec<f64> = points.iter().map(|p| p[j]).collect();
        sd_sum += crate::stats::sample_variance(&col).sqrt();
    }
    let sd = sd_sum / d as f64;
    if !(sd > 0.0) {
        return 1.0;
    }
    1.06 * sd * (n as f64).powf(-1.0 / (d as f64 + 4.0))
}

impl KdePredictor {
    pub fn fit(points: Vec<Vec<f64>>, bandwidth: Option<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(argument("kde needs at least one point"));
        }
        let d = points[0].len();
        if d == 0 || points.iter().any(|p| p.len() != d) {
            return Err(argument("kde points must share one nonzero dimension"));
        }
        let bandwidth = match bandwidth {
            Some(h) if h > 0.0 && h.is_finite() => h,
            Some(h) => return Err(argument(format!("bandwidth must be positive, got {h}"))),
            None => silverman_bandwidth(&points),
        };
        Ok(Self { points, bandwidth })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn dimension(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dimension() {
            return Err(argument(format!(
                "query dimension {} vs kde dimension {}",
                x.len(),
                self.dimension()
            )));
        }
        Ok(self.log_density_unchecked(x))
    }

    pub(crate) fn log_density_unchecked(&self, x: &[f64]) -> f64 {
        let h2 = self.bandwidth * self.bandwidth;
        let exponents: Vec<f64> = self
            .points
            .iter()
            .map(|p| -0.5 * p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / h2)
            .collect();
        let max = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + exponents.iter().map(|e| (e - max).exp()).sum::<f64>().ln();
        let d = self.dimension() as f64;
        lse - (self.points.len() as f64).ln() - d * (self.bandwidth.ln() + LN_SQRT_2PI)
    }
}

pub fn kde_fit(d: &Dataset, bandwidth: Option<f64>) -> Result<KdePredictor> {
    KdePredictor::fit(d.inputs(), bandwidth)
}

pub fn kde_log_density(k: &KdePredictor, x: &InputPoint) -> Result<f64> {
    k.log_density(x.coords())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_point_closed_form() {
        let k = KdePredictor::fit(vec![vec![0.0]], Some(1.0)).unwrap();
        assert!((k.log_density(&[0.0]).unwrap() + 0.918_938_533_204_672_8).abs() < 1e-14);
    }

    #[test]
    fn midpoint_is_lower_than_either_point() {
        let k = KdePredictor::fit(vec![vec![-1.0], vec![1.0]], Some(0.5)).unwrap();
        let mid = k.log_density(&[0.0]).unwrap();
        assert!(mid < k.log_density(&[1.0]).unwrap());
        assert!(mid < k.log_density(&[-1.0]).unwrap());
    }

    #[test]
    fn far_query_stays_finite() {
        let k = KdePredictor::fit(vec![vec![0.0, 0.0], vec![1.0, 2.0]], Some(0.01)).unwrap();
        let v = k.log_density(&[50.0 * 0.01 + 100.0, -3.0]).unwrap();
        assert!(v.is_finite());
    }

    #[test]
    fn bad_bandwidth() {
        assert!(KdePredictor::fit(vec![vec![0.0]], Some(0.0)).is_err());
        assert!(KdePredictor::fit(vec![vec![0.0]], Some(-1.0)).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let k = KdePredictor::fit(vec![vec![0.0]], None).unwrap();
        assert!(k.log_density(&[0.0, 1.0]).is_err());
    }

    proptest! {
        #[test]
        fn finite_everywhere(x in -1e6f64..1e6, y in -1e6f64..1e6) {
            let k = KdePredictor::fit(vec![vec![0.0, 1.0], vec![2.0, -1.0], vec![0.5, 0.5]], None).unwrap();
            prop_assert!(k.log_density(&[x, y]).unwrap().is_finite());
        }

        #[test]
        fn adding_a_point_at_x_never_lowers_density_there(
            pts in proptest::collection::vec(-5.0f64..5.0, 1..20),
            x in -6.0f64..6.0,
            h in 0.05f64..2.0,
        ) {
            let base: Vec<Vec<f64>> = pts.iter().map(|p| vec![*p]).collect();
            let before = KdePredictor::fit(base.clone(), Some(h)).unwrap().log_density(&[x]).unwrap();
            let mut more = base;
            more.push(vec![x]);
            let after = KdePredictor::fit(more, Some(h)).unwrap().log_density(&[x]).unwrap();
            prop_assert!(after >= before - 1e-12);
        }
    }
}
