use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::PreferenceError;
use crate::mesh::ReductionParams;

/// Matérn kernel hyperparameters plus the probit noise scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub lengthscale: f64,
    pub signal_variance: f64,
    pub noise: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            lengthscale: 2.0,
            signal_variance: 1.0,
            noise: 0.1,
        }
    }
}

impl KernelConfig {
    /// Smoothness is fixed at 5/2.
    pub const SMOOTHNESS: f64 = 2.5;

    pub fn validate(&self) -> Result<(), PreferenceError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if ok(self.lengthscale) && ok(self.signal_variance) && ok(self.noise) {
            Ok(())
        } else {
            Err(PreferenceError::InvalidKernel(*self))
        }
    }

    /// Matérn 5/2 covariance at Euclidean distance `r`.
    pub fn at_distance(&self, r: f64) -> f64 {
        let s = 5f64.sqrt() * r / self.lengthscale;
        self.signal_variance * (1.0 + s + s * s / 3.0) * (-s).exp()
    }
}

/// `σ²(1 + √5 r/ρ + 5r²/(3ρ²)) exp(−√5 r/ρ)` with `r = ‖a − b‖₂`.
pub fn matern52(a: &ReductionParams, b: &ReductionParams, k: &KernelConfig) -> f64 {
    k.at_distance(a.distance(b))
}

pub fn gram(points: &[ReductionParams], k: &KernelConfig) -> DMatrix<f64> {
    let n = points.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = k.signal_variance;
        for j in 0..i {
            let v = matern52(&points[i], &points[j], k);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_at_zero_is_signal_variance() {
        let k = KernelConfig {
            signal_variance: 1.7,
            ..Default::default()
        };
        let p = ReductionParams::default();
        assert_eq!(matern52(&p, &p, &k), 1.7);
    }

    #[test]
    fn value_at_one_lengthscale() {
        let k = KernelConfig::default();
        let expected = (1.0 + 5f64.sqrt() + 5.0 / 3.0) * (-5f64.sqrt()).exp();
        assert!((k.at_distance(2.0) - expected).abs() < 1e-15);
        assert!((expected - 0.52399).abs() < 1e-5);
    }

    #[test]
    fn decays_monotonically() {
        let k = KernelConfig::default();
        let mut last = k.at_distance(0.0);
        for i in 1..200 {
            let v = k.at_distance(i as f64 * 0.25);
            assert!(v < last);
            last = v;
        }
        assert!(k.at_distance(1e3) < 1e-300);
    }

    #[test]
    fn invalid_configs() {
        let bad = KernelConfig {
            lengthscale: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(KernelConfig::default().validate().is_ok());
    }
}
