//! Pairwise probit likelihood `P(i ≻ j) = Φ((f_i − f_j) / (√2 σ))`.

use libm::erfc;

use super::PreferencePair;

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;
/// Below this z the Gaussian tail is evaluated by its asymptotic expansion.
const TAIL_Z: f64 = -30.0;

pub fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / SQRT_2PI
}

pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Asymptotic series for Φ(z)·√(2π)·(−z)/exp(−z²/2) as z → −∞.
fn tail_series(z: f64) -> f64 {
    let z2 = z * z;
    1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2)
}

pub fn log_normal_cdf(z: f64) -> f64 {
    if z < TAIL_Z {
        -0.5 * z * z - (-z).ln() - SQRT_2PI.ln() + tail_series(z).ln()
    } else {
        std_normal_cdf(z).ln()
    }
}

/// φ(z)/Φ(z), stable for large negative z.
pub fn inverse_mills(z: f64) -> f64 {
    if z < TAIL_Z {
        -z / tail_series(z)
    } else {
        std_normal_pdf(z) / std_normal_cdf(z)
    }
}

/// Scale dividing utility differences in the probit argument.
pub fn probit_scale(noise: f64) -> f64 {
    std::f64::consts::SQRT_2 * noise
}

fn z_of(f: &[f64], p: &PreferencePair, scale: f64) -> f64 {
    (f[p.preferred] - f[p.less_preferred]) / scale
}

pub fn log_likelihood(f: &[f64], pairs: &[PreferencePair], noise: f64) -> f64 {
    let s = probit_scale(noise);
    pairs.iter().map(|p| log_normal_cdf(z_of(f, p, s))).sum()
}

pub fn log_likelihood_gradient(f: &[f64], pairs: &[PreferencePair], noise: f64) -> Vec<f64> {
    let s = probit_scale(noise);
    let mut g = vec![0.0; f.len()];
    for p in pairs {
        let d = inverse_mills(z_of(f, p, s)) / s;
        g[p.preferred] += d;
        g[p.less_preferred] -= d;
    }
    g
}

/// Per-pair negative second derivative of the log likelihood with respect to
/// the utility difference; the Hessian is `−Σ_k c_k (e_i − e_j)(e_i − e_j)ᵀ`.
pub fn pair_curvatures(f: &[f64], pairs: &[PreferencePair], noise: f64) -> Vec<f64> {
    let s = probit_scale(noise);
    pairs
        .iter()
        .map(|p| {
            let z = z_of(f, p, s);
            let r = inverse_mills(z);
            (r * (z + r) / (s * s)).max(0.0)
        })
        .collect()
}
