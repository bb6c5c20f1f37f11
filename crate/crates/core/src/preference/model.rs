//! Laplace approximation of the GP posterior over latent utility.
//!
//! The Newton iteration is written in terms of `a = K⁻¹f` and the pair
//! factor `C` (one row `√c_k (e_i − e_j)` per pair, so that the likelihood
//! Hessian is `−CᵀC`). Only `B = I + C K Cᵀ` is ever factorized; it is
//! bounded below by the identity, so the Gram matrix itself never has to be
//! inverted even when inputs coincide.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::kernel::{gram, matern52, KernelConfig};
use super::likelihood::{log_likelihood, log_likelihood_gradient, pair_curvatures};
use super::{PreferenceError, PreferencePair};
use crate::mesh::ReductionParams;

pub const NEWTON_TOLERANCE: f64 = 1e-6;
pub const MAX_NEWTON_ITERATIONS: usize = 100;
pub const INITIAL_JITTER: f64 = 1e-8;
pub const MAX_JITTER: f64 = 1e-4;
const MAX_HALVINGS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PreferenceModel {
    kernel: KernelConfig,
    inputs: Vec<ReductionParams>,
    pairs: Vec<PreferencePair>,
    mode: Vec<f64>,
    weights: Vec<f64>,
    curvature_sqrt: Vec<f64>,
    covariance_factor: DMatrix<f64>,
    jitter: f64,
    newton_iterations: usize,
    gradient_norm: f64,
}

impl PreferenceModel {
    /// The prior alone: zero mean, variance σ² everywhere.
    pub fn prior(kernel: KernelConfig) -> Self {
        Self {
            kernel,
            inputs: Vec::new(),
            pairs: Vec::new(),
            mode: Vec::new(),
            weights: Vec::new(),
            curvature_sqrt: Vec::new(),
            covariance_factor: DMatrix::zeros(0, 0),
            jitter: 0.0,
            newton_iterations: 0,
            gradient_norm: 0.0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn kernel(&self) -> &KernelConfig {
        &self.kernel
    }

    pub fn inputs(&self) -> &[ReductionParams] {
        &self.inputs
    }

    pub fn pairs(&self) -> &[PreferencePair] {
        &self.pairs
    }

    /// Posterior mode of the latent utility at the training inputs.
    pub fn mode(&self) -> &[f64] {
        &self.mode
    }

    /// `K⁻¹ f̂`, the weights of the predictive mean.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn newton_iterations(&self) -> usize {
        self.newton_iterations
    }

    pub fn gradient_norm(&self) -> f64 {
        self.gradient_norm
    }

    pub fn converged(&self) -> bool {
        self.gradient_norm <= NEWTON_TOLERANCE
    }

    /// Lower Cholesky factor of `I + C K Cᵀ`.
    pub fn covariance_factor(&self) -> &DMatrix<f64> {
        &self.covariance_factor
    }

    /// `L⁻¹ C k(x, X)`: the part of the prior covariance at `x` explained by the data.
    pub(crate) fn explained(&self, p: &ReductionParams) -> (Vec<f64>, DVector<f64>) {
        let ks: Vec<f64> = self.inputs.iter().map(|x| matern52(p, x, &self.kernel)).collect();
        let ck = DVector::from_iterator(
            self.pairs.len(),
            self.pairs
                .iter()
                .zip(&self.curvature_sqrt)
                .map(|(pr, c)| c * (ks[pr.preferred] - ks[pr.less_preferred])),
        );
        let v = self
            .covariance_factor
            .solve_lower_triangular(&ck)
            .expect("factor has a positive diagonal");
        (ks, v)
    }

    /// Posterior covariance of the latent utility between two points.
    pub fn covariance(&self, a: &ReductionParams, b: &ReductionParams) -> f64 {
        let prior = matern52(a, b, &self.kernel);
        if self.is_empty() {
            return prior;
        }
        prior - self.explained(a).1.dot(&self.explained(b).1)
    }

    pub fn predict(&self, p: &ReductionParams) -> Prediction {
        let prior = self.kernel.signal_variance;
        if self.is_empty() {
            return Prediction {
                mean: 0.0,
                variance: prior,
            };
        }
        let (ks, v) = self.explained(p);
        let mean = ks.iter().zip(&self.weights).map(|(k, a)| k * a).sum();
        Prediction {
            mean,
            variance: (prior - v.norm_squared()).max(0.0),
        }
    }
}

/// Fits the Laplace posterior to `pairs` over `inputs`.
pub fn fit(
    pairs: &[PreferencePair],
    inputs: &[ReductionParams],
    kernel: KernelConfig,
) -> Result<PreferenceModel, PreferenceError> {
    kernel.validate()?;
    if pairs.is_empty() {
        return Err(PreferenceError::NoPairs);
    }
    let n = inputs.len();
    for p in pairs {
        if p.preferred == p.less_preferred {
            return Err(PreferenceError::SelfPair(p.preferred));
        }
        if p.preferred >= n || p.less_preferred >= n {
            return Err(PreferenceError::PairOutOfRange { pair: *p, inputs: n });
        }
    }
    let base = gram(inputs, &kernel);
    let mut jitter = INITIAL_JITTER;
    loop {
        match newton(&base, jitter, pairs, kernel.noise) {
            Some(state) => {
                return Ok(PreferenceModel {
                    kernel,
                    inputs: inputs.to_vec(),
                    pairs: pairs.to_vec(),
                    mode: state.f.as_slice().to_vec(),
                    weights: state.a.as_slice().to_vec(),
                    curvature_sqrt: state.curvature_sqrt,
                    covariance_factor: state.factor,
                    jitter,
                    newton_iterations: state.iterations,
                    gradient_norm: state.gradient_norm,
                });
            }
            None if jitter < MAX_JITTER => jitter *= 10.0,
            None => return Err(PreferenceError::Factorization { jitter }),
        }
    }
}

struct NewtonState {
    a: DVector<f64>,
    f: DVector<f64>,
    curvature_sqrt: Vec<f64>,
    factor: DMatrix<f64>,
    iterations: usize,
    gradient_norm: f64,
}

fn pair_factor(pairs: &[PreferencePair], curvature_sqrt: &[f64], n: usize) -> DMatrix<f64> {
    let mut c = DMatrix::zeros(pairs.len(), n);
    for (k, (p, s)) in pairs.iter().zip(curvature_sqrt).enumerate() {
        c[(k, p.preferred)] = *s;
        c[(k, p.less_preferred)] = -*s;
    }
    c
}

/// Returns `None` when `I + C K Cᵀ` cannot be factorized at this jitter.
fn newton(base: &DMatrix<f64>, jitter: f64, pairs: &[PreferencePair], noise: f64) -> Option<NewtonState> {
    let n = base.nrows();
    let m = pairs.len();
    let mut k = base.clone();
    for i in 0..n {
        k[(i, i)] += jitter;
    }
    let objective = |a: &DVector<f64>| -> (f64, DVector<f64>) {
        let f = &k * a;
        (log_likelihood(f.as_slice(), pairs, noise) - 0.5 * a.dot(&f), f)
    };

    let mut a = DVector::zeros(n);
    let (mut psi, mut f) = objective(&a);
    let mut iterations = 0;
    let mut gradient_norm;
    loop {
        let g = DVector::from_vec(log_likelihood_gradient(f.as_slice(), pairs, noise));
        gradient_norm = (&g - &a).norm();
        if gradient_norm <= NEWTON_TOLERANCE || iterations >= MAX_NEWTON_ITERATIONS {
            break;
        }
        iterations += 1;

        let sqrt_c: Vec<f64> = pair_curvatures(f.as_slice(), pairs, noise)
            .iter()
            .map(|c| c.sqrt())
            .collect();
        let c = pair_factor(pairs, &sqrt_c, n);
        let b_mat = DMatrix::identity(m, m) + &c * &k * c.transpose();
        let chol = b_mat.cholesky()?;
        // Newton target: (K⁻¹ + CᵀC)⁻¹ (CᵀC f + g), expressed as K⁻¹ times it
        let b = c.transpose() * (&c * &f) + &g;
        let a_full = &b - c.transpose() * chol.solve(&(&c * (&k * &b)));

        let step = &a_full - &a;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let trial = &a + &step * t;
            let (trial_psi, trial_f) = objective(&trial);
            if trial_psi.is_finite() && trial_psi >= psi {
                a = trial;
                psi = trial_psi;
                f = trial_f;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }

    let sqrt_c: Vec<f64> = pair_curvatures(f.as_slice(), pairs, noise)
        .iter()
        .map(|c| c.sqrt())
        .collect();
    let c = pair_factor(pairs, &sqrt_c, n);
    let b_mat = DMatrix::identity(m, m) + &c * &k * c.transpose();
    let factor = b_mat.cholesky()?.l();
    if factor.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(NewtonState {
        a,
        f,
        curvature_sqrt: sqrt_c,
        factor,
        iterations,
        gradient_norm,
    })
}
