//! Gaussian-process preference learning over the decimation control space.

mod acquisition;
mod kernel;
mod likelihood;
mod model;
mod rating;

pub use acquisition::{
    expected_improvement, propose_batch, space_filling, Proposal, SlotRole, BATCH_SIZE, TRUST_RADIUS,
};
pub use kernel::{gram, matern52, KernelConfig};
pub use likelihood::{
    inverse_mills, log_likelihood, log_likelihood_gradient, log_normal_cdf, pair_curvatures, probit_scale,
    std_normal_cdf, std_normal_pdf,
};
pub use model::{
    fit, Prediction, PreferenceModel, INITIAL_JITTER, MAX_JITTER, MAX_NEWTON_ITERATIONS, NEWTON_TOLERANCE,
};
pub use rating::{ratings_to_pairs, PreferencePair, Rating};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PreferenceError {
    #[error("rating {0} is outside 0..=5")]
    InvalidRating(u8),
    #[error("variant {0} cannot be preferred to itself")]
    SelfPair(usize),
    #[error("invalid kernel configuration {0:?}")]
    InvalidKernel(KernelConfig),
    #[error("no preference pairs to fit")]
    NoPairs,
    #[error("pair {pair:?} references an input beyond the {inputs} available")]
    PairOutOfRange { pair: PreferencePair, inputs: usize },
    #[error("posterior factorization failed at jitter {jitter:e}")]
    Factorization { jitter: f64 },
}
