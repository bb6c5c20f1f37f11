//! Core of a preference-guided polygon reduction loop: a parameterized
//! quadric-error decimator, an SSIM quality metric over rendered views,
//! Gaussian-process preference learning with batch proposals, simulated
//! raters with judgment biases, and the session state machine tying them
//! together.

pub mod fixtures;
pub mod mesh;
pub mod preference;
pub mod rater;
pub mod render;
pub mod sequence;
pub mod session;
pub mod simulate;
