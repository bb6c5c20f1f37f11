//! Simulated raters: an objective utility over (quality, reduction ratio)
//! corrupted by anchoring, loss aversion, diminishing returns and three noise
//! components, mapped onto the 0-5 rating scale.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::preference::Rating;
use crate::render::QualityScore;

pub const DEFAULT_DETECTION_PROBABILITY: f64 = 0.8;
const RATING_BINS: f64 = 5.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RaterError {
    #[error("invalid rater configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed rater configuration: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityWeights {
    pub quality: f64,
    pub reduction: f64,
}

impl Default for UtilityWeights {
    fn default() -> Self {
        Self {
            quality: 0.5,
            reduction: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct BiasConfig {
    /// α: weight on the gain relative to the best utility seen so far.
    pub anchoring_weight: f64,
    /// λ: penalty per unit of utility below the best seen.
    pub loss_aversion: f64,
    /// γ: exponent reduction applied to positive utilities.
    pub diminishing_returns: f64,
    pub transient_noise_sd: f64,
    pub level_offset: f64,
    pub pattern_noise_sd: f64,
}

impl BiasConfig {
    pub fn is_unbiased(&self) -> bool {
        *self == Self::default()
    }
}

fn default_detection() -> f64 {
    DEFAULT_DETECTION_PROBABILITY
}

/// JSON document describing one simulated rater.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaterConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub weights: UtilityWeights,
    #[serde(default)]
    pub bias: BiasConfig,
    #[serde(default = "default_detection")]
    pub detection_probability: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for RaterConfig {
    fn default() -> Self {
        Self {
            name: String::new(),
            weights: UtilityWeights::default(),
            bias: BiasConfig::default(),
            detection_probability: DEFAULT_DETECTION_PROBABILITY,
            seed: 0,
        }
    }
}

impl RaterConfig {
    pub fn from_json(text: &str) -> Result<Self, RaterError> {
        let c: Self = serde_json::from_str(text).map_err(|e| RaterError::Parse(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), RaterError> {
        let b = &self.bias;
        let checks = [
            (self.weights.quality >= 0.0, "weights.quality must be >= 0"),
            (self.weights.reduction >= 0.0, "weights.reduction must be >= 0"),
            (
                (0.0..=1.0).contains(&b.anchoring_weight),
                "anchoring_weight must be in [0,1]",
            ),
            (b.loss_aversion >= 0.0, "loss_aversion must be >= 0"),
            (
                (0.0..=1.0).contains(&b.diminishing_returns),
                "diminishing_returns must be in [0,1]",
            ),
            (b.transient_noise_sd >= 0.0, "transient_noise_sd must be >= 0"),
            (b.level_offset.is_finite(), "level_offset must be finite"),
            (b.pattern_noise_sd >= 0.0, "pattern_noise_sd must be >= 0"),
            (
                (0.0..=1.0).contains(&self.detection_probability),
                "detection_probability must be in [0,1]",
            ),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(RaterError::InvalidConfig(msg.to_string())),
            None => Ok(()),
        }
    }
}

/// What the rater sees of one variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariantObservation {
    pub quality: QualityScore,
    pub reduction_ratio: f64,
    pub faulty: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RaterMemory {
    pub last_ratings: Option<Vec<Rating>>,
    pub best_seen: Option<f64>,
}

/// Maps a score onto 1..=5 by five equal bins of the clamped [0,1] range.
pub fn score_to_rating(score: f64) -> Rating {
    let s = if score.is_nan() { 0.0 } else { score.clamp(0.0, 1.0) };
    let bin = ((s * RATING_BINS).floor() as u8).min(4);
    Rating::new(bin + 1).expect("bin is within 1..=5")
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

/// A stateful rater for one session.
#[derive(Debug, Clone)]
pub struct RaterModel {
    config: RaterConfig,
    rng: ChaCha8Rng,
    memory: RaterMemory,
}

impl RaterModel {
    pub fn new(config: RaterConfig) -> Result<Self, RaterError> {
        config.validate()?;
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            memory: RaterMemory::default(),
        })
    }

    pub fn config(&self) -> &RaterConfig {
        &self.config
    }

    pub fn memory(&self) -> &RaterMemory {
        &self.memory
    }

    /// Weighted utility with the diminishing-returns transform on its positive part.
    pub fn base_utility(&self, quality: &QualityScore, reduction_ratio: f64) -> f64 {
        let w = &self.config.weights;
        let u = w.quality * quality.mean + w.reduction * reduction_ratio;
        if u > 0.0 {
            u.powf(1.0 - self.config.bias.diminishing_returns)
        } else {
            u
        }
    }

    /// Rating an ideal rater would give: faulty geometry is skipped, everything
    /// else is the binned linear utility with no bias or noise.
    pub fn unbiased_rating(&self, v: &VariantObservation) -> Rating {
        if v.faulty {
            return Rating::SKIP;
        }
        let w = &self.config.weights;
        score_to_rating(w.quality * v.quality.mean + w.reduction * v.reduction_ratio)
    }

    /// Offset that is fixed for a given context and rater seed.
    pub fn pattern_offset(&self, context: &str) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(context.as_bytes()) ^ self.config.seed.rotate_left(17));
        let z: f64 = StandardNormal.sample(&mut rng);
        z * self.config.bias.pattern_noise_sd
    }

    /// Rates a batch and updates memory. `context` keys the stable pattern noise.
    pub fn rate_batch(&mut self, variants: &[VariantObservation], context: &str) -> Vec<Rating> {
        let b = self.config.bias;
        let pattern = self.pattern_offset(context);
        let best = self.memory.best_seen;
        let mut batch_best: Option<f64> = None;
        let mut ratings = Vec::with_capacity(variants.len());
        for v in variants {
            if v.faulty && self.rng.random::<f64>() < self.config.detection_probability {
                ratings.push(Rating::SKIP);
                continue;
            }
            let u = self.base_utility(&v.quality, v.reduction_ratio);
            batch_best = Some(batch_best.map_or(u, |m: f64| m.max(u)));
            let mut s = u;
            if let Some(best) = best {
                s = (1.0 - b.anchoring_weight) * u + b.anchoring_weight * (u - best)
                    - b.loss_aversion * (best - u).max(0.0);
            }
            s += b.level_offset + pattern;
            if b.transient_noise_sd > 0.0 {
                let z: f64 = StandardNormal.sample(&mut self.rng);
                s += b.transient_noise_sd * z;
            }
            ratings.push(score_to_rating(s));
        }
        if let Some(m) = batch_best {
            self.memory.best_seen = Some(best.map_or(m, |b| b.max(m)));
        }
        self.memory.last_ratings = Some(ratings.clone());
        ratings
    }
}
