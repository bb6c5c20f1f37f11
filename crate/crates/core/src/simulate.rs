//! Drives complete sessions with a simulated rater, either over real meshes
//! or over a synthetic utility that bypasses decimation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::mesh::{ReductionParams, TriangleMesh, PARAM_COUNT};
use crate::preference::{Proposal, Rating};
use crate::rater::{RaterConfig, RaterError, RaterModel, VariantObservation};
use crate::render::{QualityReference, QualityScore};
use crate::sequence::{EvaluationSequence, VariantRecord};
use crate::session::{compute_variant, LoopSession, SessionConfig, SessionError, TerminationReason};

#[derive(Debug, thiserror::Error)]
pub enum SimulationError {
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Rater(#[from] RaterError),
}

/// Something that turns a parameter set into a rateable variant.
pub trait Objective {
    /// Context key for stable pattern noise and the sequence's mesh field.
    fn name(&self) -> &str;
    fn evaluate(&self, proposal: &Proposal) -> Result<VariantRecord, SessionError>;
}

/// Decimation of a real mesh scored by five-view SSIM.
pub struct MeshObjective {
    name: String,
    mesh: TriangleMesh,
    reference: QualityReference,
}

impl MeshObjective {
    pub fn new(name: impl Into<String>, mesh: TriangleMesh) -> Result<Self, SessionError> {
        let reference = QualityReference::new(&mesh)?;
        Ok(Self {
            name: name.into(),
            mesh,
            reference,
        })
    }

    /// Uses a smaller render resolution for quicker experiments.
    pub fn with_resolution(name: impl Into<String>, mesh: TriangleMesh, size: usize) -> Result<Self, SessionError> {
        let reference = QualityReference::with_size(&mesh, size)?;
        Ok(Self {
            name: name.into(),
            mesh,
            reference,
        })
    }
}

impl Objective for MeshObjective {
    fn name(&self) -> &str {
        &self.name
    }

    fn evaluate(&self, proposal: &Proposal) -> Result<VariantRecord, SessionError> {
        Ok(compute_variant(&self.mesh, &self.reference, proposal)?.record)
    }
}

/// Gaussian bump over a few active coordinates, reported as the quality score.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticObjective {
    pub center: [f64; PARAM_COUNT],
    pub active: Vec<usize>,
    pub width: f64,
}

impl SyntheticObjective {
    pub const DEFAULT_WIDTH: f64 = 0.3;

    /// Bump on the first `active` coordinates with its center drawn in [0.2, 0.8].
    pub fn random(active: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let center = std::array::from_fn(|_| rng.random_range(0.2..=0.8));
        Self {
            center,
            active: (0..active.min(PARAM_COUNT)).collect(),
            width: Self::DEFAULT_WIDTH,
        }
    }

    pub fn utility(&self, p: &ReductionParams) -> f64 {
        let d2: f64 = self
            .active
            .iter()
            .map(|&i| (p.values()[i] - self.center[i]).powi(2))
            .sum();
        (-d2 / (2.0 * self.width * self.width)).exp()
    }
}

impl Objective for SyntheticObjective {
    fn name(&self) -> &str {
        "synthetic"
    }

    fn evaluate(&self, proposal: &Proposal) -> Result<VariantRecord, SessionError> {
        Ok(VariantRecord {
            role: proposal.role,
            params: proposal.params,
            face_count: 0,
            reduction_ratio: proposal.params.target_fraction(),
            faulty: false,
            quality: QualityScore::uniform(self.utility(&proposal.params)),
            rating: None,
            user_flagged: false,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationOptions {
    pub session: SessionConfig,
    /// End the session as satisfied once the rule fires; otherwise keep going
    /// to the cap and only record when it fired.
    pub stop_on_satisfaction: bool,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            session: SessionConfig::default(),
            stop_on_satisfaction: true,
        }
    }
}

/// Runs one session to completion. The satisfaction rule fires when the
/// rater's unbiased rating reaches 5 on some variant in two consecutive
/// iterations.
pub fn run_simulated_session(
    objective: &dyn Objective,
    rater: &RaterConfig,
    options: SimulationOptions,
) -> Result<EvaluationSequence, SimulationError> {
    let mut rater = RaterModel::new(rater.clone())?;
    let id = format!("{}-{}", objective.name(), options.session.seed);
    let mut session = LoopSession::new(id, objective.name(), options.session);
    let mut previous_top = false;
    let mut satisfied_at = None;
    while !session.state().is_terminal() {
        let plan = session.plan()?;
        let variants = plan
            .iter()
            .map(|p| objective.evaluate(p))
            .collect::<Result<Vec<_>, _>>()?;
        let observations: Vec<VariantObservation> = variants
            .iter()
            .map(|v| VariantObservation {
                quality: v.quality,
                reduction_ratio: v.reduction_ratio,
                faulty: v.faulty,
            })
            .collect();
        let index = session.complete_iteration(variants, None)?;
        let top = observations.iter().any(|o| rater.unbiased_rating(o) == Rating::MAX);
        let ratings = rater.rate_batch(&observations, objective.name());
        session.submit_ratings(&ratings)?;
        if top && previous_top && satisfied_at.is_none() {
            satisfied_at = Some(index);
            if options.stop_on_satisfaction && !session.state().is_terminal() {
                session.terminate(TerminationReason::Satisfied)?;
            }
        }
        previous_top = top;
    }
    let mut seq = session.to_sequence();
    seq.satisfied_at = satisfied_at;
    Ok(seq)
}
