//! The iterate → reduce → rate → optimize state machine, independent of any
//! transport or storage.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::{decimate, MeshError, ReductionParams, TriangleMesh};
use crate::preference::{
    fit, propose_batch, ratings_to_pairs, KernelConfig, PreferenceError, PreferenceModel, PreferencePair, Proposal,
    Rating,
};
use crate::render::{QualityReference, RenderError};
use crate::sequence::{
    EvaluationSequence, IterationRecord, SessionState, VariantRecord, SCHEMA_VERSION, VARIANTS_PER_ITERATION,
};

pub const DEFAULT_MAX_ITERATIONS: usize = 11;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SessionError {
    #[error("session is {state:?}, expected {expected:?}")]
    WrongState {
        state: SessionState,
        expected: SessionState,
    },
    #[error("session already terminated ({0:?})")]
    Terminated(SessionState),
    #[error("expected {expected} values, got {got}")]
    Arity { expected: usize, got: usize },
    #[error(transparent)]
    Preference(#[from] PreferenceError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Render(#[from] RenderError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    Satisfied,
    Reset,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    pub max_iterations: usize,
    pub kernel: KernelConfig,
    pub seed: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            max_iterations: DEFAULT_MAX_ITERATIONS,
            kernel: KernelConfig::default(),
            seed: 0,
        }
    }
}

/// Seed for the proposal of iteration `index`.
pub fn iteration_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Pool-wide id of a variant: `(iteration − 1) · 4 + slot`.
pub fn variant_id(iteration: usize, slot: usize) -> usize {
    (iteration - 1) * VARIANTS_PER_ITERATION + slot
}

#[derive(Debug, Clone)]
pub struct LoopSession {
    id: String,
    mesh: String,
    config: SessionConfig,
    state: SessionState,
    iterations: Vec<IterationRecord>,
    inputs: Vec<ReductionParams>,
    pairs: Vec<PreferencePair>,
}

impl LoopSession {
    pub fn new(id: impl Into<String>, mesh: impl Into<String>, config: SessionConfig) -> Self {
        Self {
            id: id.into(),
            mesh: mesh.into(),
            config,
            state: SessionState::Computing,
            iterations: Vec::new(),
            inputs: Vec::new(),
            pairs: Vec::new(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn mesh(&self) -> &str {
        &self.mesh
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn iterations(&self) -> &[IterationRecord] {
        &self.iterations
    }

    /// Index of the latest iteration, or of the one being computed.
    pub fn current_index(&self) -> usize {
        match self.state {
            SessionState::Computing => self.iterations.len() + 1,
            _ => self.iterations.len(),
        }
    }

    /// All preference pairs pooled so far, over [`variant_id`]s.
    pub fn pairs(&self) -> &[PreferencePair] {
        &self.pairs
    }

    pub fn inputs(&self) -> &[ReductionParams] {
        &self.inputs
    }

    pub fn model(&self) -> Result<PreferenceModel, PreferenceError> {
        if self.pairs.is_empty() {
            Ok(PreferenceModel::prior(self.config.kernel))
        } else {
            fit(&self.pairs, &self.inputs, self.config.kernel)
        }
    }

    /// Parameter sets for the iteration being computed.
    pub fn plan(&self) -> Result<Vec<Proposal>, SessionError> {
        self.expect(SessionState::Computing)?;
        let model = self.model()?;
        Ok(propose_batch(
            &model,
            iteration_seed(self.config.seed, self.current_index()),
        ))
    }

    fn expect(&self, expected: SessionState) -> Result<(), SessionError> {
        if self.state.is_terminal() {
            return Err(SessionError::Terminated(self.state));
        }
        if self.state != expected {
            return Err(SessionError::WrongState {
                state: self.state,
                expected,
            });
        }
        Ok(())
    }

    pub fn complete_iteration(
        &mut self,
        variants: Vec<VariantRecord>,
        timestamp_ms: Option<u64>,
    ) -> Result<usize, SessionError> {
        self.expect(SessionState::Computing)?;
        if variants.len() != VARIANTS_PER_ITERATION {
            return Err(SessionError::Arity {
                expected: VARIANTS_PER_ITERATION,
                got: variants.len(),
            });
        }
        let index = self.iterations.len() + 1;
        self.iterations.push(IterationRecord {
            index,
            variants,
            timestamp_ms,
        });
        self.state = SessionState::AwaitingRatings;
        Ok(index)
    }

    /// Records ratings for the current iteration and pools its pairs. Returns
    /// the new state: computing, or terminated at the iteration cap.
    pub fn submit_ratings(&mut self, ratings: &[Rating]) -> Result<SessionState, SessionError> {
        self.expect(SessionState::AwaitingRatings)?;
        if ratings.len() != VARIANTS_PER_ITERATION {
            return Err(SessionError::Arity {
                expected: VARIANTS_PER_ITERATION,
                got: ratings.len(),
            });
        }
        let it = self
            .iterations
            .last_mut()
            .expect("awaiting ratings implies an iteration");
        let base = variant_id(it.index, 0);
        for (v, &r) in it.variants.iter_mut().zip(ratings) {
            v.rating = Some(r);
            v.user_flagged = r.is_skip();
            self.inputs.push(v.params);
        }
        let indexed: Vec<(usize, Rating)> = ratings.iter().enumerate().map(|(k, &r)| (base + k, r)).collect();
        self.pairs.extend(ratings_to_pairs(&indexed));
        self.state = if it.index >= self.config.max_iterations {
            SessionState::TerminatedMaxIter
        } else {
            SessionState::Computing
        };
        Ok(self.state)
    }

    pub fn terminate(&mut self, reason: TerminationReason) -> Result<SessionState, SessionError> {
        if self.state.is_terminal() {
            return Err(SessionError::Terminated(self.state));
        }
        self.state = match reason {
            TerminationReason::Satisfied => SessionState::TerminatedSatisfied,
            TerminationReason::Reset => SessionState::TerminatedReset,
        };
        Ok(self.state)
    }

    pub fn to_sequence(&self) -> EvaluationSequence {
        EvaluationSequence {
            schema_version: SCHEMA_VERSION,
            session_id: self.id.clone(),
            mesh: self.mesh.clone(),
            seed: self.config.seed,
            kernel: self.config.kernel,
            max_iterations: self.config.max_iterations,
            state: self.state,
            iterations: self.iterations.clone(),
            satisfied_at: None,
        }
    }
}

/// A decimated variant together with its record.
#[derive(Debug, Clone)]
pub struct ComputedVariant {
    pub record: VariantRecord,
    pub mesh: TriangleMesh,
}

/// Decimates `original` under a proposal and scores it against `reference`.
pub fn compute_variant(
    original: &TriangleMesh,
    reference: &QualityReference,
    proposal: &Proposal,
) -> Result<ComputedVariant, SessionError> {
    let result = decimate(original, &proposal.params)?;
    let quality = reference.score(&result.mesh)?;
    Ok(ComputedVariant {
        record: VariantRecord {
            role: proposal.role,
            params: proposal.params,
            face_count: result.mesh.face_count(),
            reduction_ratio: result.reduction_ratio,
            faulty: result.faulty,
            quality,
            rating: None,
            user_flagged: false,
        },
        mesh: result.mesh,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preference::SlotRole;
    use crate::render::QualityScore;

    fn records(proposals: &[Proposal]) -> Vec<VariantRecord> {
        proposals
            .iter()
            .map(|p| VariantRecord {
                role: p.role,
                params: p.params,
                face_count: 100,
                reduction_ratio: p.params.target_fraction(),
                faulty: false,
                quality: QualityScore::uniform(0.9),
                rating: None,
                user_flagged: false,
            })
            .collect()
    }

    fn ratings(v: [u8; 4]) -> Vec<Rating> {
        v.iter().map(|&r| Rating::new(r).unwrap()).collect()
    }

    fn advance(s: &mut LoopSession) {
        let plan = s.plan().unwrap();
        s.complete_iteration(records(&plan), None).unwrap();
    }

    #[test]
    fn six_pairs_pooled_per_example_rating() {
        let mut s = LoopSession::new("a", "cube", SessionConfig::default());
        advance(&mut s);
        assert_eq!(
            s.submit_ratings(&ratings([3, 4, 5, 1])).unwrap(),
            SessionState::Computing
        );
        assert_eq!(s.pairs().len(), 6);
        advance(&mut s);
        assert_eq!(s.iterations()[1].variants[0].role, SlotRole::Exploit);
        s.submit_ratings(&ratings([3, 4, 5, 1])).unwrap();
        assert_eq!(s.pairs().len(), 12);
        assert!(s.pairs().iter().all(|p| p.preferred < 8 && p.less_preferred < 8));
    }

    #[test]
    fn cap_terminates() {
        let mut s = LoopSession::new(
            "a",
            "cube",
            SessionConfig {
                max_iterations: 2,
                ..Default::default()
            },
        );
        advance(&mut s);
        s.submit_ratings(&ratings([1, 2, 3, 4])).unwrap();
        advance(&mut s);
        assert_eq!(
            s.submit_ratings(&ratings([1, 2, 3, 4])).unwrap(),
            SessionState::TerminatedMaxIter
        );
        assert!(matches!(
            s.submit_ratings(&ratings([1, 2, 3, 4])),
            Err(SessionError::Terminated(_))
        ));
        assert_eq!(s.to_sequence().validate(), Ok(()));
    }

    #[test]
    fn reset_before_rating_keeps_unrated_record() {
        let mut s = LoopSession::new("a", "cube", SessionConfig::default());
        advance(&mut s);
        s.terminate(TerminationReason::Reset).unwrap();
        let seq = s.to_sequence();
        assert_eq!((seq.len(), seq.state), (1, SessionState::TerminatedReset));
        assert!(seq.validate().is_ok());
        assert!(s.terminate(TerminationReason::Satisfied).is_err());
    }

    #[test]
    fn wrong_state_and_arity() {
        let mut s = LoopSession::new("a", "cube", SessionConfig::default());
        assert!(matches!(
            s.submit_ratings(&ratings([1, 2, 3, 4])),
            Err(SessionError::WrongState { .. })
        ));
        advance(&mut s);
        assert!(matches!(
            s.submit_ratings(&ratings([1, 2, 3, 4])[..3]),
            Err(SessionError::Arity { .. })
        ));
    }
}
