//! Evaluation sequences: the exported record of one session, one JSON object
//! per line.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::ReductionParams;
use crate::preference::{KernelConfig, Rating, SlotRole};
use crate::render::QualityScore;

pub const SCHEMA_VERSION: u32 = 1;
pub const VARIANTS_PER_ITERATION: usize = 4;

#[derive(Debug, Error)]
pub enum SequenceError {
    #[error("line {line}: schema version {found}, expected {SCHEMA_VERSION}")]
    SchemaMismatch { line: usize, found: u32 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Computing,
    AwaitingRatings,
    TerminatedSatisfied,
    TerminatedReset,
    TerminatedMaxIter,
}

impl SessionState {
    pub fn is_terminal(self) -> bool {
        matches!(
            self,
            SessionState::TerminatedSatisfied | SessionState::TerminatedReset | SessionState::TerminatedMaxIter
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantRecord {
    pub role: SlotRole,
    pub params: ReductionParams,
    pub face_count: usize,
    pub reduction_ratio: f64,
    /// Machine check: more than 1% of faces flipped.
    pub faulty: bool,
    pub quality: QualityScore,
    pub rating: Option<Rating>,
    /// Set when the rater skipped the variant with a 0.
    #[serde(default)]
    pub user_flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub index: usize,
    pub variants: Vec<VariantRecord>,
    /// Unix milliseconds when the variants became available; absent for
    /// simulated runs so they stay reproducible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp_ms: Option<u64>,
}

impl IterationRecord {
    pub fn ratings(&self) -> Option<Vec<Rating>> {
        self.variants.iter().map(|v| v.rating).collect()
    }

    pub fn is_rated(&self) -> bool {
        self.variants.iter().all(|v| v.rating.is_some())
    }

    /// Mean of the ratings, skips counted as 0.
    pub fn mean_rating(&self) -> Option<f64> {
        let r = self.ratings()?;
        Some(r.iter().map(|r| r.value() as f64).sum::<f64>() / r.len() as f64)
    }

    /// Population variance of the ratings.
    pub fn rating_variance(&self) -> Option<f64> {
        let r = self.ratings()?;
        let mean = self.mean_rating()?;
        Some(r.iter().map(|r| (r.value() as f64 - mean).powi(2)).sum::<f64>() / r.len() as f64)
    }

    pub fn exploit(&self) -> Option<&VariantRecord> {
        self.variants.iter().find(|v| v.role == SlotRole::Exploit)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSequence {
    pub schema_version: u32,
    pub session_id: String,
    pub mesh: String,
    pub seed: u64,
    pub kernel: KernelConfig,
    pub max_iterations: usize,
    pub state: SessionState,
    pub iterations: Vec<IterationRecord>,
    /// Iteration at which a simulated rater's satisfaction rule fired.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub satisfied_at: Option<usize>,
}

impl EvaluationSequence {
    pub fn len(&self) -> usize {
        self.iterations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterations.is_empty()
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(format!("schema version {}", self.schema_version));
        }
        if self.iterations.len() > self.max_iterations {
            return Err(format!(
                "{} iterations exceed the cap of {}",
                self.iterations.len(),
                self.max_iterations
            ));
        }
        let last = self.iterations.len();
        for (i, it) in self.iterations.iter().enumerate() {
            if it.index != i + 1 {
                return Err(format!("iteration {} has index {}", i + 1, it.index));
            }
            if it.variants.len() != VARIANTS_PER_ITERATION {
                return Err(format!("iteration {} has {} variants", it.index, it.variants.len()));
            }
            let rated = it.variants.iter().filter(|v| v.rating.is_some()).count();
            if rated != 0 && rated != VARIANTS_PER_ITERATION {
                return Err(format!("iteration {} is partially rated", it.index));
            }
            if rated == 0 && it.index != last {
                return Err(format!("iteration {} is unrated but not last", it.index));
            }
        }
        Ok(())
    }

    pub fn rated_iterations(&self) -> impl Iterator<Item = &IterationRecord> {
        self.iterations.iter().filter(|it| it.is_rated())
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        serde_json::to_writer(&mut out, self)?;
        out.write_all(b"\n")
    }
}

/// Parses one exported line, checking the schema version first.
pub fn parse_sequence_line(text: &str, line: usize) -> Result<EvaluationSequence, SequenceError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| SequenceError::Parse {
        line,
        message: e.to_string(),
    })?;
    let found = value
        .get("schema_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| SequenceError::Parse {
            line,
            message: "missing schema_version".into(),
        })?;
    if found != SCHEMA_VERSION as u64 {
        return Err(SequenceError::SchemaMismatch {
            line,
            found: found.min(u32::MAX as u64) as u32,
        });
    }
    let seq: EvaluationSequence = serde_json::from_value(value).map_err(|e| SequenceError::Parse {
        line,
        message: e.to_string(),
    })?;
    seq.validate()
        .map_err(|message| SequenceError::Invalid { line, message })?;
    Ok(seq)
}

/// Reads a JSON-lines export; blank lines are ignored.
pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<EvaluationSequence>, SequenceError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_sequence_line(&line, i + 1)?);
    }
    Ok(out)
}

pub fn write_jsonl<'a, W: Write>(
    sequences: impl IntoIterator<Item = &'a EvaluationSequence>,
    mut out: W,
) -> std::io::Result<()> {
    for s in sequences {
        s.write_jsonl(&mut out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn variant(rating: Option<u8>) -> VariantRecord {
        VariantRecord {
            role: SlotRole::SpaceFilling,
            params: ReductionParams::default(),
            face_count: 10,
            reduction_ratio: 0.5,
            faulty: false,
            quality: QualityScore::uniform(0.9),
            rating: rating.map(|r| Rating::new(r).unwrap()),
            user_flagged: rating == Some(0),
        }
    }

    fn sequence(ratings: &[Option<[u8; 4]>]) -> EvaluationSequence {
        EvaluationSequence {
            schema_version: SCHEMA_VERSION,
            session_id: "s".into(),
            mesh: "torus".into(),
            seed: 1,
            kernel: KernelConfig::default(),
            max_iterations: 11,
            state: SessionState::TerminatedReset,
            iterations: ratings
                .iter()
                .enumerate()
                .map(|(i, r)| IterationRecord {
                    index: i + 1,
                    variants: (0..4).map(|k| variant(r.map(|r| r[k]))).collect(),
                    timestamp_ms: None,
                })
                .collect(),
            satisfied_at: None,
        }
    }

    #[test]
    fn round_trip() {
        let s = sequence(&[Some([3, 4, 5, 1]), None]);
        let mut buf = Vec::new();
        write_jsonl([&s, &s], &mut buf).unwrap();
        let back = read_jsonl(buf.as_slice()).unwrap();
        assert_eq!(back, vec![s.clone(), s]);
    }

    #[test]
    fn wrong_schema_is_rejected() {
        let mut s = sequence(&[Some([3, 4, 5, 1])]);
        s.schema_version = 2;
        let line = serde_json::to_string(&s).unwrap();
        assert!(matches!(
            parse_sequence_line(&line, 7),
            Err(SequenceError::SchemaMismatch { line: 7, found: 2 })
        ));
    }

    #[test]
    fn unrated_middle_iteration_is_invalid() {
        assert!(sequence(&[None, Some([1, 2, 3, 4])]).validate().is_err());
        assert!(sequence(&[Some([1, 2, 3, 4]), None]).validate().is_ok());
    }

    #[test]
    fn rating_summaries() {
        let s = sequence(&[Some([0, 2, 4, 2])]);
        assert_eq!(s.iterations[0].mean_rating(), Some(2.0));
        assert_eq!(s.iterations[0].rating_variance(), Some(2.0));
    }

    #[test]
    fn empty_input_reads_nothing() {
        assert!(read_jsonl("\n\n".as_bytes()).unwrap().is_empty());
    }
}
