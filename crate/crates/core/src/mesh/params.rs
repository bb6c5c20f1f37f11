use serde::{Deserialize, Serialize};

use super::MeshError;

pub const PARAM_COUNT: usize = 9;

/// Upper bound on the fraction of faces a single decimation may remove.
const MAX_REMOVAL: f64 = 0.99;

/// Named slots of the control vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamSlot {
    TargetRatio = 0,
    BoundaryWeight = 1,
    FeatureAngle = 2,
    PlacementPolicyBlend = 3,
    NormalFlipPenalty = 4,
    AspectRatioPenalty = 5,
    EdgeLengthRegularizer = 6,
    QuadricAreaWeighting = 7,
    SeamPreservationWeight = 8,
}

impl ParamSlot {
    pub const ALL: [ParamSlot; PARAM_COUNT] = [
        ParamSlot::TargetRatio,
        ParamSlot::BoundaryWeight,
        ParamSlot::FeatureAngle,
        ParamSlot::PlacementPolicyBlend,
        ParamSlot::NormalFlipPenalty,
        ParamSlot::AspectRatioPenalty,
        ParamSlot::EdgeLengthRegularizer,
        ParamSlot::QuadricAreaWeighting,
        ParamSlot::SeamPreservationWeight,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamSlot::TargetRatio => "target_ratio",
            ParamSlot::BoundaryWeight => "boundary_weight",
            ParamSlot::FeatureAngle => "feature_angle",
            ParamSlot::PlacementPolicyBlend => "placement_policy_blend",
            ParamSlot::NormalFlipPenalty => "normal_flip_penalty",
            ParamSlot::AspectRatioPenalty => "aspect_ratio_penalty",
            ParamSlot::EdgeLengthRegularizer => "edge_length_regularizer",
            ParamSlot::QuadricAreaWeighting => "quadric_area_weighting",
            ParamSlot::SeamPreservationWeight => "seam_preservation_weight",
        }
    }
}

/// A point in the unit hypercube of decimation controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ReductionParams([f64; PARAM_COUNT]);

impl Default for ReductionParams {
    fn default() -> Self {
        Self([0.5; PARAM_COUNT])
    }
}

impl ReductionParams {
    pub fn new(values: [f64; PARAM_COUNT]) -> Result<Self, MeshError> {
        if let Some(i) = values.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(MeshError::Parse {
                line: 0,
                message: format!("parameter {} = {} outside [0, 1]", ParamSlot::ALL[i].name(), values[i]),
            });
        }
        Ok(Self(values))
    }

    /// Clamps every component into [0, 1]; NaN maps to 0.5.
    pub fn clamped(values: [f64; PARAM_COUNT]) -> Self {
        Self(values.map(|v| if v.is_nan() { 0.5 } else { v.clamp(0.0, 1.0) }))
    }

    pub fn values(&self) -> &[f64; PARAM_COUNT] {
        &self.0
    }

    pub fn get(&self, slot: ParamSlot) -> f64 {
        self.0[slot as usize]
    }

    pub fn with(mut self, slot: ParamSlot, value: f64) -> Self {
        self.0[slot as usize] = value.clamp(0.0, 1.0);
        self
    }

    pub fn target_ratio(&self) -> f64 {
        self.get(ParamSlot::TargetRatio)
    }

    /// Fraction of faces to remove. Monotone in `target_ratio`, identity below the cap.
    pub fn target_fraction(&self) -> f64 {
        self.target_ratio().min(MAX_REMOVAL)
    }

    /// The slot value that requests removal of `fraction` of the faces.
    pub fn target_ratio_for(fraction: f64) -> f64 {
        fraction.clamp(0.0, MAX_REMOVAL)
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn inf_distance(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl TryFrom<Vec<f64>> for ReductionParams {
    type Error = MeshError;

    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        let arr: [f64; PARAM_COUNT] = v.try_into().map_err(|v: Vec<f64>| MeshError::Parse {
            line: 0,
            message: format!("expected {PARAM_COUNT} parameters, got {}", v.len()),
        })?;
        Self::new(arr)
    }
}

impl From<ReductionParams> for Vec<f64> {
    fn from(p: ReductionParams) -> Self {
        p.0.to_vec()
    }
}

impl From<[f64; PARAM_COUNT]> for ReductionParams {
    fn from(v: [f64; PARAM_COUNT]) -> Self {
        Self::clamped(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range() {
        let mut v = [0.5; 9];
        v[4] = 1.01;
        assert!(ReductionParams::new(v).is_err());
        v[4] = -0.0;
        assert!(ReductionParams::new(v).is_ok());
    }

    #[test]
    fn serde_requires_nine_components() {
        let p: ReductionParams = serde_json::from_str("[0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,1]").unwrap();
        assert_eq!(p.get(ParamSlot::SeamPreservationWeight), 1.0);
        assert!(serde_json::from_str::<ReductionParams>("[0,0.1]").is_err());
        assert!(serde_json::from_str::<ReductionParams>("[0,0,0,0,0,0,0,0,2]").is_err());
    }

    #[test]
    fn target_fraction_is_monotone() {
        let mut last = -1.0;
        for i in 0..=100 {
            let f = ReductionParams::default()
                .with(ParamSlot::TargetRatio, i as f64 / 100.0)
                .target_fraction();
            assert!(f >= last);
            last = f;
        }
        assert_eq!(
            ReductionParams::default()
                .with(ParamSlot::TargetRatio, 0.0)
                .target_fraction(),
            0.0
        );
    }
}
