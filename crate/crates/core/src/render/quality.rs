use serde::{Deserialize, Serialize};

use super::{render_detailed, ssim, Frame, RenderError, RenderImage, View};
use crate::mesh::TriangleMesh;

pub const QUALITY_RESOLUTION: usize = 256;

/// SSIM of a variant against the original in each of the five views.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityScore {
    pub per_view: [f64; 5],
    pub mean: f64,
}

impl QualityScore {
    pub fn from_views(per_view: [f64; 5]) -> Self {
        Self {
            per_view,
            mean: per_view.iter().sum::<f64>() / 5.0,
        }
    }

    /// Same score in every view.
    pub fn uniform(value: f64) -> Self {
        Self::from_views([value; 5])
    }
}

/// Cached renders of an original mesh; variants are drawn in the original's
/// frame so silhouettes stay comparable.
#[derive(Debug, Clone)]
pub struct QualityReference {
    frame: Frame,
    size: usize,
    views: Vec<RenderImage>,
}

impl QualityReference {
    pub fn new(original: &TriangleMesh) -> Result<Self, RenderError> {
        Self::with_size(original, QUALITY_RESOLUTION)
    }

    pub fn with_size(original: &TriangleMesh, size: usize) -> Result<Self, RenderError> {
        let frame = Frame::fit(original);
        let views = View::ALL
            .iter()
            .map(|&v| render_detailed(original, v, size, Some(&frame)).map(|o| o.image))
            .collect::<Result<_, _>>()?;
        Ok(Self { frame, size, views })
    }

    pub fn score(&self, variant: &TriangleMesh) -> Result<QualityScore, RenderError> {
        let mut per_view = [0.0; 5];
        for (k, &v) in View::ALL.iter().enumerate() {
            let img = render_detailed(variant, v, self.size, Some(&self.frame))?.image;
            per_view[k] = ssim(&self.views[k], &img)?;
        }
        Ok(QualityScore::from_views(per_view))
    }
}

/// Five-view mean SSIM at 256x256 between `original` and `variant`.
pub fn perceived_quality(original: &TriangleMesh, variant: &TriangleMesh) -> Result<QualityScore, RenderError> {
    QualityReference::new(original)?.score(variant)
}
