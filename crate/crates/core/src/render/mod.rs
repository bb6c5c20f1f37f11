//! Orthographic software rendering and SSIM-based quality scoring.

mod quality;
mod raster;
mod ssim;

pub use quality::{perceived_quality, QualityReference, QualityScore, QUALITY_RESOLUTION};
pub use raster::{render, render_detailed, Frame, RenderOutput, View, AMBIENT, FILL};
pub use ssim::{ssim, SSIM_C1, SSIM_C2, SSIM_WINDOW};

use std::io::Write;

use thiserror::Error;

use crate::mesh::MeshError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RenderError {
    #[error("cannot render an empty mesh")]
    EmptyMesh,
    #[error("image size {0} is below the minimum of 16")]
    TooSmall(usize),
    #[error("image dimensions differ: {0:?} vs {1:?}")]
    DimensionMismatch((usize, usize), (usize, usize)),
    #[error("image smaller than the {0}x{0} SSIM window")]
    SmallerThanWindow(usize),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Row-major luminance image with values in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct RenderImage {
    width: usize,
    height: usize,
    luminance: Vec<f64>,
}

impl RenderImage {
    pub fn new(width: usize, height: usize, luminance: Vec<f64>) -> Self {
        assert_eq!(width * height, luminance.len(), "pixel count mismatch");
        assert!(
            luminance.iter().all(|v| (0.0..=1.0).contains(v)),
            "luminance outside [0, 1]"
        );
        Self {
            width,
            height,
            luminance,
        }
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn luminance(&self) -> &[f64] {
        &self.luminance
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.luminance[y * self.width + x]
    }

    pub fn flipped_horizontally(&self) -> Self {
        let mut out = self.luminance.clone();
        for row in out.chunks_mut(self.width) {
            row.reverse();
        }
        Self {
            luminance: out,
            ..*self
        }
    }

    /// Binary (P5) PGM dump, 8 bits per pixel.
    pub fn write_pgm<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "P5\n{} {}\n255\n", self.width, self.height)?;
        let bytes: Vec<u8> = self.luminance.iter().map(|v| (v * 255.0).round() as u8).collect();
        w.write_all(&bytes)
    }
}
