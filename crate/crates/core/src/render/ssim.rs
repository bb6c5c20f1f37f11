use super::{RenderError, RenderImage};

pub const SSIM_WINDOW: usize = 8;
pub const SSIM_C1: f64 = 0.01 * 0.01;
pub const SSIM_C2: f64 = 0.03 * 0.03;

/// Mean SSIM over all 8x8 windows (stride 1, uniform weights) on the [0, 1]
/// luminance range.
pub fn ssim(a: &RenderImage, b: &RenderImage) -> Result<f64, RenderError> {
    let (wa, ha) = (a.width(), a.height());
    if (wa, ha) != (b.width(), b.height()) {
        return Err(RenderError::DimensionMismatch((wa, ha), (b.width(), b.height())));
    }
    if wa < SSIM_WINDOW || ha < SSIM_WINDOW {
        return Err(RenderError::SmallerThanWindow(SSIM_WINDOW));
    }
    let x = a.luminance();
    let y = b.luminance();
    let sx = Integral::new(wa, ha, |i| x[i]);
    let sy = Integral::new(wa, ha, |i| y[i]);
    let sxx = Integral::new(wa, ha, |i| x[i] * x[i]);
    let syy = Integral::new(wa, ha, |i| y[i] * y[i]);
    let sxy = Integral::new(wa, ha, |i| x[i] * y[i]);

    let n = (SSIM_WINDOW * SSIM_WINDOW) as f64;
    let mut total = 0.0;
    let mut count = 0usize;
    for top in 0..=ha - SSIM_WINDOW {
        for left in 0..=wa - SSIM_WINDOW {
            let mx = sx.window(left, top) / n;
            let my = sy.window(left, top) / n;
            // clamp tiny negative variances from cancellation
            let vx = (sxx.window(left, top) / n - mx * mx).max(0.0);
            let vy = (syy.window(left, top) / n - my * my).max(0.0);
            let cxy = sxy.window(left, top) / n - mx * my;
            let num = (2.0 * mx * my + SSIM_C1) * (2.0 * cxy + SSIM_C2);
            let den = (mx * mx + my * my + SSIM_C1) * (vx + vy + SSIM_C2);
            total += num / den;
            count += 1;
        }
    }
    Ok(total / count as f64)
}

/// Summed-area table with a zero border row and column.
struct Integral {
    stride: usize,
    data: Vec<f64>,
}

impl Integral {
    fn new(w: usize, h: usize, value: impl Fn(usize) -> f64) -> Self {
        let stride = w + 1;
        let mut data = vec![0.0; stride * (h + 1)];
        for yy in 0..h {
            let mut row = 0.0;
            for xx in 0..w {
                row += value(yy * w + xx);
                data[(yy + 1) * stride + xx + 1] = data[yy * stride + xx + 1] + row;
            }
        }
        Self { stride, data }
    }

    fn window(&self, left: usize, top: usize) -> f64 {
        let (r, b) = (left + SSIM_WINDOW, top + SSIM_WINDOW);
        let s = self.stride;
        self.data[b * s + r] - self.data[top * s + r] - self.data[b * s + left] + self.data[top * s + left]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(seed: u64, w: usize, h: usize) -> RenderImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        RenderImage::new(w, h, (0..w * h).map(|_| rng.random::<f64>()).collect())
    }

    /// Direct per-window evaluation without summed-area tables.
    fn ssim_direct(a: &RenderImage, b: &RenderImage) -> f64 {
        let (w, h) = (a.width(), a.height());
        let n = (SSIM_WINDOW * SSIM_WINDOW) as f64;
        let mut total = 0.0;
        let mut count = 0.0;
        for top in 0..=h - SSIM_WINDOW {
            for left in 0..=w - SSIM_WINDOW {
                let px: Vec<(f64, f64)> = (0..SSIM_WINDOW * SSIM_WINDOW)
                    .map(|k| {
                        let (x, y) = (left + k % SSIM_WINDOW, top + k / SSIM_WINDOW);
                        (a.get(x, y), b.get(x, y))
                    })
                    .collect();
                let mx = px.iter().map(|p| p.0).sum::<f64>() / n;
                let my = px.iter().map(|p| p.1).sum::<f64>() / n;
                let vx = px.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>() / n;
                let vy = px.iter().map(|p| (p.1 - my).powi(2)).sum::<f64>() / n;
                let c = px.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / n;
                total += (2.0 * mx * my + SSIM_C1) * (2.0 * c + SSIM_C2)
                    / ((mx * mx + my * my + SSIM_C1) * (vx + vy + SSIM_C2));
                count += 1.0;
            }
        }
        total / count
    }

    #[test]
    fn identical_images_score_one() {
        let a = noise(1, 32, 24);
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_black_vs_white() {
        let zeros = RenderImage::filled(16, 16, 0.0);
        let ones = RenderImage::filled(16, 16, 1.0);
        let s = ssim(&zeros, &ones).unwrap();
        // means 0 and 1, zero variance: C1 / (1 + C1) in every window
        assert!((s - SSIM_C1 / (1.0 + SSIM_C1)).abs() < 1e-15);
        assert!(s < 0.01);
    }

    #[test]
    fn symmetric_in_arguments() {
        let (a, b) = (noise(2, 40, 40), noise(3, 40, 40));
        assert!((ssim(&a, &b).unwrap() - ssim(&b, &a).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn summed_area_tables_match_direct_windows() {
        let (a, b) = (noise(4, 20, 17), noise(5, 20, 17));
        assert!((ssim(&a, &b).unwrap() - ssim_direct(&a, &b)).abs() < 1e-10);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            ssim(&noise(1, 16, 16), &noise(1, 16, 17)),
            Err(RenderError::DimensionMismatch(..))
        ));
    }
}
