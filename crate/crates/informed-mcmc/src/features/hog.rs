//! Histogram of oriented gradients on single-channel images.
//!
//! Central differences with replicated borders, unsigned orientations
//! (mod pi) hard-binned into `orientations` bins, per-cell histograms of
//! gradient magnitudes, each cell L2-normalized with an epsilon guard,
//! cells concatenated row-major.

use crate::error::{Error, Result};
use crate::features::FeatureExtractor;
use crate::image::ImageGrid;
use std::f64::consts::PI;

const NORM_EPS: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct HogExtractor {
    orientations: usize,
    cell: usize,
    width: usize,
    height: usize,
}

impl HogExtractor {
    pub fn new(orientations: usize, cell: usize, width: usize, height: usize) -> Result<Self> {
        if orientations == 0 || cell == 0 {
            return Err(Error::Config("hog needs orientations > 0 and cell > 0".into()));
        }
        if width % cell != 0 || height % cell != 0 {
            return Err(Error::Config(format!(
                "hog cell {cell} must divide image size {width}x{height}"
            )));
        }
        Ok(HogExtractor { orientations, cell, width, height })
    }

    pub fn cells(&self) -> (usize, usize) {
        (self.width / self.cell, self.height / self.cell)
    }
}

impl FeatureExtractor for HogExtractor {
    fn len(&self) -> usize {
        let (cx, cy) = self.cells();
        cx * cy * self.orientations
    }

    fn extract(&self, image: &ImageGrid) -> Result<Vec<f64>> {
        if image.channels != 1 {
            return Err(Error::Config("hog expects a single-channel image".into()));
        }
        if image.width != self.width || image.height != self.height {
            return Err(Error::Config(format!(
                "hog configured for {}x{}, got {}x{}",
                self.width, self.height, image.width, image.height
            )));
        }
        let (w, h) = (self.width as i64, self.height as i64);
        let at = |x: i64, y: i64| {
            let x = x.clamp(0, w - 1) as usize;
            let y = y.clamp(0, h - 1) as usize;
            image.get(x, y, 0)
        };
        let (cx, _cy) = self.cells();
        let mut out = vec![0.0; self.len()];
        for y in 0..h {
            for x in 0..w {
                let gx = (at(x + 1, y) - at(x - 1, y)) / 2.0;
                let gy = (at(x, y + 1) - at(x, y - 1)) / 2.0;
                let mag = (gx * gx + gy * gy).sqrt();
                if mag == 0.0 {
                    continue;
                }
                // unsigned orientation in [0, pi)
                let mut ang = gy.atan2(gx);
                if ang < 0.0 {
                    ang += PI;
                }
                if ang >= PI {
                    ang -= PI;
                }
                let bin =
                    ((ang / PI * self.orientations as f64) as usize).min(self.orientations - 1);
                let cell_x = x as usize / self.cell;
                let cell_y = y as usize / self.cell;
                out[(cell_y * cx + cell_x) * self.orientations + bin] += mag;
            }
        }
        for hist in out.chunks_mut(self.orientations) {
            let norm = hist.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > NORM_EPS {
                for v in hist.iter_mut() {
                    *v /= norm;
                }
            } else {
                hist.fill(0.0);
            }
        }
        Ok(out)
    }

    fn id(&self) -> String {
        format!("hog:{}:{}:{}:{}", self.orientations, self.cell, self.width, self.height)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gray(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> ImageGrid {
        let mut img = ImageGrid::zeros(width, height, 1);
        for y in 0..height {
            for x in 0..width {
                img.set(x, y, 0, f(x, y));
            }
        }
        img
    }

    #[test]
    fn paper_scale_output_has_900_dims() {
        let hog = HogExtractor::new(9, 20, 200, 200).unwrap();
        assert_eq!(hog.len(), 900);
        let img = gray(200, 200, |x, y| ((x + y) % 7) as f64 / 7.0);
        assert_eq!(hog.extract(&img).unwrap().len(), 900);
    }

    #[test]
    fn constant_image_gives_zero_vector() {
        let hog = HogExtractor::new(9, 10, 40, 40).unwrap();
        let img = gray(40, 40, |_, _| 0.37);
        let f = hog.extract(&img).unwrap();
        assert!(f.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn vertical_step_edge_concentrates_in_horizontal_gradient_bin() {
        let hog = HogExtractor::new(9, 10, 40, 40).unwrap();
        // step at x = 20: gradient along x, orientation angle 0
        let img = gray(40, 40, |x, _| if x < 20 { 0.0 } else { 1.0 });
        let f = hog.extract(&img).unwrap();
        // the edge crosses the cells in column 1 (pixels 10..20 include
        // x = 19) and column 2
        for cell_y in 0..4 {
            for cell_x in [1usize, 2] {
                let hist = &f[(cell_y * 4 + cell_x) * 9..(cell_y * 4 + cell_x + 1) * 9];
                let max_bin = hist
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .unwrap()
                    .0;
                assert_eq!(max_bin, 0, "cell {cell_x},{cell_y}: {hist:?}");
            }
        }
    }

    #[test]
    fn brightness_shift_leaves_features_unchanged() {
        let hog = HogExtractor::new(9, 10, 40, 40).unwrap();
        let img = gray(40, 40, |x, y| 0.3 * (x as f64 / 40.0) + 0.2 * (y as f64 / 40.0).sin());
        let shifted = gray(40, 40, |x, y| {
            0.25 + 0.3 * (x as f64 / 40.0) + 0.2 * (y as f64 / 40.0).sin()
        });
        let a = hog.extract(&img).unwrap();
        let b = hog.extract(&shifted).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn one_cell_translation_permutes_cell_blocks() {
        let hog = HogExtractor::new(9, 10, 40, 40).unwrap();
        // a compactly supported blob so border rows and columns are
        // exactly zero in both images
        let blob = |x: usize, y: usize, ox: f64, oy: f64| {
            let dx = x as f64 - ox;
            let dy = y as f64 - oy;
            let d2 = dx * dx + dy * dy;
            if d2 <= 42.25 {
                (-d2 / 18.0).exp()
            } else {
                0.0
            }
        };
        let a = hog.extract(&gray(40, 40, |x, y| blob(x, y, 15.0, 15.0))).unwrap();
        let b = hog.extract(&gray(40, 40, |x, y| blob(x, y, 25.0, 15.0))).unwrap();
        // shifting by one cell in x moves cell (cx, cy) to (cx+1, cy)
        for cy in 0..4 {
            for cx in 0..3 {
                let src = &a[(cy * 4 + cx) * 9..(cy * 4 + cx + 1) * 9];
                let dst = &b[(cy * 4 + cx + 1) * 9..(cy * 4 + cx + 2) * 9];
                for (s, d) in src.iter().zip(dst) {
                    assert!((s - d).abs() < 1e-9, "cell {cx},{cy}");
                }
            }
        }
    }

    #[test]
    fn non_divisible_size_is_rejected() {
        assert!(HogExtractor::new(9, 20, 64, 64).is_err());
        let hog = HogExtractor::new(9, 16, 64, 64).unwrap();
        assert_eq!(hog.len(), 144);
    }
}
