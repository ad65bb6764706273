//! Occluding-tiles renderer: six quadratic tiles with fixed, distinct
//! colors, painted back-to-front by depth and blurred with a small
//! isotropic Gaussian. Each tile contributes a block of 4 parameters
//! `(x, y, z, phi)`; depth only controls apparent size and paint order.

use crate::error::{Error, Result};
use crate::image::ImageGrid;
use crate::model::GenerativeModel;
use crate::parallel;
use crate::rng::Prng;
use crate::space::{DimSpec, ParamSpace, ParamVector};
use std::f64::consts::PI;

pub const TILE_COUNT: usize = 6;
pub const TILE_DIMS: usize = 4;

/// Fixed tile colors; tile identity never changes, which avoids label
/// switching during inference.
pub const PALETTE: [[f64; 3]; TILE_COUNT] = [
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
    [1.0, 1.0, 0.0],
    [1.0, 0.0, 1.0],
    [0.0, 1.0, 1.0],
];

/// Occluding-tiles scene: `theta` has 24 dimensions, 4 per tile.
pub struct TilesModel {
    width: usize,
    height: usize,
    noise_sigma: f64,
    blur_sigma: f64,
    side_scale: f64,
    space: ParamSpace,
}

impl TilesModel {
    /// Default geometry: base side scale 0.3 * min(width, height) pixels
    /// and a 1.5 px Gaussian blur truncated at 3 sigma.
    pub fn new(width: usize, height: usize, noise_sigma: f64) -> Self {
        Self::with_blur(width, height, noise_sigma, 1.5)
    }

    pub fn with_blur(width: usize, height: usize, noise_sigma: f64, blur_sigma: f64) -> Self {
        let mut dims = Vec::with_capacity(TILE_COUNT * TILE_DIMS);
        let mut blocks = Vec::with_capacity(TILE_COUNT);
        for t in 0..TILE_COUNT {
            dims.push(DimSpec::linear(-1.0, 1.0)); // x
            dims.push(DimSpec::linear(-1.0, 1.0)); // y
            dims.push(DimSpec::linear(-1.0, 1.0)); // z
            dims.push(DimSpec::wrapped(-PI / 4.0, PI / 4.0)); // phi
            blocks.push((TILE_DIMS * t..TILE_DIMS * (t + 1)).collect());
        }
        let space = ParamSpace::new(dims, blocks).unwrap();
        let side_scale = 0.3 * width.min(height) as f64;
        TilesModel { width, height, noise_sigma, blur_sigma, side_scale, space }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn blur_sigma(&self) -> f64 {
        self.blur_sigma
    }

    /// Apparent side length in pixels: strictly decreasing in depth, with
    /// s(-1) / s(+1) = 2 over the prior range.
    pub fn tile_side_px(&self, z: f64) -> f64 {
        self.side_scale * 2.0 / (z + 3.0)
    }

    /// Largest apparent side over the prior box; used to normalize
    /// rectangle features.
    pub fn max_side_px(&self) -> f64 {
        self.tile_side_px(-1.0)
    }

    fn paint(&self, theta: &ParamVector) -> ImageGrid {
        let (w, h) = (self.width, self.height);
        let mut img = ImageGrid::zeros(w, h, 3);
        // back-to-front: larger z (farther, smaller) first; equal depths
        // resolved so the lower tile index lands on top
        let mut order: Vec<usize> = (0..TILE_COUNT).collect();
        order.sort_by(|&a, &b| {
            let za = theta[TILE_DIMS * a + 2];
            let zb = theta[TILE_DIMS * b + 2];
            zb.total_cmp(&za).then(b.cmp(&a))
        });
        for &t in &order {
            let x = theta[TILE_DIMS * t];
            let y = theta[TILE_DIMS * t + 1];
            let z = theta[TILE_DIMS * t + 2];
            let phi = theta[TILE_DIMS * t + 3];
            let cx = (x + 1.0) / 2.0 * w as f64;
            let cy = (y + 1.0) / 2.0 * h as f64;
            let half = self.tile_side_px(z) / 2.0;
            let (s, c) = phi.sin_cos();
            let reach = half * (c.abs() + s.abs());
            let x0 = ((cx - reach).floor().max(0.0)) as usize;
            let x1 = ((cx + reach).ceil().min(w as f64 - 1.0)) as usize;
            let y0 = ((cy - reach).floor().max(0.0)) as usize;
            let y1 = ((cy + reach).ceil().min(h as f64 - 1.0)) as usize;
            if x0 > x1 || y0 > y1 || cx + reach < 0.0 || cy + reach < 0.0 {
                continue;
            }
            let color = PALETTE[t];
            for py in y0..=y1 {
                let dy = py as f64 + 0.5 - cy;
                for px in x0..=x1 {
                    let dx = px as f64 + 0.5 - cx;
                    // rotate into the tile frame
                    let u = c * dx + s * dy;
                    let v = -s * dx + c * dy;
                    if u.abs() <= half && v.abs() <= half {
                        for ch in 0..3 {
                            img.set(px, py, ch, color[ch]);
                        }
                    }
                }
            }
        }
        img
    }

    fn blur(&self, img: &ImageGrid) -> ImageGrid {
        if self.blur_sigma <= 0.0 {
            return img.clone();
        }
        let radius = (3.0 * self.blur_sigma).floor() as i64;
        let mut kernel = Vec::with_capacity((2 * radius + 1) as usize);
        for k in -radius..=radius {
            let x = k as f64 / self.blur_sigma;
            kernel.push((-0.5 * x * x).exp());
        }
        let norm: f64 = kernel.iter().sum();
        for k in kernel.iter_mut() {
            *k /= norm;
        }

        let (w, h, c) = (self.width as i64, self.height as i64, 3usize);
        // horizontal pass, replicate borders
        let mut tmp = ImageGrid::zeros(self.width, self.height, c);
        parallel::for_each_row(&mut tmp.data, self.width * c, |y, row| {
            for x in 0..w {
                for ch in 0..c {
                    let mut acc = 0.0;
                    for (ki, kv) in kernel.iter().enumerate() {
                        let sx = (x + ki as i64 - radius).clamp(0, w - 1);
                        acc += kv * img.get(sx as usize, y, ch);
                    }
                    row[(x as usize) * c + ch] = acc;
                }
            }
        });
        let mut out = ImageGrid::zeros(self.width, self.height, c);
        parallel::for_each_row(&mut out.data, self.width * c, |y, row| {
            for x in 0..w as usize {
                for ch in 0..c {
                    let mut acc = 0.0;
                    for (ki, kv) in kernel.iter().enumerate() {
                        let sy = (y as i64 + ki as i64 - radius).clamp(0, h - 1);
                        acc += kv * tmp.get(x, sy as usize, ch);
                    }
                    row[x * c + ch] = acc;
                }
            }
        });
        out
    }
}

impl GenerativeModel for TilesModel {
    fn space(&self) -> &ParamSpace {
        &self.space
    }

    fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    fn render(&self, theta: &ParamVector) -> Result<ImageGrid> {
        if theta.len() != TILE_COUNT * TILE_DIMS {
            return Err(Error::Config(format!(
                "tiles expect {} parameters, got {}",
                TILE_COUNT * TILE_DIMS,
                theta.len()
            )));
        }
        Ok(self.blur(&self.paint(theta)))
    }

    fn prior_logpdf(&self, theta: &ParamVector) -> f64 {
        if self.space.contains(theta) {
            -self.space.log_volume()
        } else {
            f64::NEG_INFINITY
        }
    }

    fn prior_sample(&self, rng: &mut Prng) -> ParamVector {
        self.space.sample_uniform(rng)
    }

    fn image_shape(&self) -> (usize, usize, usize) {
        (self.width, self.height, 3)
    }
}

/// Convenience constructor for one tile's parameter slice.
pub fn tile_params(x: f64, y: f64, z: f64, phi: f64) -> [f64; 4] {
    [x, y, z, phi]
}

/// Assembles a full 24-dim vector from per-tile parameter quadruples.
pub fn theta_from_tiles(tiles: &[[f64; 4]; TILE_COUNT]) -> ParamVector {
    let mut v = Vec::with_capacity(TILE_COUNT * TILE_DIMS);
    for t in tiles {
        v.extend_from_slice(t);
    }
    ParamVector::new(v)
}
