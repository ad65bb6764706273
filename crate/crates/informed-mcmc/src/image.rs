//! Float image grids: the observation type shared by renderers, the
//! likelihood, and the feature extractors.

use crate::error::{Error, Result};

/// A `width x height x channels` grid of real intensities, row-major with
/// interleaved channels. Renderers produce values in `[0, 1]`; observations
/// carry additive Gaussian noise and may exceed that range slightly.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl ImageGrid {
    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        ImageGrid { width, height, channels, data: vec![0.0; width * height * channels] }
    }

    pub fn from_data(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height * channels {
            return Err(Error::Config(format!(
                "image data length {} does not match {}x{}x{}",
                data.len(),
                width,
                height,
                channels
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::Degenerate("image contains non-finite values".into()));
        }
        Ok(ImageGrid { width, height, channels, data })
    }

    #[inline]
    pub fn idx(&self, x: usize, y: usize, c: usize) -> usize {
        (y * self.width + x) * self.channels + c
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[self.idx(x, y, c)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f64) {
        let i = self.idx(x, y, c);
        self.data[i] = v;
    }

    pub fn same_shape(&self, other: &ImageGrid) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.channels == other.channels
    }

    /// Root-mean-square pixel difference between two same-shape grids.
    pub fn rmse(&self, other: &ImageGrid) -> Result<f64> {
        if !self.same_shape(other) {
            return Err(Error::Config("image shape mismatch".into()));
        }
        let n = self.data.len() as f64;
        let ss: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| {
                let d = a - b;
                d * d
            })
            .sum();
        Ok((ss / n).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_data_validates_shape_and_finiteness() {
        assert!(ImageGrid::from_data(2, 2, 1, vec![0.0; 3]).is_err());
        assert!(ImageGrid::from_data(2, 2, 1, vec![0.0, 0.1, f64::NAN, 0.3]).is_err());
        let g = ImageGrid::from_data(2, 2, 1, vec![0.0, 0.25, 0.5, 1.0]).unwrap();
        assert_eq!(g.get(1, 1, 0), 1.0);
    }

    #[test]
    fn rmse_of_identical_grids_is_zero() {
        let g = ImageGrid::from_data(2, 1, 1, vec![0.3, 0.7]).unwrap();
        assert_eq!(g.rmse(&g).unwrap(), 0.0);
        let h = ImageGrid::from_data(1, 2, 1, vec![0.3, 0.7]).unwrap();
        assert!(g.rmse(&h).is_err());
    }
}
