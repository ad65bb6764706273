//! Discriminative feature extractors applied to observations to select
//! the learned global proposal.

pub mod hog;
pub mod rects;

pub use hog::HogExtractor;
pub use rects::{rect_to_feature, FittedRect, RectExtractor};

use crate::error::{Error, Result};
use crate::image::ImageGrid;

/// Maps an observation to a fixed-length real feature vector. Extractors
/// are pure and identified by a string id that encodes their parameters,
/// so a trained model file pins the exact extractor it was built with.
pub trait FeatureExtractor: Send + Sync {
    /// Output length for images of the configured size.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn extract(&self, image: &ImageGrid) -> Result<Vec<f64>>;

    /// Stable identifier, e.g. `hog:9:20:200:200` or `rects:100:100`.
    fn id(&self) -> String;
}

/// Reconstructs an extractor from its id string.
pub fn extractor_from_id(id: &str) -> Result<Box<dyn FeatureExtractor>> {
    let parts: Vec<&str> = id.split(':').collect();
    match parts.as_slice() {
        ["hog", bins, cell, w, h] => {
            let parse = |s: &str| {
                s.parse::<usize>().map_err(|_| Error::Config(format!("bad extractor id {id}")))
            };
            Ok(Box::new(HogExtractor::new(parse(bins)?, parse(cell)?, parse(w)?, parse(h)?)?))
        }
        ["rects", w, h] => {
            let parse = |s: &str| {
                s.parse::<usize>().map_err(|_| Error::Config(format!("bad extractor id {id}")))
            };
            Ok(Box::new(RectExtractor::new(parse(w)?, parse(h)?)))
        }
        _ => Err(Error::Config(format!("unknown extractor id {id}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extractor_ids_round_trip() {
        let hog = HogExtractor::new(9, 20, 200, 200).unwrap();
        let back = extractor_from_id(&hog.id()).unwrap();
        assert_eq!(back.len(), hog.len());
        let rects = RectExtractor::new(100, 100);
        let back = extractor_from_id(&rects.id()).unwrap();
        assert_eq!(back.len(), rects.len());
        assert!(extractor_from_id("nope").is_err());
    }
}
