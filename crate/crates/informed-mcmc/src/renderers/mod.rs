//! Forward graphics models: the cubical-room camera scene and the
//! occluding-tiles scene.

pub mod room;
pub mod tiles;

pub use room::RoomModel;
pub use tiles::TilesModel;

use crate::error::Result;
use crate::image::ImageGrid;
use crate::model::GenerativeModel;
use crate::rng::Prng;
use crate::space::ParamVector;
use rand::Rng;
use rand_distr::StandardNormal;

/// Renders `theta` and adds i.i.d. Gaussian pixel noise at the model's
/// noise level. With `noise_sigma == 0` the render is returned unchanged.
pub fn make_observation<M: GenerativeModel>(
    model: &M,
    theta: &ParamVector,
    rng: &mut Prng,
) -> Result<ImageGrid> {
    let mut img = model.render(theta)?;
    let sigma = model.noise_sigma();
    if sigma > 0.0 {
        for v in img.data.iter_mut() {
            let n: f64 = rng.sample(StandardNormal);
            *v += sigma * n;
        }
    }
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn observation_noise_has_the_requested_scale() {
        let model = RoomModel::new(200, 200, 0.02);
        let theta = ParamVector::new(vec![0.2, -0.1, 0.3, 0.5, 0.2, -0.4]);
        let clean = model.render(&theta).unwrap();
        let mut rng = rng_from_seed(11);
        let obs = make_observation(&model, &theta, &mut rng).unwrap();
        let n = clean.data.len() as f64;
        let mean: f64 =
            clean.data.iter().zip(&obs.data).map(|(c, o)| o - c).sum::<f64>() / n;
        let var: f64 = clean
            .data
            .iter()
            .zip(&obs.data)
            .map(|(c, o)| {
                let d = o - c - mean;
                d * d
            })
            .sum::<f64>()
            / (n - 1.0);
        let std = var.sqrt();
        assert!((std - 0.02).abs() < 0.0005, "std {std}");
    }

    #[test]
    fn zero_sigma_returns_the_render() {
        let model = RoomModel::new(32, 32, 0.0);
        let theta = ParamVector::new(vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let clean = model.render(&theta).unwrap();
        let mut rng = rng_from_seed(1);
        let obs = make_observation(&model, &theta, &mut rng).unwrap();
        assert_eq!(clean.data, obs.data);
    }

    #[test]
    fn fixed_seed_reproduces_the_observation() {
        let model = RoomModel::new(32, 32, 0.02);
        let theta = ParamVector::new(vec![0.1, 0.2, -0.3, 1.0, 0.4, 0.0]);
        let a = make_observation(&model, &theta, &mut rng_from_seed(5)).unwrap();
        let b = make_observation(&model, &theta, &mut rng_from_seed(5)).unwrap();
        assert_eq!(a.data, b.data);
    }
}
