//! The generative-model interface and the posterior it induces.

use crate::error::{Error, Result};
use crate::image::ImageGrid;
use crate::rng::Prng;
use crate::space::{ParamSpace, ParamVector};
use std::sync::atomic::{AtomicU64, Ordering};

/// A forward model: deterministic render function, prior, and Gaussian
/// pixel noise level. Implementations must be re-entrant (no mutable state
/// in `render`) so chains can share one instance.
pub trait GenerativeModel: Sync {
    fn space(&self) -> &ParamSpace;

    /// Observation noise standard deviation (per pixel, per channel).
    fn noise_sigma(&self) -> f64;

    /// Renders `theta`. Must be a pure function: same `theta`, same image,
    /// bit-exact. Errors only on parameters outside the render domain.
    fn render(&self, theta: &ParamVector) -> Result<ImageGrid>;

    /// Log prior density. Returns `-inf` outside the support; the support
    /// is contained in the render domain.
    fn prior_logpdf(&self, theta: &ParamVector) -> f64;

    /// Draws from the prior.
    fn prior_sample(&self, rng: &mut Prng) -> ParamVector;

    /// Output image shape as (width, height, channels).
    fn image_shape(&self) -> (usize, usize, usize);
}

/// Unnormalized log posterior: Gaussian log likelihood (normalizer
/// dropped; it is constant for a given observation) plus the log prior.
/// Out-of-support `theta` yields `-inf` without invoking the renderer.
pub fn log_posterior<M: GenerativeModel>(
    model: &M,
    theta: &ParamVector,
    obs: &ImageGrid,
) -> Result<f64> {
    let (w, h, c) = model.image_shape();
    if obs.width != w || obs.height != h || obs.channels != c {
        return Err(Error::Config(format!(
            "observation shape {}x{}x{} does not match model output {}x{}x{}",
            obs.width, obs.height, obs.channels, w, h, c
        )));
    }
    let lp = model.prior_logpdf(theta);
    if lp == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let rendered = model.render(theta)?;
    let sigma = model.noise_sigma();
    let ss: f64 = rendered
        .data
        .iter()
        .zip(&obs.data)
        .map(|(r, o)| {
            let d = r - o;
            d * d
        })
        .sum();
    Ok(-ss / (2.0 * sigma * sigma) + lp)
}

/// A target density that samplers can draw from. Implemented by
/// [`Posterior`] for image models and by the discrete toys in
/// [`crate::toy`].
pub trait Target: Sync {
    fn space(&self) -> &ParamSpace;

    /// Unnormalized log density; `-inf` outside the support.
    fn log_density(&self, theta: &ParamVector) -> f64;
}

/// The posterior of a generative model given one observation. Counts
/// renders so the render-per-step contract can be asserted.
pub struct Posterior<'a, M: GenerativeModel> {
    model: &'a M,
    obs: &'a ImageGrid,
    renders: AtomicU64,
}

impl<'a, M: GenerativeModel> Posterior<'a, M> {
    /// Fails fast on an observation whose shape the model cannot produce.
    pub fn new(model: &'a M, obs: &'a ImageGrid) -> Result<Self> {
        let (w, h, c) = model.image_shape();
        if obs.width != w || obs.height != h || obs.channels != c {
            return Err(Error::Config("observation shape mismatch".into()));
        }
        Ok(Posterior { model, obs, renders: AtomicU64::new(0) })
    }

    pub fn model(&self) -> &M {
        self.model
    }

    pub fn observation(&self) -> &ImageGrid {
        self.obs
    }

    /// Number of renders performed through this posterior so far.
    pub fn render_count(&self) -> u64 {
        self.renders.load(Ordering::Relaxed)
    }
}

impl<M: GenerativeModel> Target for Posterior<'_, M> {
    fn space(&self) -> &ParamSpace {
        self.model.space()
    }

    fn log_density(&self, theta: &ParamVector) -> f64 {
        let lp = self.model.prior_logpdf(theta);
        if lp == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        self.renders.fetch_add(1, Ordering::Relaxed);
        log_posterior(self.model, theta, self.obs).unwrap_or(f64::NEG_INFINITY)
    }
}
