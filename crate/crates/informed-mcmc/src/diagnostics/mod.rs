//! Convergence and quality metrics over chain traces: acceptance rate,
//! potential scale reduction factor, image-space reconstruction error,
//! per-dimension autocorrelation, and mode-visit counting against the
//! room scene's 24-fold symmetry.

use crate::error::{Error, Result};
use crate::image::ImageGrid;
use crate::model::GenerativeModel;
use crate::parallel;
use crate::proposal::kde::circular_mean;
use crate::renderers::room::{
    angles_from_basis, basis_from_angles, cube_rotations, RoomModel,
};
use crate::samplers::Trace;
use crate::space::{ParamSpace, ParamVector};

/// Fraction of accepted proposals over iterations `window` (1-based;
/// index 0 of a trace is the initial state, which no proposal produced).
pub fn acceptance_rate(trace: &Trace, window: std::ops::Range<usize>) -> Result<f64> {
    if window.is_empty() || window.start < 1 || window.end > trace.len() {
        return Err(Error::Config("empty or out-of-range acceptance window".into()));
    }
    let n = window.len();
    let accepted = trace.accepted[window].iter().filter(|&&a| a).count();
    Ok(accepted as f64 / n as f64)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_var(xs: &[f64], m: f64) -> f64 {
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Unwraps one dimension of pooled chains around the pooled circular mean
/// so variance computations are meaningful on angles.
fn unwrapped_series(
    space: &ParamSpace,
    chains: &[&[ParamVector]],
    dim: usize,
) -> Vec<Vec<f64>> {
    let spec = space.dim(dim);
    if !spec.wrapped {
        return chains.iter().map(|c| c.iter().map(|t| t[dim]).collect()).collect();
    }
    let mu = circular_mean(chains.iter().flat_map(|c| c.iter()).map(|t| t[dim]), space, dim);
    chains
        .iter()
        .map(|c| c.iter().map(|t| mu + space.wrap_delta_coord(dim, t[dim], mu)).collect())
        .collect()
}

/// Gelman-Rubin potential scale reduction factor for one dimension using
/// the second half of each chain. Returns +inf when every chain has zero
/// within-chain variance (degenerate stuck chains).
pub fn psrf(space: &ParamSpace, chains: &[Trace], dim: usize) -> Result<f64> {
    if chains.len() < 2 {
        return Err(Error::Config("psrf needs at least 2 chains".into()));
    }
    let len = chains.iter().map(|c| c.len()).min().unwrap_or(0);
    if len < 10 {
        return Err(Error::Config("psrf needs chains of length >= 10".into()));
    }
    let halves: Vec<&[ParamVector]> =
        chains.iter().map(|c| &c.thetas[len / 2..len]).collect();
    let series = unwrapped_series(space, &halves, dim);
    let n = series[0].len() as f64;
    let means: Vec<f64> = series.iter().map(|s| mean(s)).collect();
    let vars: Vec<f64> = series.iter().zip(&means).map(|(s, &m)| sample_var(s, m)).collect();
    let w = mean(&vars);
    if w == 0.0 {
        return Ok(f64::INFINITY);
    }
    let grand = mean(&means);
    let b = n * sample_var(&means, grand);
    Ok((((n - 1.0) / n * w + b / n) / w).sqrt())
}

/// Maximum PSRF over all dimensions.
pub fn psrf_max(space: &ParamSpace, chains: &[Trace]) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for d in 0..space.dims() {
        worst = worst.max(psrf(space, chains, d)?);
    }
    Ok(worst)
}

/// Normalized autocorrelation of one dimension of a trace, lags
/// `0..=max_lag`, deviations taken against the (circular) mean through
/// wrapped deltas. `degenerate` flags a zero-variance trace.
pub struct Autocorrelation {
    pub values: Vec<f64>,
    pub degenerate: bool,
}

pub fn autocorrelation(
    space: &ParamSpace,
    trace: &Trace,
    dim: usize,
    max_lag: usize,
) -> Result<Autocorrelation> {
    let n = trace.len();
    if n <= max_lag {
        return Err(Error::Config("trace shorter than max_lag".into()));
    }
    let series = &unwrapped_series(space, &[&trace.thetas], dim)[0];
    let m = mean(series);
    let dev: Vec<f64> = series.iter().map(|x| x - m).collect();
    let denom: f64 = dev.iter().map(|d| d * d).sum();
    // constant traces leave only accumulated rounding in the deviations
    let degenerate_floor = n as f64 * (m.abs().max(1.0) * 1e-14).powi(2);
    if denom <= degenerate_floor {
        let mut values = vec![0.0; max_lag + 1];
        values[0] = 1.0;
        return Ok(Autocorrelation { values, degenerate: true });
    }
    let mut values = Vec::with_capacity(max_lag + 1);
    for lag in 0..=max_lag {
        let num: f64 = (0..n - lag).map(|t| dev[t] * dev[t + lag]).sum();
        values.push(num / denom);
    }
    Ok(Autocorrelation { values, degenerate: false })
}

/// Running image-space reconstruction error: at each checkpoint, the RMSE
/// between the mean render over pooled post-burn-in samples (subsampled
/// by `stride` to bound render cost) and the noise-free render of the
/// generating parameters.
pub struct RmseCurve {
    pub checkpoints: Vec<usize>,
    pub values: Vec<f64>,
}

pub fn rmse_curve<M: GenerativeModel>(
    model: &M,
    chains: &[Trace],
    theta_star: &ParamVector,
    burn_in: usize,
    stride: usize,
    checkpoints: &[usize],
) -> Result<RmseCurve> {
    let reference = model.render(theta_star)?;
    let len = chains.iter().map(|c| c.len()).min().unwrap_or(0);
    let stride = stride.max(1);
    // pooled strided sample indices, per chain offset from burn_in
    let wanted: Vec<usize> = (burn_in..len).step_by(stride).collect();
    let renders: Vec<ImageGrid> = {
        let mut jobs = Vec::new();
        for c in chains {
            for &i in &wanted {
                jobs.push(&c.thetas[i]);
            }
        }
        let imgs: Vec<Result<ImageGrid>> =
            parallel::map_indexed(jobs.len(), |j| model.render(jobs[j]));
        imgs.into_iter().collect::<Result<Vec<_>>>()?
    };
    let per_chain = wanted.len();
    let mut curve = RmseCurve { checkpoints: Vec::new(), values: Vec::new() };
    let (w, h, ch) = model.image_shape();
    let mut acc = vec![0.0; w * h * ch];
    let mut used = 0usize;
    let mut upto = 0usize; // how many strided samples per chain are folded in
    for &t in checkpoints {
        let t = t.min(len.saturating_sub(1));
        if t < burn_in {
            curve.checkpoints.push(t);
            curve.values.push(f64::NAN);
            continue;
        }
        let avail = wanted.iter().take_while(|&&i| i <= t).count();
        while upto < avail {
            for (c, _) in chains.iter().enumerate() {
                let img = &renders[c * per_chain + upto];
                for (a, v) in acc.iter_mut().zip(&img.data) {
                    *a += v;
                }
                used += 1;
            }
            upto += 1;
        }
        if used == 0 {
            curve.checkpoints.push(t);
            curve.values.push(f64::NAN);
            continue;
        }
        let scale = 1.0 / used as f64;
        let mse: f64 = acc
            .iter()
            .zip(&reference.data)
            .map(|(a, r)| {
                let d = a * scale - r;
                d * d
            })
            .sum::<f64>()
            / acc.len() as f64;
        curve.checkpoints.push(t);
        curve.values.push(mse.sqrt());
    }
    Ok(curve)
}

/// The verified set of parameter vectors that render identically to a
/// reference pose (the room scene's 24 rotational symmetries).
pub struct ModeSet {
    pub modes: Vec<ParamVector>,
    space: ParamSpace,
}

impl ModeSet {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Index of the nearest mode under wrapped-Euclidean distance; exact
    /// ties resolve to the lower index.
    pub fn nearest(&self, theta: &ParamVector) -> usize {
        let mut best = 0usize;
        let mut best_d = self.space.distance(theta, &self.modes[0]);
        for (i, m) in self.modes.iter().enumerate().skip(1) {
            let d = self.space.distance(theta, m);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }
}

/// Enumerates the 24 camera poses that render the same image as
/// `theta_star`: position rotated, orientation conjugated and re-extracted
/// as Euler angles. Every mode is verified by rendering; any mismatch is
/// an internal error.
pub fn enumerate_room_modes(model: &RoomModel, theta_star: &ParamVector) -> Result<ModeSet> {
    let reference = model.render(theta_star)?;
    let pos = [theta_star[0], theta_star[1], theta_star[2]];
    let basis = basis_from_angles(theta_star[3], theta_star[4], theta_star[5]);
    let space = model.space().clone();
    let mut modes = Vec::with_capacity(24);
    for rot in cube_rotations() {
        let theta = if rot.is_identity() {
            theta_star.clone()
        } else {
            let p = rot.apply_vec(pos);
            let (yaw, pitch, roll) = angles_from_basis(&rot.apply_matrix(&basis));
            let mut t = ParamVector::new(vec![p[0], p[1], p[2], yaw, pitch, roll]);
            space.canonicalize(&mut t);
            t
        };
        let img = model.render(&theta)?;
        if img.data != reference.data {
            return Err(Error::Degenerate(
                "symmetry verification failed: a rotated pose rendered differently".into(),
            ));
        }
        modes.push(theta);
    }
    Ok(ModeSet { modes, space })
}

/// Number of distinct modes whose Voronoi cell contains at least one
/// pooled sample with iteration index <= t; non-decreasing in t.
pub fn modes_visited(chains: &[Trace], mode_set: &ModeSet, t: usize) -> usize {
    let mut seen = vec![false; mode_set.len()];
    for c in chains {
        for theta in c.thetas.iter().take(t + 1) {
            seen[mode_set.nearest(theta)] = true;
        }
    }
    seen.iter().filter(|&&s| s).count()
}

/// Mode-visit counts at a series of checkpoints (single pass).
pub fn modes_visited_curve(
    chains: &[Trace],
    mode_set: &ModeSet,
    checkpoints: &[usize],
) -> Vec<usize> {
    let mut seen = vec![false; mode_set.len()];
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = 0usize;
    let len = chains.iter().map(|c| c.len()).max().unwrap_or(0);
    // cells are assigned lazily per sample index across all chains
    for t in 0..len {
        while next < checkpoints.len() && checkpoints[next] < t {
            out.push(seen.iter().filter(|&&s| s).count());
            next += 1;
        }
        for c in chains {
            if t < c.len() {
                seen[mode_set.nearest(&c.thetas[t])] = true;
            }
        }
    }
    while next < checkpoints.len() {
        out.push(seen.iter().filter(|&&s| s).count());
        next += 1;
    }
    out
}
