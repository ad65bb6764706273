//! Kernel density estimation with per-dimension Gaussian kernels and a
//! wrapped-Gaussian kernel (3-term wrap sum) on angular dimensions.

use crate::error::{Error, Result};
use crate::proposal::IndependenceProposal;
use crate::rng::Prng;
use crate::space::ParamSpace;
use rand::Rng;
use rand_distr::StandardNormal;

/// Absolute bandwidth floor as a fraction of the dimension's range.
const BANDWIDTH_FLOOR: f64 = 1e-3;
/// Scale on Silverman's rule; small bandwidths keep the density tight
/// around the stored points.
const SILVERMAN_SCALE: f64 = 0.5;

const LOG_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

pub(crate) fn logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// A fitted kernel density estimate over a (sub-)space.
#[derive(Debug, Clone, PartialEq)]
pub struct Kde {
    points: Vec<Vec<f64>>,
    bandwidth: Vec<f64>,
    space: ParamSpace,
}

/// Fits a KDE: stores the points and sets the per-dimension bandwidth to
/// `max(0.5 * Silverman, 1e-3 * range)`. Wrapped dimensions use circular
/// moments for the scale estimate.
pub fn kde_fit(points: Vec<Vec<f64>>, space: &ParamSpace) -> Result<Kde> {
    if points.is_empty() {
        return Err(Error::Config("kde needs at least one point".into()));
    }
    let d = space.dims();
    if points.iter().any(|p| p.len() != d) {
        return Err(Error::Config("kde point dimension mismatch".into()));
    }
    let m = points.len() as f64;
    // multivariate Silverman factor
    let factor = (4.0 / ((d as f64 + 2.0) * m)).powf(1.0 / (d as f64 + 4.0));
    let mut bandwidth = Vec::with_capacity(d);
    for j in 0..d {
        let spec = space.dim(j);
        let sigma = if spec.wrapped {
            circular_std(points.iter().map(|p| p[j]), space, j)
        } else {
            let mean = points.iter().map(|p| p[j]).sum::<f64>() / m;
            if points.len() < 2 {
                0.0
            } else {
                (points.iter().map(|p| (p[j] - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
            }
        };
        let h = (SILVERMAN_SCALE * sigma * factor).max(BANDWIDTH_FLOOR * spec.range());
        bandwidth.push(h);
    }
    Ok(Kde { points, bandwidth, space: space.clone() })
}

fn circular_std(values: impl Iterator<Item = f64> + Clone, space: &ParamSpace, dim: usize) -> f64 {
    let mean = circular_mean(values.clone(), space, dim);
    let n = values.clone().count() as f64;
    if n < 2.0 {
        return 0.0;
    }
    let ss: f64 =
        values.map(|v| space.wrap_delta_coord(dim, v, mean).powi(2)).sum();
    (ss / (n - 1.0)).sqrt()
}

/// Circular mean via the angular embedding of the interval.
pub fn circular_mean(
    values: impl Iterator<Item = f64>,
    space: &ParamSpace,
    dim: usize,
) -> f64 {
    let spec = space.dim(dim);
    let period = spec.range();
    let scale = std::f64::consts::TAU / period;
    let (mut s, mut c, mut n) = (0.0, 0.0, 0usize);
    for v in values {
        let a = (v - spec.lower) * scale;
        s += a.sin();
        c += a.cos();
        n += 1;
    }
    if n == 0 || (s == 0.0 && c == 0.0) {
        return spec.lower;
    }
    let ang = s.atan2(c).rem_euclid(std::f64::consts::TAU);
    space.canonicalize_coord(dim, spec.lower + ang / scale)
}

impl Kde {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn bandwidth(&self) -> &[f64] {
        &self.bandwidth
    }

    pub fn space(&self) -> &ParamSpace {
        &self.space
    }

    /// Rebuilds a KDE from stored parts (model file loading).
    pub fn from_parts(points: Vec<Vec<f64>>, bandwidth: Vec<f64>, space: ParamSpace) -> Result<Self> {
        if points.is_empty() || bandwidth.len() != space.dims() {
            return Err(Error::Config("invalid kde parts".into()));
        }
        if bandwidth.iter().any(|&h| !(h > 0.0)) {
            return Err(Error::Config("kde bandwidths must be positive".into()));
        }
        Ok(Kde { points, bandwidth, space })
    }
}

impl IndependenceProposal for Kde {
    fn dims(&self) -> usize {
        self.space.dims()
    }

    /// A uniformly chosen stored point plus per-dimension kernel noise;
    /// wrapped coordinates are re-canonicalized.
    fn sample(&self, rng: &mut Prng) -> Vec<f64> {
        let i = rng.gen_range(0..self.points.len());
        let mut out = self.points[i].clone();
        for (j, v) in out.iter_mut().enumerate() {
            let n: f64 = rng.sample(StandardNormal);
            *v += self.bandwidth[j] * n;
            *v = self.space.canonicalize_coord(j, *v);
        }
        out
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let d = self.space.dims();
        debug_assert_eq!(x.len(), d);
        let mut point_logs = Vec::with_capacity(self.points.len());
        for p in &self.points {
            let mut lp = 0.0;
            for j in 0..d {
                let h = self.bandwidth[j];
                let spec = self.space.dim(j);
                let delta = self.space.wrap_delta_coord(j, x[j], p[j]);
                let k = if spec.wrapped {
                    // 3-term wrapped Gaussian
                    let period = spec.range();
                    let mut sum = 0.0;
                    for s in [-period, 0.0, period] {
                        let z = (delta + s) / h;
                        sum += (-0.5 * z * z).exp();
                    }
                    sum / h
                } else {
                    let z = delta / h;
                    (-0.5 * z * z).exp() / h
                };
                lp += k.ln() - LOG_SQRT_2PI;
            }
            point_logs.push(lp);
        }
        logsumexp(&point_logs) - (self.points.len() as f64).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::space::{DimSpec, ParamSpace};
    use rand_distr::Distribution;
    use std::f64::consts::PI;

    fn line(lo: f64, hi: f64) -> ParamSpace {
        ParamSpace::single_block(vec![DimSpec::linear(lo, hi)]).unwrap()
    }

    #[test]
    fn single_point_kde_peaks_at_the_point() {
        let space = line(-10.0, 10.0);
        let kde = kde_fit(vec![vec![1.5]], &space).unwrap();
        assert!(kde.bandwidth()[0] > 0.0);
        let at_point = kde.log_density(&[1.5]);
        for x in [-3.0, 0.0, 1.0, 2.0, 5.0] {
            assert!(kde.log_density(&[x]) < at_point);
        }
        let mut rng = rng_from_seed(2);
        let s = kde.sample(&mut rng);
        assert!((s[0] - 1.5).abs() < 10.0 * kde.bandwidth()[0]);
    }

    #[test]
    fn one_dimensional_density_integrates_to_one() {
        let space = line(-10.0, 10.0);
        let mut rng = rng_from_seed(77);
        let normal = rand_distr::Normal::new(0.0, 1.0).unwrap();
        let pts: Vec<Vec<f64>> = (0..1000).map(|_| vec![normal.sample(&mut rng)]).collect();
        let kde = kde_fit(pts, &space).unwrap();
        // trapezoid over [-6, 6]
        let n = 24_000usize;
        let (a, b) = (-6.0, 6.0);
        let hstep = (b - a) / n as f64;
        let mut integral = 0.0;
        for i in 0..=n {
            let x = a + i as f64 * hstep;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            integral += w * kde.log_density(&[x]).exp();
        }
        integral *= hstep;
        assert!((integral - 1.0).abs() < 1e-3, "integral {integral}");
    }

    #[test]
    fn two_dimensional_density_integrates_to_one() {
        let space = ParamSpace::single_block(vec![
            DimSpec::linear(-10.0, 10.0),
            DimSpec::linear(-10.0, 10.0),
        ])
        .unwrap();
        let mut rng = rng_from_seed(78);
        let normal = rand_distr::Normal::new(0.0, 0.8).unwrap();
        let pts: Vec<Vec<f64>> =
            (0..200).map(|_| vec![normal.sample(&mut rng), normal.sample(&mut rng)]).collect();
        let kde = kde_fit(pts, &space).unwrap();
        let n = 240usize;
        let (a, b) = (-5.0, 5.0);
        let hstep = (b - a) / n as f64;
        let mut integral = 0.0;
        for i in 0..=n {
            for j in 0..=n {
                let x = a + i as f64 * hstep;
                let y = a + j as f64 * hstep;
                let wi = if i == 0 || i == n { 0.5 } else { 1.0 };
                let wj = if j == 0 || j == n { 0.5 } else { 1.0 };
                integral += wi * wj * kde.log_density(&[x, y]).exp();
            }
        }
        integral *= hstep * hstep;
        assert!((integral - 1.0).abs() < 1e-3, "integral {integral}");
    }

    #[test]
    fn wrapped_dimension_has_equal_density_at_both_edges() {
        let space = ParamSpace::single_block(vec![DimSpec::wrapped(-PI, PI)]).unwrap();
        // symmetric about the wrap point +-pi
        let pts = vec![vec![PI - 0.3], vec![-PI + 0.3], vec![PI - 0.1], vec![-PI + 0.1]];
        let kde = kde_fit(pts, &space).unwrap();
        let lo = kde.log_density(&[-PI]);
        let hi = kde.log_density(&[PI]);
        assert!((lo - hi).abs() < 1e-6, "lo {lo} hi {hi}");
        // and the density mass sits at the wrap, not the interval middle
        assert!(lo > kde.log_density(&[0.0]));
    }

    #[test]
    fn sample_mean_matches_point_mean() {
        let space = line(-10.0, 10.0);
        let pts: Vec<Vec<f64>> = vec![vec![-2.0], vec![0.5], vec![1.0], vec![4.5]];
        let point_mean = 1.0;
        let kde = kde_fit(pts, &space).unwrap();
        let mut rng = rng_from_seed(5);
        let n = 100_000usize;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let s = kde.sample(&mut rng)[0];
            sum += s;
            sumsq += s * s;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        let se = (var / n as f64).sqrt();
        assert!((mean - point_mean).abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn sampling_respects_wrapping() {
        let space = ParamSpace::single_block(vec![DimSpec::wrapped(-PI / 4.0, PI / 4.0)]).unwrap();
        let kde = kde_fit(vec![vec![PI / 4.0 - 1e-4]], &space).unwrap();
        let mut rng = rng_from_seed(6);
        for _ in 0..200 {
            let s = kde.sample(&mut rng)[0];
            assert!(s >= -PI / 4.0 && s < PI / 4.0);
        }
    }

    #[test]
    fn reflection_symmetry_of_symmetric_point_set() {
        let space = line(-10.0, 10.0);
        let kde = kde_fit(vec![vec![-1.0], vec![1.0]], &space).unwrap();
        for x in [0.2, 0.7, 1.3, 2.5] {
            let a = kde.log_density(&[x]);
            let b = kde.log_density(&[-x]);
            assert!((a - b).abs() < 1e-12);
        }
    }
}
