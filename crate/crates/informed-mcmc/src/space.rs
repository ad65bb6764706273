//! Parameter spaces: per-dimension bounds, wrap-around (angular)
//! dimensions, and block structure.

use crate::error::{Error, Result};
use crate::rng::Prng;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Bounds and topology of one latent dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimSpec {
    pub lower: f64,
    pub upper: f64,
    /// Wrapped dimensions represent angles; the interval length is the
    /// wrap period and values are canonicalized into `[lower, upper)`.
    pub wrapped: bool,
}

impl DimSpec {
    pub fn linear(lower: f64, upper: f64) -> Self {
        DimSpec { lower, upper, wrapped: false }
    }

    pub fn wrapped(lower: f64, upper: f64) -> Self {
        DimSpec { lower, upper, wrapped: true }
    }

    pub fn range(&self) -> f64 {
        self.upper - self.lower
    }
}

/// A point in latent space. Wrapped coordinates are kept canonicalized by
/// the operations that construct them (see [`ParamSpace::canonicalize`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub values: Vec<f64>,
}

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Self {
        ParamVector { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

impl std::ops::Index<usize> for ParamVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(values: Vec<f64>) -> Self {
        ParamVector { values }
    }
}

/// A latent space: dimension descriptors plus a partition of the
/// dimension indices into ordered blocks (used by block-wise samplers).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpace {
    dims: Vec<DimSpec>,
    blocks: Vec<Vec<usize>>,
}

impl ParamSpace {
    /// Builds a space, validating bounds and that `blocks` partitions
    /// `{0..dims}` exactly.
    pub fn new(dims: Vec<DimSpec>, blocks: Vec<Vec<usize>>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Config("space needs at least one dimension".into()));
        }
        for (i, d) in dims.iter().enumerate() {
            if !(d.lower < d.upper) {
                return Err(Error::Config(format!(
                    "dimension {i}: lower {} must be < upper {}",
                    d.lower, d.upper
                )));
            }
        }
        let mut seen = vec![false; dims.len()];
        for b in &blocks {
            for &i in b {
                if i >= dims.len() || seen[i] {
                    return Err(Error::Config(format!(
                        "blocks must partition 0..{} exactly",
                        dims.len()
                    )));
                }
                seen[i] = true;
            }
        }
        if !seen.iter().all(|&s| s) {
            return Err(Error::Config("blocks leave dimensions uncovered".into()));
        }
        Ok(ParamSpace { dims, blocks })
    }

    /// A space with a single block spanning all dimensions.
    pub fn single_block(dims: Vec<DimSpec>) -> Result<Self> {
        let blocks = vec![(0..dims.len()).collect()];
        ParamSpace::new(dims, blocks)
    }

    pub fn dims(&self) -> usize {
        self.dims.len()
    }

    pub fn dim(&self, i: usize) -> &DimSpec {
        &self.dims[i]
    }

    pub fn dim_specs(&self) -> &[DimSpec] {
        &self.dims
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Wraps a scalar into `[lower, upper)` of dimension `i`; non-wrapped
    /// dimensions pass through unchanged.
    pub fn canonicalize_coord(&self, i: usize, x: f64) -> f64 {
        let d = &self.dims[i];
        if !d.wrapped {
            return x;
        }
        let r = (x - d.lower).rem_euclid(d.range());
        // rem_euclid can return the period itself when x is a hair below
        // a wrap point; fold that back to the lower edge.
        let r = if r >= d.range() { 0.0 } else { r };
        d.lower + r
    }

    /// Canonicalizes every wrapped coordinate of `theta` in place.
    pub fn canonicalize(&self, theta: &mut ParamVector) {
        for i in 0..self.dims.len() {
            theta.values[i] = self.canonicalize_coord(i, theta.values[i]);
        }
    }

    /// True when every coordinate lies inside its bounds (wrapped
    /// dimensions are always inside after canonicalization).
    pub fn contains(&self, theta: &ParamVector) -> bool {
        theta.len() == self.dims.len()
            && theta.values.iter().zip(&self.dims).all(|(&x, d)| {
                if d.wrapped {
                    x.is_finite()
                } else {
                    x >= d.lower && x <= d.upper
                }
            })
    }

    /// Per-dimension signed difference `a - b`. Wrapped dimensions return
    /// the minimal-magnitude representative in `(-period/2, period/2]`.
    pub fn wrap_delta(&self, a: &ParamVector, b: &ParamVector) -> Vec<f64> {
        (0..self.dims.len()).map(|i| self.wrap_delta_coord(i, a[i], b[i])).collect()
    }

    pub fn wrap_delta_coord(&self, i: usize, a: f64, b: f64) -> f64 {
        let d = &self.dims[i];
        let raw = a - b;
        if !d.wrapped {
            return raw;
        }
        let p = d.range();
        let mut r = raw.rem_euclid(p);
        if r > p / 2.0 {
            r -= p;
        }
        r
    }

    /// Euclidean distance using wrapped deltas.
    pub fn distance(&self, a: &ParamVector, b: &ParamVector) -> f64 {
        self.wrap_delta(a, b).iter().map(|d| d * d).sum::<f64>().sqrt()
    }

    /// Uniform (wrapped-uniform on angular dimensions) sample over the box.
    pub fn sample_uniform(&self, rng: &mut Prng) -> ParamVector {
        let values = self
            .dims
            .iter()
            .map(|d| {
                // Resample the measure-zero lower endpoint so positions
                // stay strictly inside open-support priors.
                loop {
                    let x = rng.gen_range(d.lower..d.upper);
                    if x > d.lower || d.wrapped {
                        return x;
                    }
                }
            })
            .collect();
        ParamVector::new(values)
    }

    /// Log-volume of the box, i.e. the negative uniform log-density.
    pub fn log_volume(&self) -> f64 {
        self.dims.iter().map(|d| d.range().ln()).sum()
    }

    /// Restriction of this space to one block (bounds only, single block).
    pub fn block_space(&self, block: usize) -> Result<ParamSpace> {
        let idx = self
            .blocks
            .get(block)
            .ok_or_else(|| Error::Config(format!("no block {block}")))?;
        let dims = idx.iter().map(|&i| self.dims[i]).collect();
        ParamSpace::single_block(dims)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn room_like() -> ParamSpace {
        let mut dims = vec![DimSpec::linear(-1.0, 1.0); 3];
        dims.extend(vec![DimSpec::wrapped(-PI, PI); 3]);
        ParamSpace::single_block(dims).unwrap()
    }

    #[test]
    fn rejects_bad_bounds_and_partitions() {
        assert!(ParamSpace::single_block(vec![DimSpec::linear(1.0, 1.0)]).is_err());
        let dims = vec![DimSpec::linear(0.0, 1.0); 2];
        assert!(ParamSpace::new(dims.clone(), vec![vec![0]]).is_err());
        assert!(ParamSpace::new(dims.clone(), vec![vec![0, 0], vec![1]]).is_err());
        assert!(ParamSpace::new(dims, vec![vec![0], vec![1]]).is_ok());
    }

    #[test]
    fn wrap_delta_basic_cases() {
        let s = room_like();
        let a = ParamVector::new(vec![0.3, 0.0, 0.0, 3.0, 0.0, 0.0]);
        let b = ParamVector::new(vec![0.1, 0.0, 0.0, -3.0, 0.0, 0.0]);
        let d = s.wrap_delta(&a, &b);
        assert_abs_diff_eq!(d[0], 0.2, epsilon = 1e-15);
        // through the wrap, not 6.0
        assert_abs_diff_eq!(d[3], 6.0 - 2.0 * PI, epsilon = 1e-12);
        assert!(d[3].abs() <= PI);
        let z = s.wrap_delta(&a, &a);
        assert!(z.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn wrap_delta_is_congruent_mod_period() {
        let s = room_like();
        let a = ParamVector::new(vec![0.0, 0.0, 0.0, 3.0, -2.9, 1.2]);
        let b = ParamVector::new(vec![0.0, 0.0, 0.0, -3.0, 2.8, -0.7]);
        let d = s.wrap_delta(&a, &b);
        for i in 3..6 {
            let residue = (a[i] - (b[i] + d[i])).rem_euclid(2.0 * PI);
            let residue = residue.min(2.0 * PI - residue);
            assert_abs_diff_eq!(residue, 0.0, epsilon = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn wrap_delta_antisymmetric(
            ax in -1.0..1.0f64, bx in -1.0..1.0f64,
            aa in -PI..PI, ba in -PI..PI,
        ) {
            let s = ParamSpace::single_block(vec![
                DimSpec::linear(-1.0, 1.0),
                DimSpec::wrapped(-PI, PI),
            ]).unwrap();
            let a = ParamVector::new(vec![ax, aa]);
            let b = ParamVector::new(vec![bx, ba]);
            let fwd = s.wrap_delta(&a, &b);
            let bwd = s.wrap_delta(&b, &a);
            for i in 0..2 {
                // +period/2 is its own antisymmetric image on the circle
                let diff = (fwd[i] + bwd[i]).abs();
                let ok = diff < 1e-12 || (i == 1 && (diff - 2.0 * PI).abs() < 1e-12);
                prop_assert!(ok, "dim {} fwd {} bwd {}", i, fwd[i], bwd[i]);
            }
        }

        #[test]
        fn canonicalize_lands_in_interval(x in -100.0..100.0f64) {
            let s = room_like();
            let c = s.canonicalize_coord(3, x);
            prop_assert!(c >= -PI && c < PI);
        }
    }
}
