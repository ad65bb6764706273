//! Fully evaluable discrete toy targets and kernels. States live on an
//! integer grid embedded in a wrapped continuous space, so every sampler
//! runs unmodified while an exact transition matrix remains computable
//! for validation against brute-force stationary distributions.

use crate::error::{Error, Result};
use crate::model::Target;
use crate::proposal::IndependenceProposal;
use crate::rng::Prng;
use crate::samplers::kernels::{Proposal, ProposalKernel, Scope};
use crate::space::{DimSpec, ParamSpace, ParamVector};
use rand::Rng;

/// A discrete target on `states_per_dim^dims` grid points, embedded in a
/// wrapped box `[0, states_per_dim)^dims` so ring moves wrap exactly.
pub struct GridTarget {
    space: ParamSpace,
    states_per_dim: usize,
    dims: usize,
    log_weights: Vec<f64>,
}

impl GridTarget {
    /// `log_weights` indexed row-major over the grid.
    pub fn new(dims: usize, states_per_dim: usize, log_weights: Vec<f64>) -> Result<Self> {
        if log_weights.len() != states_per_dim.pow(dims as u32) {
            return Err(Error::Config("weight table size mismatch".into()));
        }
        let n = states_per_dim as f64;
        let specs = vec![DimSpec::wrapped(0.0, n); dims];
        let blocks = (0..dims).map(|d| vec![d]).collect();
        Ok(GridTarget {
            space: ParamSpace::new(specs, blocks)?,
            states_per_dim,
            dims,
            log_weights,
        })
    }

    pub fn states_per_dim(&self) -> usize {
        self.states_per_dim
    }

    pub fn n_states(&self) -> usize {
        self.log_weights.len()
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// Flattened state index of a grid point.
    pub fn state_index(&self, theta: &ParamVector) -> usize {
        let mut idx = 0usize;
        for d in 0..self.dims {
            let v = theta[d].rem_euclid(self.states_per_dim as f64).round() as usize
                % self.states_per_dim;
            idx = idx * self.states_per_dim + v;
        }
        idx
    }

    /// Grid point of a flattened state index.
    pub fn state_theta(&self, mut idx: usize) -> ParamVector {
        let mut values = vec![0.0; self.dims];
        for d in (0..self.dims).rev() {
            values[d] = (idx % self.states_per_dim) as f64;
            idx /= self.states_per_dim;
        }
        ParamVector::new(values)
    }

    /// Normalized probability vector of the target.
    pub fn probabilities(&self) -> Vec<f64> {
        let m = self.log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let unnorm: Vec<f64> = self.log_weights.iter().map(|w| (w - m).exp()).collect();
        let z: f64 = unnorm.iter().sum();
        unnorm.into_iter().map(|p| p / z).collect()
    }
}

impl Target for GridTarget {
    fn space(&self) -> &ParamSpace {
        &self.space
    }

    fn log_density(&self, theta: &ParamVector) -> f64 {
        self.log_weights[self.state_index(theta)]
    }
}

/// Symmetric ring walk: each scoped dimension moves +-1 (wrapping) with
/// equal probability.
pub struct RingWalkKernel {
    space: ParamSpace,
    scoped: Vec<usize>,
    states_per_dim: usize,
}

impl RingWalkKernel {
    pub fn new(target: &GridTarget, scope: Scope) -> Self {
        let space = target.space().clone();
        let scoped = scope.dims(&space);
        RingWalkKernel { space, scoped, states_per_dim: target.states_per_dim() }
    }

    pub fn scoped_dims(&self) -> &[usize] {
        &self.scoped
    }
}

impl ProposalKernel for RingWalkKernel {
    fn propose(&self, current: &ParamVector, rng: &mut Prng) -> Proposal {
        let mut values = current.values.clone();
        for &d in &self.scoped {
            let step = if rng.gen::<f64>() < 0.5 { 1.0 } else { -1.0 };
            values[d] = self.space.canonicalize_coord(d, values[d] + step);
        }
        Proposal { theta: ParamVector::new(values), from_global: false }
    }

    fn log_density(&self, from: &ParamVector, to: &ParamVector) -> f64 {
        let mut lp = 0.0;
        for d in 0..self.space.dims() {
            let delta = self.space.wrap_delta_coord(d, to[d], from[d]).abs();
            if self.scoped.contains(&d) {
                // n = 2 would alias +1 and -1; the toys use n >= 3
                let reachable = (delta - 1.0).abs() < 1e-9
                    || (delta - (self.states_per_dim as f64 - 1.0)).abs() < 1e-9;
                if reachable {
                    lp += 0.5f64.ln();
                } else {
                    return f64::NEG_INFINITY;
                }
            } else if delta.abs() > 1e-9 {
                return f64::NEG_INFINITY;
            }
        }
        lp
    }

    fn is_symmetric(&self) -> bool {
        true
    }
}

/// A fixed probability table over scoped grid coordinates; the fully
/// evaluable stand-in for a learned global proposal.
pub struct GridPmf {
    space: ParamSpace,
    probs: Vec<f64>,
    states_per_dim: usize,
    dims: usize,
}

impl GridPmf {
    /// `probs` indexed row-major over the scoped sub-grid; must sum to 1.
    pub fn new(dims: usize, states_per_dim: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != states_per_dim.pow(dims as u32) {
            return Err(Error::Config("pmf size mismatch".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 || probs.iter().any(|&p| p < 0.0) {
            return Err(Error::Config("pmf must be a probability vector".into()));
        }
        let n = states_per_dim as f64;
        let specs = vec![DimSpec::wrapped(0.0, n); dims];
        Ok(GridPmf { space: ParamSpace::single_block(specs)?, probs, states_per_dim, dims })
    }

    /// The pmf proportional to a target's weights (i.e. T_G = pi).
    pub fn matching_target(target: &GridTarget) -> Self {
        GridPmf::new(
            target.space().dims(),
            target.states_per_dim(),
            target.probabilities(),
        )
        .unwrap()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    fn index_of(&self, x: &[f64]) -> usize {
        let mut idx = 0usize;
        for d in 0..self.dims {
            let v =
                x[d].rem_euclid(self.states_per_dim as f64).round() as usize % self.states_per_dim;
            idx = idx * self.states_per_dim + v;
        }
        idx
    }
}

impl IndependenceProposal for GridPmf {
    fn dims(&self) -> usize {
        self.dims
    }

    fn sample(&self, rng: &mut Prng) -> Vec<f64> {
        let mut target: f64 = rng.gen();
        let mut idx = self.probs.len() - 1;
        for (i, &p) in self.probs.iter().enumerate() {
            target -= p;
            if target <= 0.0 {
                idx = i;
                break;
            }
        }
        // unflatten
        let mut values = vec![0.0; self.dims];
        let mut rest = idx;
        for d in (0..self.dims).rev() {
            values[d] = (rest % self.states_per_dim) as f64;
            rest /= self.states_per_dim;
        }
        let _ = &self.space;
        values
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        self.probs[self.index_of(x)].ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn state_indexing_round_trips() {
        let t = GridTarget::new(2, 5, vec![0.0; 25]).unwrap();
        for idx in 0..25 {
            let theta = t.state_theta(idx);
            assert_eq!(t.state_index(&theta), idx);
        }
    }

    #[test]
    fn ring_walk_stays_on_the_grid_and_is_symmetric() {
        let t = GridTarget::new(1, 5, vec![0.0; 5]).unwrap();
        let k = RingWalkKernel::new(&t, Scope::Full);
        let mut rng = rng_from_seed(1);
        let mut cur = t.state_theta(0);
        for _ in 0..100 {
            let p = k.propose(&cur, &mut rng);
            let idx = t.state_index(&p.theta);
            assert!(idx < 5);
            let fwd = k.log_density(&cur, &p.theta);
            let rev = k.log_density(&p.theta, &cur);
            assert!((fwd - rev).abs() < 1e-12);
            assert!((fwd - 0.5f64.ln()).abs() < 1e-12);
            cur = p.theta;
        }
    }

    #[test]
    fn pmf_sampling_matches_probabilities() {
        let pmf = GridPmf::new(1, 5, vec![0.5, 0.2, 0.1, 0.1, 0.1]).unwrap();
        let mut rng = rng_from_seed(2);
        let mut counts = [0usize; 5];
        let n = 200_000;
        for _ in 0..n {
            let v = pmf.sample(&mut rng);
            counts[v[0] as usize] += 1;
        }
        for (i, &c) in counts.iter().enumerate() {
            let p = c as f64 / n as f64;
            assert!((p - pmf.probs()[i]).abs() < 0.01, "state {i}: {p}");
        }
        assert!((pmf.log_density(&[0.0]) - 0.5f64.ln()).abs() < 1e-12);
    }
}
