//! Proposal kernels. All kernels operate on the full state but may move
//! only a scope (a single dimension or one block); densities are with
//! respect to the scoped coordinates, the rest are carried over unchanged.

use crate::proposal::IndependenceProposal;
use crate::rng::Prng;
use crate::space::{ParamSpace, ParamVector};
use rand::Rng;
use rand_distr::StandardNormal;
use std::sync::Arc;

const LOG_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Which coordinates a kernel may move.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Scope {
    Full,
    Dim(usize),
    Block(usize),
}

impl Scope {
    pub fn dims(&self, space: &ParamSpace) -> Vec<usize> {
        match self {
            Scope::Full => (0..space.dims()).collect(),
            Scope::Dim(d) => vec![*d],
            Scope::Block(b) => space.blocks()[*b].clone(),
        }
    }
}

/// A proposed state plus the component that generated it.
pub struct Proposal {
    pub theta: ParamVector,
    pub from_global: bool,
}

/// A Markov proposal kernel with evaluable transition density.
pub trait ProposalKernel: Send + Sync {
    fn propose(&self, current: &ParamVector, rng: &mut Prng) -> Proposal;

    /// log T(from -> to).
    fn log_density(&self, from: &ParamVector, to: &ParamVector) -> f64;

    /// Symmetric kernels cancel the density ratio in the acceptance rule.
    fn is_symmetric(&self) -> bool {
        false
    }
}

/// Symmetric Gaussian random walk over the scoped dimensions; wrapped
/// dimensions use a wrapped-Gaussian density (3-term wrap sum).
pub struct LocalKernel {
    space: ParamSpace,
    sigma: Vec<f64>,
    scoped: Vec<usize>,
}

impl LocalKernel {
    /// `sigma` has one entry per space dimension; only scoped entries are
    /// used.
    pub fn new(space: ParamSpace, sigma: Vec<f64>, scope: Scope) -> Self {
        assert_eq!(sigma.len(), space.dims());
        assert!(sigma.iter().all(|&s| s > 0.0));
        let scoped = scope.dims(&space);
        LocalKernel { space, sigma, scoped }
    }

    pub fn isotropic(space: ParamSpace, sigma: f64, scope: Scope) -> Self {
        let n = space.dims();
        Self::new(space, vec![sigma; n], scope)
    }

    pub fn scoped_dims(&self) -> &[usize] {
        &self.scoped
    }
}

impl ProposalKernel for LocalKernel {
    fn propose(&self, current: &ParamVector, rng: &mut Prng) -> Proposal {
        let mut values = current.values.clone();
        for &j in &self.scoped {
            let n: f64 = rng.sample(StandardNormal);
            values[j] = self.space.canonicalize_coord(j, values[j] + self.sigma[j] * n);
        }
        Proposal { theta: ParamVector::new(values), from_global: false }
    }

    fn log_density(&self, from: &ParamVector, to: &ParamVector) -> f64 {
        let mut lp = 0.0;
        for &j in &self.scoped {
            let h = self.sigma[j];
            let spec = self.space.dim(j);
            let delta = self.space.wrap_delta_coord(j, to[j], from[j]);
            let k = if spec.wrapped {
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
        lp
    }

    fn is_symmetric(&self) -> bool {
        true
    }
}

/// The informed mixture: with probability `alpha` a local random-walk
/// move, otherwise a draw from the state-independent global proposal.
/// `alpha = 1` degenerates to the local kernel (bit-identical behavior,
/// no extra randomness consumed); `alpha = 0` is a metropolized
/// independence sampler.
pub struct MixtureKernel {
    space: ParamSpace,
    alpha: f64,
    local: LocalKernel,
    global: Arc<dyn IndependenceProposal>,
    scoped: Vec<usize>,
}

impl MixtureKernel {
    pub fn new(
        space: ParamSpace,
        alpha: f64,
        local: LocalKernel,
        global: Arc<dyn IndependenceProposal>,
        scope: Scope,
    ) -> Self {
        assert!((0.0..=1.0).contains(&alpha));
        let scoped = scope.dims(&space);
        assert_eq!(global.dims(), scoped.len(), "global proposal dims must match scope");
        assert_eq!(local.scoped_dims(), scoped.as_slice(), "local scope must match");
        MixtureKernel { space, alpha, local, global, scoped }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Swaps the global component (used by the regeneration sampler at
    /// tour boundaries).
    pub fn set_global(&mut self, global: Arc<dyn IndependenceProposal>) {
        assert_eq!(global.dims(), self.scoped.len());
        self.global = global;
    }

    pub fn global(&self) -> &Arc<dyn IndependenceProposal> {
        &self.global
    }

    fn scoped_coords(&self, theta: &ParamVector) -> Vec<f64> {
        self.scoped.iter().map(|&j| theta[j]).collect()
    }

    fn embed(&self, current: &ParamVector, scoped_values: &[f64]) -> ParamVector {
        let mut values = current.values.clone();
        for (&j, &v) in self.scoped.iter().zip(scoped_values) {
            values[j] = self.space.canonicalize_coord(j, v);
        }
        ParamVector::new(values)
    }
}

impl ProposalKernel for MixtureKernel {
    fn propose(&self, current: &ParamVector, rng: &mut Prng) -> Proposal {
        if self.alpha >= 1.0 {
            return self.local.propose(current, rng);
        }
        let use_local = if self.alpha <= 0.0 {
            false
        } else {
            let u: f64 = rng.gen();
            u < self.alpha
        };
        if use_local {
            self.local.propose(current, rng)
        } else {
            let v = self.global.sample(rng);
            Proposal { theta: self.embed(current, &v), from_global: true }
        }
    }

    fn log_density(&self, from: &ParamVector, to: &ParamVector) -> f64 {
        if self.alpha >= 1.0 {
            return self.local.log_density(from, to);
        }
        let global_ld = self.global.log_density(&self.scoped_coords(to));
        if self.alpha <= 0.0 {
            return global_ld;
        }
        let local_ld = self.local.log_density(from, to);
        let a = self.alpha.ln() + local_ld;
        let b = (1.0 - self.alpha).ln() + global_ld;
        let m = a.max(b);
        if m == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        m + ((a - m).exp() + (b - m).exp()).ln()
    }

    fn is_symmetric(&self) -> bool {
        self.alpha >= 1.0
    }
}
