//! Behavior of the regeneration sampler: regeneration frequency under a
//! perfect global proposal, absence of regenerations without accepted
//! independence moves, and adaptation frozen between tour boundaries.

use informed_mcmc::model::Target;
use informed_mcmc::rng::rng_from_seed;
use informed_mcmc::samplers::kernels::{MixtureKernel, Scope};
use informed_mcmc::samplers::{Chain, LocalKernel, RegMhSampler};
use informed_mcmc::space::{DimSpec, ParamSpace, ParamVector};
use informed_mcmc::toy::{GridPmf, GridTarget, RingWalkKernel};
use std::sync::Arc;

fn uniformish_target() -> GridTarget {
    let weights = [1.0f64, 2.0, 3.0, 2.0, 0.5];
    GridTarget::new(1, 5, weights.iter().map(|w| w.ln()).collect()).unwrap()
}

/// A mixture kernel whose local part is the discrete ring walk; keeps the
/// chain on the grid so T_G == pi exactly.
fn toy_mixture(target: &GridTarget, global: Arc<GridPmf>, alpha: f64) -> MixtureKernel {
    // LocalKernel with tiny sigma would leave the grid; instead reuse the
    // mixture with alpha = 0 so every proposal is an independence move,
    // or wrap the ring walk when alpha > 0 (not needed here).
    let _ = (target, alpha);
    let space = global_space();
    let local = LocalKernel::isotropic(space.clone(), 1.0, Scope::Full);
    MixtureKernel::new(space, 0.0, local, global, Scope::Full)
}

fn global_space() -> ParamSpace {
    ParamSpace::single_block(vec![DimSpec::wrapped(0.0, 5.0)]).unwrap()
}

#[test]
fn perfect_global_proposal_regenerates_on_every_accepted_move() {
    let target = uniformish_target();
    let global = Arc::new(GridPmf::matching_target(&target));
    let kernel = toy_mixture(&target, global, 0.0);
    // calibration: with T_G == pi, every observed log w is the same
    // constant (the normalizer), so c equals it and the branch value is 1
    let mut sampler = RegMhSampler::new(kernel, 50, false);
    let mut chain =
        Chain::new(&target, target.state_theta(2), rng_from_seed(3), 4000).unwrap();
    let mut accepted_after_calibration = 0usize;
    for t in 0..4000 {
        let calibrated = sampler.log_c().is_some();
        let info = sampler.step(&mut chain, &target, t + 1);
        if calibrated && info.accepted && info.from_global {
            accepted_after_calibration += 1;
        }
    }
    assert!(sampler.log_c().is_some(), "calibration should finish");
    assert!(accepted_after_calibration > 500);
    assert_eq!(
        sampler.regenerations.len(),
        accepted_after_calibration,
        "every accepted independence move must regenerate when T_G == pi"
    );
}

#[test]
fn no_accepted_independence_moves_means_no_regenerations() {
    // global proposal concentrated on a zero-density state: accepted
    // independence moves are impossible
    let weights = [1.0f64.ln(), 1.0f64.ln(), 1.0f64.ln(), 1.0f64.ln(), f64::NEG_INFINITY];
    let target = GridTarget::new(1, 5, weights.to_vec()).unwrap();
    let global = Arc::new(GridPmf::new(1, 5, vec![0.0, 0.0, 0.0, 0.0, 1.0]).unwrap());
    let kernel = toy_mixture(&target, global, 0.0);
    let mut sampler = RegMhSampler::new(kernel, 0, false);
    let mut chain =
        Chain::new(&target, target.state_theta(1), rng_from_seed(5), 2000).unwrap();
    let mut accepted_global = 0usize;
    for t in 0..2000 {
        let info = sampler.step(&mut chain, &target, t + 1);
        if info.accepted && info.from_global {
            accepted_global += 1;
        }
    }
    assert_eq!(accepted_global, 0);
    assert_eq!(sampler.regenerations.len(), 0);
}

#[test]
fn adaptation_happens_only_at_tour_boundaries() {
    struct Gauss {
        space: ParamSpace,
    }
    impl Target for Gauss {
        fn space(&self) -> &ParamSpace {
            &self.space
        }
        fn log_density(&self, theta: &ParamVector) -> f64 {
            if !self.space.contains(theta) {
                return f64::NEG_INFINITY;
            }
            -0.5 * theta[0] * theta[0]
        }
    }
    let space = ParamSpace::single_block(vec![DimSpec::linear(-6.0, 6.0)]).unwrap();
    let target = Gauss { space: space.clone() };
    let local = LocalKernel::isotropic(space.clone(), 0.5, Scope::Full);
    let global = Arc::new(informed_mcmc::proposal::BoxUniform { space: space.clone() });
    let kernel = MixtureKernel::new(space.clone(), 0.5, local, global, Scope::Full);
    let mut sampler = RegMhSampler::new(kernel, 50, true);
    let mut chain =
        Chain::new(&target, ParamVector::new(vec![0.3]), rng_from_seed(7), 5000).unwrap();
    let mut version_changes = Vec::new();
    let mut last_version = sampler.adaptation_version;
    for t in 0..5000 {
        sampler.step(&mut chain, &target, t + 1);
        if sampler.adaptation_version != last_version {
            version_changes.push(t + 1);
            last_version = sampler.adaptation_version;
        }
    }
    assert!(!sampler.regenerations.is_empty(), "expected regenerations");
    // the kernel changed exactly at the recorded tour boundaries
    assert_eq!(version_changes, sampler.regenerations);
}

/// The ring walk from the toy module keeps its own detailed-balance
/// property when mixed through the generic machinery (sanity anchor for
/// the tests above).
#[test]
fn toy_kernel_is_usable_with_plain_steps() {
    let target = uniformish_target();
    let kernel = RingWalkKernel::new(&target, Scope::Full);
    let mut chain = Chain::new(&target, target.state_theta(0), rng_from_seed(1), 100).unwrap();
    for _ in 0..100 {
        informed_mcmc::samplers::chain::advance(&mut chain, &kernel, &target);
    }
    assert_eq!(chain.trace.len(), 101);
}
