//! Experiment driver: builds the kernel stack for a sampler variant and
//! runs independent chains with per-chain generators derived from one
//! master seed. Chains run data-parallel; results are identical under the
//! sequential fallback.

use crate::error::{Error, Result};
use crate::features::extractor_from_id;
use crate::image::ImageGrid;
use crate::model::{GenerativeModel, Posterior};
use crate::parallel;
use crate::proposal::TrainedProposal;
use crate::rng::derive_rng;
use crate::samplers::chain::{advance, Chain, ChainState, Trace};
use crate::samplers::kernels::{LocalKernel, MixtureKernel, Scope};
use crate::samplers::pt::{pt_step, PtEnsemble};
use crate::samplers::regen::RegMhSampler;
use crate::space::ParamSpace;

/// A sampler variant with its hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub enum SamplerSpec {
    /// Full-state symmetric Gaussian random walk.
    Mh { sigma: f64 },
    /// Within-Gibbs: one dimension per iteration, swept cyclically.
    Mhwg { sigma: f64 },
    /// Blocked within-Gibbs: one block per iteration.
    Bmhwg { sigma: f64 },
    /// Parallel tempering; only the T = 1 chain contributes samples.
    Pt { sigma: f64, temperatures: Vec<f64> },
    /// Adaptive mixture with regenerations; the global part starts at the
    /// prior and is refit at tour boundaries.
    RegMh { sigma: f64, alpha: f64, calibration: usize },
    /// Informed sampler: mixture of local walk and learned global.
    InfMh { sigma: f64, alpha: f64 },
    /// Metropolized independence sampler from the learned global.
    InfIndMh,
    /// Blocked informed sampler: per-block mixture kernels.
    InfBmhwg { sigma: f64, alpha: f64 },
}

impl SamplerSpec {
    pub fn id(&self) -> &'static str {
        match self {
            SamplerSpec::Mh { .. } => "mh",
            SamplerSpec::Mhwg { .. } => "mhwg",
            SamplerSpec::Bmhwg { .. } => "bmhwg",
            SamplerSpec::Pt { .. } => "pt",
            SamplerSpec::RegMh { .. } => "reg-mh",
            SamplerSpec::InfMh { .. } => "inf-mh",
            SamplerSpec::InfIndMh => "inf-indmh",
            SamplerSpec::InfBmhwg { .. } => "inf-bmhwg",
        }
    }

    pub fn needs_trained_proposal(&self) -> bool {
        matches!(
            self,
            SamplerSpec::InfMh { .. } | SamplerSpec::InfIndMh | SamplerSpec::InfBmhwg { .. }
        )
    }
}

/// Multi-chain output of one experiment run.
pub struct ChainSet {
    pub space: ParamSpace,
    pub chains: Vec<Trace>,
    pub master_seed: u64,
    /// total forward renders consumed by all chains
    pub renders: u64,
}

impl ChainSet {
    pub fn n_chains(&self) -> usize {
        self.chains.len()
    }
}

/// Runs `n_chains` independent chains of `spec` for `n_iter` iterations
/// against the posterior of `model` given `obs`. Informed samplers
/// resolve their global proposal from `proposal` once, using the
/// observation's features. Initial states are prior samples.
pub fn run_experiment<M: GenerativeModel>(
    model: &M,
    obs: &ImageGrid,
    spec: &SamplerSpec,
    proposal: Option<&TrainedProposal>,
    n_iter: usize,
    n_chains: usize,
    master_seed: u64,
) -> Result<ChainSet> {
    let posterior = Posterior::new(model, obs)?;
    let space = model.space().clone();

    if spec.needs_trained_proposal() && proposal.is_none() {
        return Err(Error::Config(format!(
            "sampler '{}' requires a trained proposal model",
            spec.id()
        )));
    }
    if matches!(spec, SamplerSpec::InfBmhwg { .. }) && space.blocks().len() < 2 {
        return Err(Error::Config("inf-bmhwg requires a blocked parameter space".into()));
    }

    // resolve the observation's global proposal(s) once, outside the loop
    let obs_feature = if let Some(tp) = proposal {
        let extractor = extractor_from_id(&tp.extractor_id)?;
        Some(extractor.extract(obs)?)
    } else {
        None
    };
    let full_global = match (spec, proposal, &obs_feature) {
        (SamplerSpec::InfMh { .. } | SamplerSpec::InfIndMh, Some(tp), Some(f)) => {
            Some(tp.select_full(f)?)
        }
        _ => None,
    };
    let block_globals = match (spec, proposal, &obs_feature) {
        (SamplerSpec::InfBmhwg { .. }, Some(tp), Some(f)) => {
            let mut globals = Vec::with_capacity(space.blocks().len());
            for b in 0..space.blocks().len() {
                globals.push(tp.select_block(b, f)?);
            }
            Some(globals)
        }
        _ => None,
    };

    let mut traces: Vec<Option<Trace>> = (0..n_chains).map(|_| None).collect();
    let run_one = |c: usize| -> Result<Trace> {
        let mut rng = derive_rng(master_seed, "chain", c as u64);
        let theta0 = model.prior_sample(&mut rng);
        match spec {
            SamplerSpec::Mh { sigma } => {
                let kernel = LocalKernel::isotropic(space.clone(), *sigma, Scope::Full);
                let mut chain = Chain::new(&posterior, theta0, rng, n_iter)?;
                for _ in 0..n_iter {
                    advance(&mut chain, &kernel, &posterior);
                }
                Ok(chain.trace)
            }
            SamplerSpec::Mhwg { sigma } => {
                let kernels: Vec<LocalKernel> = (0..space.dims())
                    .map(|d| LocalKernel::isotropic(space.clone(), *sigma, Scope::Dim(d)))
                    .collect();
                let mut chain = Chain::new(&posterior, theta0, rng, n_iter)?;
                for t in 0..n_iter {
                    advance(&mut chain, &kernels[t % kernels.len()], &posterior);
                }
                Ok(chain.trace)
            }
            SamplerSpec::Bmhwg { sigma } => {
                let kernels: Vec<LocalKernel> = (0..space.blocks().len())
                    .map(|b| LocalKernel::isotropic(space.clone(), *sigma, Scope::Block(b)))
                    .collect();
                let mut chain = Chain::new(&posterior, theta0, rng, n_iter)?;
                for t in 0..n_iter {
                    advance(&mut chain, &kernels[t % kernels.len()], &posterior);
                }
                Ok(chain.trace)
            }
            SamplerSpec::Pt { sigma, temperatures } => {
                let kernel = LocalKernel::isotropic(space.clone(), *sigma, Scope::Full);
                let mut states = Vec::with_capacity(temperatures.len());
                let cold = ChainState::new(&posterior, theta0, rng)?;
                states.push(cold);
                for level in 1..temperatures.len() {
                    let mut level_rng =
                        derive_rng(master_seed, "chain-temp", (c * 64 + level) as u64);
                    let init = model.prior_sample(&mut level_rng);
                    states.push(ChainState::new(&posterior, init, level_rng)?);
                }
                let swap_rng = derive_rng(master_seed, "pt-swap", c as u64);
                let mut ens = PtEnsemble::new(states, temperatures.clone(), swap_rng)?;
                let mut trace = Trace::with_capacity(n_iter + 1);
                trace.push(ens.cold().current.clone(), ens.cold().logp, false);
                for _ in 0..n_iter {
                    let accepted = pt_step(&mut ens, &kernel, &posterior);
                    trace.push(ens.cold().current.clone(), ens.cold().logp, accepted);
                }
                Ok(trace)
            }
            SamplerSpec::RegMh { sigma, alpha, calibration } => {
                let local = LocalKernel::isotropic(space.clone(), *sigma, Scope::Full);
                let prior_global =
                    std::sync::Arc::new(crate::proposal::BoxUniform { space: space.clone() });
                let kernel =
                    MixtureKernel::new(space.clone(), *alpha, local, prior_global, Scope::Full);
                let mut sampler = RegMhSampler::new(kernel, *calibration, true);
                let mut chain = Chain::new(&posterior, theta0, rng, n_iter)?;
                for t in 0..n_iter {
                    sampler.step(&mut chain, &posterior, t + 1);
                }
                Ok(chain.trace)
            }
            SamplerSpec::InfMh { sigma, alpha } => {
                let local = LocalKernel::isotropic(space.clone(), *sigma, Scope::Full);
                let kernel = MixtureKernel::new(
                    space.clone(),
                    *alpha,
                    local,
                    full_global.as_ref().unwrap().clone(),
                    Scope::Full,
                );
                let mut chain = Chain::new(&posterior, theta0, rng, n_iter)?;
                for _ in 0..n_iter {
                    advance(&mut chain, &kernel, &posterior);
                }
                Ok(chain.trace)
            }
            SamplerSpec::InfIndMh => {
                // alpha = 0: the local part is never used but the mixture
                // still needs a placeholder sigma
                let local = LocalKernel::isotropic(space.clone(), 1.0, Scope::Full);
                let kernel = MixtureKernel::new(
                    space.clone(),
                    0.0,
                    local,
                    full_global.as_ref().unwrap().clone(),
                    Scope::Full,
                );
                let mut chain = Chain::new(&posterior, theta0, rng, n_iter)?;
                for _ in 0..n_iter {
                    advance(&mut chain, &kernel, &posterior);
                }
                Ok(chain.trace)
            }
            SamplerSpec::InfBmhwg { sigma, alpha } => {
                let globals = block_globals.as_ref().unwrap();
                let kernels: Vec<MixtureKernel> = (0..space.blocks().len())
                    .map(|b| {
                        let local =
                            LocalKernel::isotropic(space.clone(), *sigma, Scope::Block(b));
                        MixtureKernel::new(
                            space.clone(),
                            *alpha,
                            local,
                            globals[b].clone(),
                            Scope::Block(b),
                        )
                    })
                    .collect();
                let mut chain = Chain::new(&posterior, theta0, rng, n_iter)?;
                for t in 0..n_iter {
                    advance(&mut chain, &kernels[t % kernels.len()], &posterior);
                }
                Ok(chain.trace)
            }
        }
    };

    parallel::for_each_mut(&mut traces, |c, slot| {
        *slot = Some(run_one(c).map_err(|e| e.to_string()).map_or_else(
            |e| {
                // errors are rare (degenerate inits); surface below
                let mut t = Trace::default();
                t.thetas.clear();
                eprintln!("chain {c} failed: {e}");
                t
            },
            |t| t,
        ));
    });

    let mut chains = Vec::with_capacity(n_chains);
    for slot in traces {
        let t = slot.expect("chain slot filled");
        if t.is_empty() {
            return Err(Error::Degenerate("a chain failed to run".into()));
        }
        chains.push(t);
    }
    Ok(ChainSet { space, chains, master_seed, renders: posterior.render_count() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::renderers::{make_observation, RoomModel, TilesModel};
    use crate::rng::rng_from_seed;

    fn room_obs(model: &RoomModel, seed: u64) -> (crate::space::ParamVector, ImageGrid) {
        let mut rng = rng_from_seed(seed);
        let theta = model.prior_sample(&mut rng);
        let obs = make_observation(model, &theta, &mut rng).unwrap();
        (theta, obs)
    }

    #[test]
    fn zero_iterations_leaves_only_initial_states() {
        let model = RoomModel::new(16, 16, 0.02);
        let (_, obs) = room_obs(&model, 1);
        let set = run_experiment(
            &model,
            &obs,
            &SamplerSpec::Mh { sigma: 0.3 },
            None,
            0,
            4,
            7,
        )
        .unwrap();
        assert_eq!(set.chains.len(), 4);
        for c in &set.chains {
            assert_eq!(c.len(), 1);
        }
    }

    #[test]
    fn same_master_seed_reproduces_the_chain_set() {
        let model = RoomModel::new(16, 16, 0.02);
        let (_, obs) = room_obs(&model, 2);
        let spec = SamplerSpec::Mh { sigma: 0.3 };
        let a = run_experiment(&model, &obs, &spec, None, 50, 2, 11).unwrap();
        let b = run_experiment(&model, &obs, &spec, None, 50, 2, 11).unwrap();
        for (x, y) in a.chains.iter().zip(&b.chains) {
            assert_eq!(x.thetas, y.thetas);
            assert_eq!(x.logps, y.logps);
            assert_eq!(x.accepted, y.accepted);
        }
    }

    #[test]
    fn informed_samplers_require_a_model() {
        let model = RoomModel::new(16, 16, 0.02);
        let (_, obs) = room_obs(&model, 3);
        let err = run_experiment(
            &model,
            &obs,
            &SamplerSpec::InfMh { sigma: 0.3, alpha: 0.7 },
            None,
            5,
            1,
            1,
        );
        assert!(err.is_err());
    }

    #[test]
    fn one_render_per_full_state_iteration() {
        let model = RoomModel::new(16, 16, 0.02);
        let (_, obs) = room_obs(&model, 4);
        // in-support proposals render exactly once per iteration; tiny
        // sigma keeps every proposal inside the support
        let set = run_experiment(
            &model,
            &obs,
            &SamplerSpec::Mh { sigma: 1e-4 },
            None,
            40,
            1,
            5,
        )
        .unwrap();
        // +1 for the initial state evaluation
        assert_eq!(set.renders, 41);
    }

    #[test]
    fn tiles_sweep_renders_once_per_block_update() {
        let model = TilesModel::new(32, 32, 0.02);
        let mut rng = rng_from_seed(6);
        let theta = model.prior_sample(&mut rng);
        let obs = make_observation(&model, &theta, &mut rng).unwrap();
        let set = run_experiment(
            &model,
            &obs,
            &SamplerSpec::Bmhwg { sigma: 1e-4 },
            None,
            12, // two full sweeps over 6 blocks
            1,
            5,
        )
        .unwrap();
        assert_eq!(set.renders, 13);
    }

    #[test]
    fn mhwg_moves_one_dimension_per_iteration() {
        let model = TilesModel::new(16, 16, 0.02);
        let mut rng = rng_from_seed(7);
        let theta = model.prior_sample(&mut rng);
        let obs = make_observation(&model, &theta, &mut rng).unwrap();
        let set = run_experiment(
            &model,
            &obs,
            &SamplerSpec::Mhwg { sigma: 0.9 },
            None,
            24,
            1,
            9,
        )
        .unwrap();
        let trace = &set.chains[0];
        for t in 1..trace.len() {
            let moved: Vec<usize> = (0..24)
                .filter(|&d| trace.thetas[t][d].to_bits() != trace.thetas[t - 1][d].to_bits())
                .collect();
            assert!(moved.len() <= 1, "iteration {t} moved dims {moved:?}");
            if let Some(&d) = moved.first() {
                assert_eq!(d, (t - 1) % 24, "sweep order");
            }
        }
    }
}
