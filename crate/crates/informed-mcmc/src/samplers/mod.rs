//! Transition kernels and chain drivers: plain Metropolis-Hastings,
//! within-Gibbs single-dimension and block variants, parallel tempering,
//! the regenerative adaptive sampler, and the informed samplers built on
//! the mixture of a local random walk with a learned global proposal.

pub mod chain;
pub mod kernels;
pub mod pt;
pub mod regen;
pub mod runner;

pub use chain::{mh_step, Chain, ChainState, StepInfo, Trace};
pub use kernels::{LocalKernel, MixtureKernel, Proposal, ProposalKernel, Scope};
pub use pt::{pt_step, PtEnsemble};
pub use regen::{regeneration_probability, RegMhSampler};
pub use runner::{run_experiment, ChainSet, SamplerSpec};
