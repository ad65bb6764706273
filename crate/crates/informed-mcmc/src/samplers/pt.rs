//! Parallel tempering: one chain per temperature targeting `pi^(1/T)`,
//! with a state-swap proposal between two uniformly chosen chains after
//! every sweep. Only the cold (T = 1) chain contributes samples.

use crate::error::{Error, Result};
use crate::model::Target;
use crate::rng::Prng;
use crate::samplers::chain::{mh_step, ChainState};
use crate::samplers::kernels::ProposalKernel;
use rand::Rng;

pub struct PtEnsemble {
    pub states: Vec<ChainState>,
    pub temperatures: Vec<f64>,
    pub swap_rng: Prng,
    pub swaps_accepted: u64,
    pub swaps_proposed: u64,
}

impl PtEnsemble {
    pub fn new(states: Vec<ChainState>, temperatures: Vec<f64>, swap_rng: Prng) -> Result<Self> {
        if states.len() != temperatures.len() || states.len() < 2 {
            return Err(Error::Config("parallel tempering needs >= 2 temperature levels".into()));
        }
        if (temperatures[0] - 1.0).abs() > 1e-12 {
            return Err(Error::Config("the first temperature level must be 1".into()));
        }
        Ok(PtEnsemble { states, temperatures, swap_rng, swaps_accepted: 0, swaps_proposed: 0 })
    }

    pub fn cold(&self) -> &ChainState {
        &self.states[0]
    }
}

/// Log acceptance ratio for swapping states between levels i and j:
/// `(1/T_i - 1/T_j) * (logp_j - logp_i)`.
pub fn swap_log_ratio(lp_i: f64, lp_j: f64, t_i: f64, t_j: f64) -> f64 {
    (1.0 / t_i - 1.0 / t_j) * (lp_j - lp_i)
}

/// Advances every tempered chain one MH step, then proposes one swap
/// between two uniformly chosen distinct levels. Returns whether the cold
/// chain's own MH move was accepted.
pub fn pt_step<T: Target + ?Sized, K: ProposalKernel + ?Sized>(
    ens: &mut PtEnsemble,
    kernel: &K,
    target: &T,
) -> bool {
    let mut cold_accepted = false;
    for (level, state) in ens.states.iter_mut().enumerate() {
        let inv_t = 1.0 / ens.temperatures[level];
        let info = mh_step(state, kernel, target, inv_t);
        if level == 0 {
            cold_accepted = info.accepted;
        }
    }
    // one swap proposal between two uniformly chosen chains
    let n = ens.states.len();
    let i = ens.swap_rng.gen_range(0..n);
    let j_raw = ens.swap_rng.gen_range(0..n - 1);
    let j = if j_raw >= i { j_raw + 1 } else { j_raw };
    let (i, j) = (i.min(j), i.max(j));
    ens.swaps_proposed += 1;
    let log_ratio = swap_log_ratio(
        ens.states[i].logp,
        ens.states[j].logp,
        ens.temperatures[i],
        ens.temperatures[j],
    );
    let u: f64 = ens.swap_rng.gen();
    if log_ratio >= 0.0 || u < log_ratio.exp() {
        ens.swaps_accepted += 1;
        let (a, b) = ens.states.split_at_mut(j);
        std::mem::swap(&mut a[i].current, &mut b[0].current);
        std::mem::swap(&mut a[i].logp, &mut b[0].logp);
    }
    cold_accepted
}
