//! Chain state, traces, and the Metropolis-Hastings step.

use crate::error::{Error, Result};
use crate::model::Target;
use crate::rng::Prng;
use crate::samplers::kernels::ProposalKernel;
use crate::space::ParamVector;
use rand::Rng;

/// Per-iteration record of a chain; index 0 is the initial state (its
/// accepted flag is false since no proposal produced it).
#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub thetas: Vec<ParamVector>,
    pub logps: Vec<f64>,
    pub accepted: Vec<bool>,
}

impl Trace {
    pub fn with_capacity(n: usize) -> Self {
        Trace {
            thetas: Vec::with_capacity(n),
            logps: Vec::with_capacity(n),
            accepted: Vec::with_capacity(n),
        }
    }

    pub fn push(&mut self, theta: ParamVector, logp: f64, accepted: bool) {
        self.thetas.push(theta);
        self.logps.push(logp);
        self.accepted.push(accepted);
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    /// Replaces the most recent record (regeneration discards the sample
    /// that triggered it).
    pub fn replace_last(&mut self, theta: ParamVector, logp: f64, accepted: bool) {
        let i = self.thetas.len() - 1;
        self.thetas[i] = theta;
        self.logps[i] = logp;
        self.accepted[i] = accepted;
    }
}

/// Mutable chain position: current state, its cached log density, and the
/// chain's generator.
pub struct ChainState {
    pub current: ParamVector,
    pub logp: f64,
    pub rng: Prng,
}

impl ChainState {
    /// Requires an initial state with finite target density.
    pub fn new<T: Target + ?Sized>(target: &T, theta0: ParamVector, rng: Prng) -> Result<Self> {
        let logp = target.log_density(&theta0);
        if !logp.is_finite() {
            return Err(Error::Degenerate("initial state has zero target density".into()));
        }
        Ok(ChainState { current: theta0, logp, rng })
    }
}

/// A chain with its recorded trace.
pub struct Chain {
    pub state: ChainState,
    pub trace: Trace,
}

impl Chain {
    pub fn new<T: Target + ?Sized>(
        target: &T,
        theta0: ParamVector,
        rng: Prng,
        capacity: usize,
    ) -> Result<Self> {
        let state = ChainState::new(target, theta0, rng)?;
        let mut trace = Trace::with_capacity(capacity + 1);
        trace.push(state.current.clone(), state.logp, false);
        Ok(Chain { state, trace })
    }
}

/// Outcome of one step.
#[derive(Debug, Clone)]
pub struct StepInfo {
    pub accepted: bool,
    pub from_global: bool,
    /// The proposed state and its (possibly -inf) target log density;
    /// the regeneration sampler needs them whether or not accepted.
    pub proposal: ParamVector,
    pub proposal_logp: f64,
}

/// One Metropolis-Hastings accept/reject update of `state` under the
/// tempered target `pi^inv_t` (`inv_t = 1` is the plain posterior).
///
/// The acceptance uniform is always drawn, even for proposals with zero
/// density, so generator streams stay aligned across sampler variants.
/// A non-finite forward proposal density auto-rejects with a warning.
pub fn mh_step<T: Target + ?Sized, K: ProposalKernel + ?Sized>(
    state: &mut ChainState,
    kernel: &K,
    target: &T,
    inv_t: f64,
) -> StepInfo {
    let proposal = kernel.propose(&state.current, &mut state.rng);
    let lp_new = target.log_density(&proposal.theta);
    let log_ratio = if lp_new == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else if kernel.is_symmetric() {
        inv_t * (lp_new - state.logp)
    } else {
        let fwd = kernel.log_density(&state.current, &proposal.theta);
        if !fwd.is_finite() {
            eprintln!("warning: non-finite forward proposal density; auto-rejecting");
            f64::NEG_INFINITY
        } else {
            let rev = kernel.log_density(&proposal.theta, &state.current);
            inv_t * (lp_new - state.logp) + rev - fwd
        }
    };
    let u: f64 = state.rng.gen();
    let accepted = log_ratio >= 0.0 || u < log_ratio.exp();
    if accepted {
        state.current = proposal.theta.clone();
        state.logp = lp_new;
    }
    StepInfo {
        accepted,
        from_global: proposal.from_global,
        proposal: proposal.theta,
        proposal_logp: lp_new,
    }
}

/// Steps the chain and appends the new record to its trace.
pub fn advance<T: Target + ?Sized, K: ProposalKernel + ?Sized>(
    chain: &mut Chain,
    kernel: &K,
    target: &T,
) -> StepInfo {
    let info = mh_step(&mut chain.state, kernel, target, 1.0);
    chain.trace.push(chain.state.current.clone(), chain.state.logp, info.accepted);
    info
}
