//! Regenerative adaptive sampling: the mixture kernel's global part
//! starts as the prior and is refit (a KDE over all samples drawn so far)
//! at regeneration times, where the chain's future is independent of its
//! past so adaptation cannot break Markov validity.
//!
//! When an accepted state came from the independence component, a
//! regeneration occurs with probability `r(x, y)` computed from the
//! importance ratios `w = pi / T_G` at the previous and new states; on
//! regeneration the new state is discarded and replaced by a fresh draw
//! from the (re-fitted) global proposal.

use crate::error::{Error, Result};
use crate::model::Target;
use crate::proposal::kde_fit;
use crate::samplers::chain::{mh_step, Chain, StepInfo};
use crate::samplers::kernels::MixtureKernel;
use rand::Rng;
use std::sync::Arc;

/// Regeneration probability, piecewise in the importance ratios
/// `w(x) = pi(x) / T_G(x)` and the splitting constant `c`:
/// `max(c/w_x, c/w_y)` when both exceed `c`, `max(w_x/c, w_y/c)` when
/// both are below, and 1 otherwise. Clamped to `[0, 1]`.
pub fn regeneration_probability(w_x: f64, w_y: f64, c: f64) -> Result<f64> {
    if !(w_x > 0.0) || !(w_y > 0.0) || !(c > 0.0) {
        return Err(Error::Domain("regeneration ratios and c must be positive".into()));
    }
    let r = if w_x > c && w_y > c {
        (c / w_x).max(c / w_y)
    } else if w_x < c && w_y < c {
        (w_x / c).max(w_y / c)
    } else {
        1.0
    };
    Ok(r.clamp(0.0, 1.0))
}

/// Log-space variant used by the sampler (the unnormalized ratios can
/// overflow in linear space).
fn regeneration_probability_log(log_wx: f64, log_wy: f64, log_c: f64) -> f64 {
    let r = if log_wx > log_c && log_wy > log_c {
        (log_c - log_wx).max(log_c - log_wy).exp()
    } else if log_wx < log_c && log_wy < log_c {
        (log_wx - log_c).max(log_wy - log_c).exp()
    } else {
        1.0
    };
    r.clamp(0.0, 1.0)
}

pub struct RegMhSampler {
    kernel: MixtureKernel,
    /// log of the splitting constant; set after calibration.
    log_c: Option<f64>,
    /// log w values observed during calibration.
    calibration: Vec<f64>,
    calibration_target: usize,
    /// refit the global proposal at regenerations (disabled for fully
    /// evaluable toy setups where the transition matrix must stay fixed)
    adapt: bool,
    /// iteration indices of tour boundaries
    pub regenerations: Vec<usize>,
    /// bumps exactly when the kernel is adapted
    pub adaptation_version: u64,
}

impl RegMhSampler {
    pub fn new(kernel: MixtureKernel, calibration_target: usize, adapt: bool) -> Self {
        RegMhSampler {
            kernel,
            log_c: None,
            calibration: Vec::new(),
            calibration_target,
            adapt,
            regenerations: Vec::new(),
            adaptation_version: 0,
        }
    }

    pub fn kernel(&self) -> &MixtureKernel {
        &self.kernel
    }

    pub fn log_c(&self) -> Option<f64> {
        self.log_c
    }

    fn log_w(&self, theta: &[f64], logp: f64) -> f64 {
        logp - self.kernel.global().log_density(theta)
    }

    /// One sampler iteration: a mixture MH step, calibration bookkeeping,
    /// and possibly a regeneration that replaces the just-recorded sample.
    pub fn step<T: Target + ?Sized>(&mut self, chain: &mut Chain, target: &T, iter: usize) -> StepInfo {
        let prev = chain.state.current.clone();
        let prev_logp = chain.state.logp;
        let info = mh_step(&mut chain.state, &self.kernel, target, 1.0);
        chain.trace.push(chain.state.current.clone(), chain.state.logp, info.accepted);

        if !info.from_global {
            return info;
        }

        // calibration: the splitting constant is the median observed w
        // over the first `calibration_target` independence proposals
        if self.log_c.is_none() {
            if info.proposal_logp.is_finite() {
                let lw = self.log_w(info.proposal.as_slice(), info.proposal_logp);
                if lw.is_finite() {
                    self.calibration.push(lw);
                }
            }
            if self.calibration.len() >= self.calibration_target && !self.calibration.is_empty() {
                let mut sorted = self.calibration.clone();
                sorted.sort_by(f64::total_cmp);
                self.log_c = Some(sorted[sorted.len() / 2]);
            }
            return info;
        }

        if !info.accepted {
            return info;
        }

        let log_c = self.log_c.unwrap();
        let log_wx = self.log_w(prev.as_slice(), prev_logp);
        let log_wy = self.log_w(chain.state.current.as_slice(), chain.state.logp);
        let r = regeneration_probability_log(log_wx, log_wy, log_c);
        let u: f64 = chain.state.rng.gen();
        if u >= r {
            return info;
        }

        // tour boundary: adapt, then restart the chain from the global
        self.regenerations.push(iter);
        if self.adapt {
            let points: Vec<Vec<f64>> =
                chain.trace.thetas.iter().map(|t| t.values.clone()).collect();
            if let Ok(kde) = kde_fit(points, target.space()) {
                self.kernel.set_global(Arc::new(kde));
                self.adaptation_version += 1;
            }
        }
        for _ in 0..100 {
            let fresh = self.kernel.global().sample(&mut chain.state.rng);
            let theta = crate::space::ParamVector::new(fresh);
            let mut canon = theta;
            target.space().canonicalize(&mut canon);
            let logp = target.log_density(&canon);
            if logp.is_finite() {
                chain.state.current = canon.clone();
                chain.state.logp = logp;
                chain.trace.replace_last(canon, logp, true);
                break;
            }
        }
        info
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn branch_values_match_direct_substitution() {
        let c = 0.8;
        // both above: max(c/w_x, c/w_y)
        assert_eq!(regeneration_probability(4.0 * c, 2.0 * c, c).unwrap(), 0.5);
        // both below: max(w_x/c, w_y/c)
        assert_eq!(regeneration_probability(c / 4.0, c / 2.0, c).unwrap(), 0.5);
        // boundary of the otherwise branch
        assert_eq!(regeneration_probability(c, c, c).unwrap(), 1.0);
        // straddling
        assert_eq!(regeneration_probability(2.0 * c, c / 2.0, c).unwrap(), 1.0);
    }

    #[test]
    fn nonpositive_inputs_are_domain_errors() {
        assert!(regeneration_probability(0.0, 1.0, 1.0).is_err());
        assert!(regeneration_probability(1.0, -1.0, 1.0).is_err());
        assert!(regeneration_probability(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn log_space_variant_agrees_with_linear() {
        for (wx, wy, c) in [(3.0, 0.5, 1.0), (5.0, 7.0, 2.0), (0.1, 0.2, 1.5), (1.0, 1.0, 1.0)] {
            let lin = regeneration_probability(wx, wy, c).unwrap();
            let log = regeneration_probability_log(wx.ln(), wy.ln(), c.ln());
            assert!((lin - log).abs() < 1e-12, "{wx} {wy} {c}");
        }
    }
}
