//! Kernel adaptive Metropolis: proposals are pre-images of RKHS samples,
//! with covariance gamma^2 I + nu^2 M H M^T built from kernel gradients at a
//! random subsample of chain history.

use nalgebra::{Cholesky, DMatrix, Dyn};
use rand::seq::index::sample as sample_indices;
use rand::Rng;

use super::schedule::{adaptation_gain, rm_stepsize_update, NoiseSchedule};
use super::{metropolis_decision, ChainState, Sampler, SamplerError, StepInfo};
use crate::kernels::{centering_matrix, kernel_gradient_matrix, proposal_covariance, KernelSpec};
use crate::linalg::{cholesky_with_jitter, mvn_logpdf, mvn_sample};
use crate::targets::Target;
use crate::Position;

const JITTER_ATTEMPTS: usize = 3;

/// The RKHS pre-image proposal: kernel choice and subsample size.
pub struct KamProposal {
    pub kernel: KernelSpec,
    pub subsample_size: usize,
}

impl KamProposal {
    /// Draws min(m, pool size) positions uniformly without replacement.
    /// The pool is the usable chain history, current position included, so
    /// the draw is always feasible and the t = 0 subsample is the initial
    /// position alone.
    pub fn refresh_subsample<R: Rng>(&self, pool: &[Position], rng: &mut R) -> Vec<Position> {
        let m = self.subsample_size.min(pool.len());
        sample_indices(rng, pool.len(), m)
            .iter()
            .map(|i| pool[i].clone())
            .collect()
    }

    /// Proposal covariance at `theta` for the given subsample.
    pub fn covariance(
        &self,
        theta: &Position,
        subsample: &[Position],
        gamma: f64,
        nu: f64,
    ) -> Result<DMatrix<f64>, SamplerError> {
        let grads = kernel_gradient_matrix(&self.kernel, theta, subsample)?;
        let h = centering_matrix(subsample.len());
        Ok(proposal_covariance(gamma, nu, &grads, &h)?)
    }

    fn factor(&self, cov: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>, SamplerError> {
        cholesky_with_jitter(cov, JITTER_ATTEMPTS).ok_or(SamplerError::CovarianceNotSpd)
    }

    /// Log proposal density q_z(to | from): the multivariate normal centered
    /// at `from` with the covariance built at `from`.
    pub fn log_q(
        &self,
        from: &Position,
        to: &Position,
        subsample: &[Position],
        gamma: f64,
        nu: f64,
    ) -> Result<f64, SamplerError> {
        let cov = self.covariance(from, subsample, gamma, nu)?;
        let chol = self.factor(&cov)?;
        Ok(mvn_logpdf(to, from, &chol))
    }

    /// One asymmetric MH step from `state.position` with fixed subsample.
    /// Returns (proposal, proposal log-density, accepted, alpha).
    pub(super) fn propose_and_decide(
        &self,
        state: &mut ChainState,
        target: &Target,
        subsample: &[Position],
        gamma: f64,
        nu: f64,
    ) -> Result<(Position, f64, bool, f64), SamplerError> {
        let cov_fwd = self.covariance(&state.position, subsample, gamma, nu)?;
        let chol_fwd = self.factor(&cov_fwd)?;
        let proposal = mvn_sample(&state.position, &chol_fwd, &mut state.rng);
        let proposal_ld = target.log_density(&proposal)?;
        let log_q_fwd = mvn_logpdf(&proposal, &state.position, &chol_fwd);

        let cov_bwd = self.covariance(&proposal, subsample, gamma, nu)?;
        let chol_bwd = self.factor(&cov_bwd)?;
        let log_q_bwd = mvn_logpdf(&state.position, &proposal, &chol_bwd);

        let log_ratio = proposal_ld + log_q_bwd - state.log_density - log_q_fwd;
        let (accepted, alpha) = metropolis_decision(&mut state.rng, log_ratio);
        Ok((proposal, proposal_ld, accepted, alpha))
    }
}

/// Plain KAM with Robbins-Monro stepsize adaptation and a decaying noise
/// schedule.
pub struct KernelAdaptiveMetropolis {
    pub proposal: KamProposal,
    /// Robbins-Monro vanishing rate epsilon.
    pub epsilon: f64,
    pub alpha_star: f64,
    /// Probability of refreshing the subsample each iteration.
    pub adapt_prob: f64,
    pub noise: NoiseSchedule,
}

impl KernelAdaptiveMetropolis {
    /// Shared exploration step used by both KAM and cKAM: refresh the
    /// subsample from `pool` with probability `adapt_prob`, take an
    /// asymmetric MH step and adapt nu toward the target acceptance rate.
    ///
    /// `gain_t` is the iteration counter fed to the vanishing gain: global
    /// for plain KAM, cycle-relative for cKAM so every cycle restarts with
    /// full adaptation strength (the warm restart).
    #[allow(clippy::too_many_arguments)]
    pub(super) fn exploration_step(
        proposal: &KamProposal,
        state: &mut ChainState,
        target: &Target,
        pool_start: usize,
        gain_t: usize,
        epsilon: f64,
        alpha_star: f64,
        adapt_prob: f64,
        gamma: f64,
    ) -> Result<StepInfo, SamplerError> {
        let coin: f64 = state.rng.random();
        if state.subsample.is_empty() || coin < adapt_prob {
            let pool = &state.history[pool_start..];
            state.subsample = proposal.refresh_subsample(pool, &mut state.rng);
        }
        let nu = state.stepsize;
        let subsample = std::mem::take(&mut state.subsample);
        let result = proposal.propose_and_decide(state, target, &subsample, gamma, nu);
        state.subsample = subsample;
        let (prop, prop_ld, accepted, alpha) = result?;

        let eta = adaptation_gain(gain_t, epsilon);
        // Clamp so a long run of one-sided updates cannot under- or
        // overflow the stepsize (and everything downstream of it).
        state.stepsize = rm_stepsize_update(nu, alpha, alpha_star, eta).clamp(1e-9, 1e9);
        state.noise = gamma;
        state.advance(accepted, prop, prop_ld);
        Ok(StepInfo {
            accepted,
            acceptance_prob: alpha,
            stepsize: nu,
            phase: None,
            collect: false,
        })
    }
}

impl Sampler for KernelAdaptiveMetropolis {
    fn step(&mut self, state: &mut ChainState, target: &Target) -> Result<StepInfo, SamplerError> {
        let gamma = self.noise.value(state.iteration);
        Self::exploration_step(
            &self.proposal,
            state,
            target,
            0,
            state.iteration,
            self.epsilon,
            self.alpha_star,
            self.adapt_prob,
            gamma,
        )
    }
}
