//! Six samplers behind a uniform step interface: random walk (RW), adaptive
//! Metropolis (AM), Rao-Blackwellised AM (RBAM), globally scaled AM (GAM),
//! kernel adaptive Metropolis (KAM) and cyclical KAM (cKAM).

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::kernels::KernelError;
use crate::targets::{Target, TargetError};
use crate::Position;

mod baselines;
mod ckam;
mod kam;
mod schedule;

pub use baselines::{AdaptiveMetropolis, GlobalAdaptiveMetropolis, RandomWalk, RaoBlackwellisedAm};
pub use ckam::{ckam_run, CyclicalKam, TraceRecord};
pub use kam::{KamProposal, KernelAdaptiveMetropolis};
pub use schedule::{
    adaptation_gain, cosine_stepsize, noise_schedule, rm_stepsize_update, CycleSchedule,
    NoiseSchedule,
};

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error(transparent)]
    Target(#[from] TargetError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("covariance is not positive definite after jitter retries")]
    CovarianceNotSpd,
    #[error("stepsize must be positive, got {0}")]
    NonPositiveStepsize(f64),
}

/// Which part of a run an iteration belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Burnin,
    Exploration,
    Sampling,
    Collected,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Burnin => "burnin",
            Phase::Exploration => "exploration",
            Phase::Sampling => "sampling",
            Phase::Collected => "collected",
        }
    }
}

/// Result of one Markov chain step.
#[derive(Debug, Clone, Copy)]
pub struct StepInfo {
    pub accepted: bool,
    pub acceptance_prob: f64,
    /// Stepsize used for this step's proposal.
    pub stepsize: f64,
    /// `Some` for phase-aware samplers (cKAM); `None` for samplers whose
    /// burn-in split is decided by the caller.
    pub phase: Option<Phase>,
    /// Whether a phase-aware sampler collects this iteration's position.
    pub collect: bool,
}

/// Mutable chain state shared by all samplers.
pub struct ChainState {
    pub position: Position,
    /// Completed iterations; the schedule formulas use `iteration + 1` as
    /// their 1-based counter.
    pub iteration: usize,
    /// Cached `target.log_density(position)`.
    pub log_density: f64,
    /// Current stepsize (nu, or the global scale for GAM/RBAM).
    pub stepsize: f64,
    /// Current exploration noise gamma.
    pub noise: f64,
    /// All visited states, `history[0]` being the initial position.
    pub history: Vec<Position>,
    /// Current KAM subsample z.
    pub subsample: Vec<Position>,
    /// Running mean estimate (AM family).
    pub mean_estimate: Position,
    /// Running covariance estimate (AM family).
    pub cov_estimate: DMatrix<f64>,
    pub rng: ChaCha8Rng,
}

impl ChainState {
    pub fn new(
        position: Position,
        target: &Target,
        stepsize: f64,
        noise: f64,
        seed: u64,
    ) -> Result<Self, SamplerError> {
        if !(stepsize > 0.0) {
            return Err(SamplerError::NonPositiveStepsize(stepsize));
        }
        let log_density = target.log_density(&position)?;
        let d = position.len();
        Ok(ChainState {
            history: vec![position.clone()],
            mean_estimate: position.clone(),
            cov_estimate: DMatrix::identity(d, d),
            position,
            iteration: 0,
            log_density,
            stepsize,
            noise,
            subsample: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn dimension(&self) -> usize {
        self.position.len()
    }

    /// Applies the accept/reject outcome and advances the iteration counter.
    fn advance(&mut self, accepted: bool, proposal: Position, proposal_log_density: f64) {
        if accepted {
            self.position = proposal;
            self.log_density = proposal_log_density;
        }
        self.history.push(self.position.clone());
        self.iteration += 1;
    }
}

/// Draws the accept/reject decision for a log acceptance ratio.
///
/// Returns the acceptance probability `alpha = min(1, exp(log_ratio))` and
/// the decision. The uniform draw happens unconditionally so the RNG stream
/// does not depend on the ratio.
fn metropolis_decision<R: Rng>(rng: &mut R, log_ratio: f64) -> (bool, f64) {
    let alpha = log_ratio.min(0.0).exp();
    let u: f64 = rng.random();
    (u < alpha, alpha)
}

/// A Markov transition kernel advancing a [`ChainState`] toward `target`.
pub trait Sampler {
    fn step(&mut self, state: &mut ChainState, target: &Target) -> Result<StepInfo, SamplerError>;

    /// Resets per-run internal bookkeeping (cycle counters, frozen
    /// covariances). Stateless samplers need not override.
    fn reset(&mut self) {}
}

/// Iteration or wall-clock budget for a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Budget {
    Iterations(usize),
    Seconds(f64),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_state_caches_log_density() {
        let target = Target::bimodal2d();
        let pos = Position::from_row_slice(&[-8.0, 0.0]);
        let state = ChainState::new(pos.clone(), &target, 1.0, 0.2, 1).unwrap();
        assert_eq!(state.log_density, target.log_density(&pos).unwrap());
        assert_eq!(state.history.len(), 1);
    }

    #[test]
    fn nonpositive_stepsize_rejected() {
        let target = Target::bimodal2d();
        let pos = Position::from_row_slice(&[0.0, 0.0]);
        assert!(matches!(
            ChainState::new(pos, &target, 0.0, 0.2, 1),
            Err(SamplerError::NonPositiveStepsize(_))
        ));
    }
}
