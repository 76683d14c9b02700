//! Cyclical kernel adaptive Metropolis: cycles of KAM exploration followed
//! by random-walk sampling with a frozen covariance and cosine stepsizes.

use std::time::Instant;

use nalgebra::{Cholesky, DMatrix, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;

use super::kam::{KamProposal, KernelAdaptiveMetropolis};
use super::schedule::{CycleSchedule, NoiseSchedule};
use super::{metropolis_decision, Budget, ChainState, Phase, Sampler, SamplerError, StepInfo};
use crate::linalg::cholesky_with_jitter;
use crate::targets::Target;
use crate::Position;

/// Keeps the sampling-phase proposal from degenerating where the cosine
/// schedule reaches ~0 at the very end of a cycle.
const STEPSIZE_FLOOR_FACTOR: f64 = 1e-6;

struct FrozenCycle {
    /// Theoretical initial stepsize nu_0 for this cycle's cosine schedule.
    nu0: f64,
    /// Cholesky factor of the frozen covariance
    /// (gamma / nu_exp)^2 I + M H M^T.
    chol: Cholesky<f64, Dyn>,
}

/// Per-collected-sample (and per-iteration) trace row.
#[derive(Debug, Clone)]
pub struct TraceRecord {
    pub iteration: usize,
    pub wall_clock_s: f64,
    pub position: Position,
    pub phase: Phase,
    pub stepsize: f64,
    pub accepted: bool,
}

pub struct CyclicalKam {
    pub proposal: KamProposal,
    pub schedule: CycleSchedule,
    pub epsilon: f64,
    pub alpha_star: f64,
    pub adapt_prob: f64,
    pub noise: NoiseSchedule,
    /// First history index of the current cycle; the exploration subsample
    /// never reaches past it.
    cycle_start: usize,
    frozen: Option<FrozenCycle>,
}

impl CyclicalKam {
    pub fn new(
        proposal: KamProposal,
        schedule: CycleSchedule,
        epsilon: f64,
        alpha_star: f64,
        adapt_prob: f64,
        noise: NoiseSchedule,
    ) -> Self {
        CyclicalKam {
            proposal,
            schedule,
            epsilon,
            alpha_star,
            adapt_prob,
            noise,
            cycle_start: 0,
            frozen: None,
        }
    }

    /// Cosine stepsize at the current within-cycle offset, clamped away
    /// from zero at the cycle tail.
    fn sampling_stepsize(&self, nu0: f64, offset: usize) -> f64 {
        let c = self.schedule.iterations_per_cycle as f64;
        let nu = nu0 / 2.0 * ((std::f64::consts::PI * offset as f64 / c).cos() + 1.0);
        nu.max(STEPSIZE_FLOOR_FACTOR * nu0)
    }

    fn freeze(&mut self, state: &mut ChainState) -> Result<(), SamplerError> {
        // Transition: nu_0 from the last exploration stepsize, covariance
        // from the current position and subsample, gamma as of right now.
        let nu_exp = state.stepsize;
        let beta = self.schedule.exploration_fraction;
        let nu0 = 2.0 * nu_exp / ((beta * std::f64::consts::PI).cos() + 1.0);
        if state.subsample.is_empty() {
            // Only reachable if stepping starts mid-cycle; mirror the t = 0
            // exploration behavior.
            state.subsample = vec![state.position.clone()];
        }
        let gamma = state.noise;
        let ratio = gamma / nu_exp;
        let mut cov = self
            .proposal
            .covariance(&state.position, &state.subsample, 0.0, 1.0)?;
        let d = cov.nrows();
        for i in 0..d {
            cov[(i, i)] += ratio * ratio;
        }
        let chol = cholesky_with_jitter(&cov, 3).ok_or(SamplerError::CovarianceNotSpd)?;
        self.frozen = Some(FrozenCycle { nu0, chol });
        Ok(())
    }
}

impl Sampler for CyclicalKam {
    fn step(&mut self, state: &mut ChainState, target: &Target) -> Result<StepInfo, SamplerError> {
        let offset = self.schedule.position_in_cycle(state.iteration);
        if offset == 0 {
            // Warm restart: new cycle, fresh subsample pool and covariance.
            self.cycle_start = state.iteration;
            self.frozen = None;
            state.subsample.clear();
        }
        match self.schedule.phase(state.iteration) {
            Phase::Exploration => {
                // Cycle-relative noise: every exploration phase restarts the
                // decaying schedule, so a cycle's first iterations get the
                // large noise that lets the chain reach distant modes.
                let gamma = self.noise.value(offset);
                let info = KernelAdaptiveMetropolis::exploration_step(
                    &self.proposal,
                    state,
                    target,
                    self.cycle_start,
                    offset,
                    self.epsilon,
                    self.alpha_star,
                    self.adapt_prob,
                    gamma,
                )?;
                Ok(StepInfo {
                    phase: Some(Phase::Exploration),
                    collect: false,
                    ..info
                })
            }
            _ => {
                if self.frozen.is_none() {
                    self.freeze(state)?;
                }
                let frozen = self.frozen.as_ref().expect("frozen at transition");
                let nu_t = self.sampling_stepsize(frozen.nu0, offset);
                let d = state.dimension();
                let z = Position::from_fn(d, |_, _| state.rng.sample::<f64, _>(StandardNormal));
                let proposal = &state.position + frozen.chol.l() * z * nu_t;
                let proposal_ld = target.log_density(&proposal)?;
                let (accepted, alpha) =
                    metropolis_decision(&mut state.rng, proposal_ld - state.log_density);
                state.advance(accepted, proposal, proposal_ld);
                Ok(StepInfo {
                    accepted,
                    acceptance_prob: alpha,
                    stepsize: nu_t,
                    phase: Some(Phase::Sampling),
                    collect: true,
                })
            }
        }
    }

    fn reset(&mut self) {
        self.cycle_start = 0;
        self.frozen = None;
    }
}

/// Runs cKAM to the budget, returning the collected samples (sampling
/// phases only) and the full per-iteration trace.
#[allow(clippy::too_many_arguments)]
pub fn ckam_run(
    theta0: Position,
    target: &Target,
    sampler: &mut CyclicalKam,
    nu_init: f64,
    seed: u64,
    budget: Budget,
) -> Result<(Vec<Position>, Vec<TraceRecord>), SamplerError> {
    let gamma0 = sampler.noise.value(0);
    let mut state = ChainState::new(theta0, target, nu_init, gamma0, seed)?;
    sampler.reset();
    let mut samples = Vec::new();
    let mut trace = Vec::new();
    let start = Instant::now();
    loop {
        match budget {
            Budget::Iterations(n) => {
                if state.iteration >= n {
                    break;
                }
            }
            Budget::Seconds(s) => {
                if start.elapsed().as_secs_f64() >= s {
                    break;
                }
            }
        }
        let info = sampler.step(&mut state, target)?;
        if info.collect {
            samples.push(state.position.clone());
        }
        trace.push(TraceRecord {
            iteration: state.iteration,
            wall_clock_s: start.elapsed().as_secs_f64(),
            position: state.position.clone(),
            phase: info.phase.unwrap_or(Phase::Sampling),
            stepsize: info.stepsize,
            accepted: info.accepted,
        });
    }
    Ok((samples, trace))
}

/// Frozen sampling-phase covariance scaled by the squared cosine stepsize;
/// exposed for tests that verify the covariance is computed once per cycle.
impl CyclicalKam {
    pub fn frozen_covariance(&self) -> Option<DMatrix<f64>> {
        self.frozen.as_ref().map(|f| {
            let l = f.chol.l();
            &l * l.transpose()
        })
    }
}
