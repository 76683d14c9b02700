//! Baseline samplers: random walk and the adaptive Metropolis family.

use rand::Rng;
use rand_distr::StandardNormal;

use super::schedule::adaptation_gain;
use super::{metropolis_decision, ChainState, Sampler, SamplerError, StepInfo};
use crate::linalg::{cholesky_with_jitter, mvn_sample};
use crate::targets::Target;
use crate::Position;

const JITTER_ATTEMPTS: usize = 3;

/// Random walk Metropolis with isotropic proposal N(theta, nu^2 I).
pub struct RandomWalk;

impl Sampler for RandomWalk {
    fn step(&mut self, state: &mut ChainState, target: &Target) -> Result<StepInfo, SamplerError> {
        let nu = state.stepsize;
        let d = state.dimension();
        let noise = Position::from_fn(d, |_, _| state.rng.sample::<f64, _>(StandardNormal));
        let proposal = &state.position + noise * nu;
        let proposal_ld = target.log_density(&proposal)?;
        let (accepted, alpha) =
            metropolis_decision(&mut state.rng, proposal_ld - state.log_density);
        state.advance(accepted, proposal, proposal_ld);
        Ok(StepInfo {
            accepted,
            acceptance_prob: alpha,
            stepsize: nu,
            phase: None,
            collect: false,
        })
    }
}

/// Draws from N(theta, scale^2 Sigma_t) and Metropolis-accepts.
fn covariance_proposal_step(
    state: &mut ChainState,
    target: &Target,
    scale: f64,
) -> Result<(bool, f64, Position), SamplerError> {
    let cov = &state.cov_estimate * (scale * scale);
    let chol = cholesky_with_jitter(&cov, JITTER_ATTEMPTS).ok_or(SamplerError::CovarianceNotSpd)?;
    let proposal = mvn_sample(&state.position, &chol, &mut state.rng);
    let proposal_ld = target.log_density(&proposal)?;
    let (accepted, alpha) = metropolis_decision(&mut state.rng, proposal_ld - state.log_density);
    let kept = if accepted {
        proposal.clone()
    } else {
        state.position.clone()
    };
    state.advance(accepted, proposal, proposal_ld);
    Ok((accepted, alpha, kept))
}

/// Exponentially weighted mean/covariance recursion around `point`:
/// mu += eta (point - mu); Sigma += eta ((point - mu)(point - mu)^T - Sigma),
/// both using the pre-update mean.
fn update_moments(state: &mut ChainState, point: &Position, eta: f64) {
    let diff = point - &state.mean_estimate;
    let outer = &diff * diff.transpose();
    state.cov_estimate += (outer - &state.cov_estimate) * eta;
    state.mean_estimate += diff * eta;
}

/// Adaptive Metropolis: learned covariance, fixed stepsize and fixed
/// adaptation gain.
pub struct AdaptiveMetropolis {
    /// Fixed recursion gain eta.
    pub gain: f64,
}

impl Sampler for AdaptiveMetropolis {
    fn step(&mut self, state: &mut ChainState, target: &Target) -> Result<StepInfo, SamplerError> {
        let nu = state.stepsize;
        let (accepted, alpha, kept) = covariance_proposal_step(state, target, nu)?;
        update_moments(state, &kept, self.gain);
        Ok(StepInfo {
            accepted,
            acceptance_prob: alpha,
            stepsize: nu,
            phase: None,
            collect: false,
        })
    }
}

/// Rao-Blackwellised AM: the moment recursion is fed the expected next
/// position alpha * theta' + (1 - alpha) * theta_t instead of the realized
/// one. The proposal scale stays fixed (the global scale is 1).
pub struct RaoBlackwellisedAm {
    pub gain: f64,
}

impl Sampler for RaoBlackwellisedAm {
    fn step(&mut self, state: &mut ChainState, target: &Target) -> Result<StepInfo, SamplerError> {
        let scale = state.stepsize;
        let current = state.position.clone();
        let cov = &state.cov_estimate * (scale * scale);
        let chol =
            cholesky_with_jitter(&cov, JITTER_ATTEMPTS).ok_or(SamplerError::CovarianceNotSpd)?;
        let proposal = mvn_sample(&current, &chol, &mut state.rng);
        let proposal_ld = target.log_density(&proposal)?;
        let (accepted, alpha) =
            metropolis_decision(&mut state.rng, proposal_ld - state.log_density);
        let rb_point = &proposal * alpha + &current * (1.0 - alpha);
        state.advance(accepted, proposal, proposal_ld);
        update_moments(state, &rb_point, self.gain);
        Ok(StepInfo {
            accepted,
            acceptance_prob: alpha,
            stepsize: scale,
            phase: None,
            collect: false,
        })
    }
}

/// AM with a global stepsize adapting toward the optimal acceptance rate;
/// all recursions use the vanishing gain eta_t = (1 + t)^(-epsilon).
pub struct GlobalAdaptiveMetropolis {
    pub epsilon: f64,
    pub alpha_star: f64,
}

impl Sampler for GlobalAdaptiveMetropolis {
    fn step(&mut self, state: &mut ChainState, target: &Target) -> Result<StepInfo, SamplerError> {
        let lambda = state.stepsize;
        let eta = adaptation_gain(state.iteration, self.epsilon);
        let (accepted, alpha, kept) = covariance_proposal_step(state, target, lambda)?;
        update_moments(state, &kept, eta);
        state.stepsize = (lambda.ln() + eta * (alpha - self.alpha_star)).exp();
        Ok(StepInfo {
            accepted,
            acceptance_prob: alpha,
            stepsize: lambda,
            phase: None,
            collect: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::GaussianComponent;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn standard_normal_1d() -> Target {
        Target::explicit_mixture(vec![GaussianComponent {
            mean: Position::zeros(1),
            covariance: DMatrix::identity(1, 1),
            weight: 1.0,
        }])
        .unwrap()
    }

    #[test]
    fn rw_accepts_stationary_proposal() {
        // With an effectively zero stepsize the proposal equals the current
        // point and the Metropolis ratio is 1.
        let target = standard_normal_1d();
        let mut state = ChainState::new(Position::zeros(1), &target, 1e-300, 0.0, 1).unwrap();
        let mut sampler = RandomWalk;
        for _ in 0..50 {
            let info = sampler.step(&mut state, &target).unwrap();
            assert!(info.accepted);
            assert_relative_eq!(info.acceptance_prob, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn rw_matches_standard_normal_moments() {
        let target = standard_normal_1d();
        let mut state = ChainState::new(Position::zeros(1), &target, 2.4, 0.0, 42).unwrap();
        let mut sampler = RandomWalk;
        let n = 50_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            sampler.step(&mut state, &target).unwrap();
            sum += state.position[0];
            sum_sq += state.position[0] * state.position[0];
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.05, "mean = {mean}");
        assert!((var - 1.0).abs() < 0.1, "var = {var}");
    }

    #[test]
    fn metropolis_rule_acceptance_frequency() {
        // A move with log-density lower by log 2 accepts with rate 1/2.
        let mut rng = StdRng::seed_from_u64(0);
        let trials = 10_000;
        let mut accepted = 0;
        for _ in 0..trials {
            let (acc, alpha) = metropolis_decision(&mut rng, -(2f64.ln()));
            assert_relative_eq!(alpha, 0.5);
            if acc {
                accepted += 1;
            }
        }
        let rate = accepted as f64 / trials as f64;
        assert!((rate - 0.5).abs() < 0.02, "rate = {rate}");
    }

    #[test]
    fn am_first_step_matches_rw_with_identity_covariance() {
        let target = standard_normal_1d();
        let mut rw_state = ChainState::new(Position::zeros(1), &target, 0.7, 0.0, 9).unwrap();
        let mut am_state = ChainState::new(Position::zeros(1), &target, 0.7, 0.0, 9).unwrap();
        RandomWalk.step(&mut rw_state, &target).unwrap();
        AdaptiveMetropolis { gain: 0.1 }
            .step(&mut am_state, &target)
            .unwrap();
        assert_relative_eq!(rw_state.position[0], am_state.position[0], epsilon = 1e-14);
    }

    #[test]
    fn gam_scale_fixed_at_target_acceptance() {
        // Feed the scale update directly: alpha == alpha_star leaves it be.
        let lambda = 1.37f64;
        let eta = adaptation_gain(5, 0.75);
        let updated = (lambda.ln() + eta * (0.234 - 0.234)).exp();
        assert_relative_eq!(updated, lambda);
    }

    #[test]
    fn am_recursion_matches_direct_recomputation() {
        // Apply the recursion to a fixed point stream and compare against a
        // direct exponentially weighted covariance computed from scratch.
        let target = standard_normal_1d();
        let mut state =
            ChainState::new(Position::from_row_slice(&[0.5]), &target, 1.0, 0.0, 3).unwrap();
        let eta = 0.1;
        let mut rng = StdRng::seed_from_u64(12);
        let points: Vec<Position> = (0..200)
            .map(|_| Position::from_row_slice(&[rng.random_range(-2.0..2.0)]))
            .collect();
        for p in &points {
            update_moments(&mut state, p, eta);
        }
        // Direct recomputation.
        let mut mu = 0.5f64;
        let mut sigma = 1.0f64;
        for p in &points {
            let diff = p[0] - mu;
            sigma += eta * (diff * diff - sigma);
            mu += eta * diff;
        }
        assert!((state.mean_estimate[0] - mu).abs() <= 1e-10);
        assert!((state.cov_estimate[(0, 0)] - sigma).abs() <= 1e-10);
    }

    #[test]
    fn am_family_matches_standard_normal_moments() {
        let target = standard_normal_1d();
        let samplers: Vec<Box<dyn Sampler>> = vec![
            Box::new(AdaptiveMetropolis { gain: 0.1 }),
            Box::new(RaoBlackwellisedAm { gain: 0.1 }),
            Box::new(GlobalAdaptiveMetropolis {
                epsilon: 0.75,
                alpha_star: 0.234,
            }),
        ];
        for mut sampler in samplers {
            let mut state = ChainState::new(Position::zeros(1), &target, 2.4, 0.0, 77).unwrap();
            let n = 50_000;
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..n {
                sampler.step(&mut state, &target).unwrap();
                sum += state.position[0];
                sum_sq += state.position[0] * state.position[0];
            }
            let mean = sum / n as f64;
            let var = sum_sq / n as f64 - mean * mean;
            assert!(mean.abs() < 0.05, "mean = {mean}");
            assert!((var - 1.0).abs() < 0.1, "var = {var}");
        }
    }
}
