//! Experiment execution: builds the configured sampler, runs it to budget
//! and computes checkpointed diagnostics.

use std::time::Instant;

use thiserror::Error;

use super::config::{build_kernel, build_target, ConfigError, ExperimentConfig};
use crate::diagnostics::{
    effective_sample_size_multi, histogram_2d, marginal_mean_symmetric_kl, symmetric_kl,
    DiagnosticsError, MeshSpec, DEFAULT_SMOOTHING_EPS,
};
use crate::samplers::{
    AdaptiveMetropolis, Budget, ChainState, CycleSchedule, CyclicalKam, GlobalAdaptiveMetropolis,
    KamProposal, KernelAdaptiveMetropolis, NoiseSchedule, Phase, RandomWalk, RaoBlackwellisedAm,
    Sampler, SamplerError, TraceRecord,
};
use crate::targets::Target;
use crate::Position;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("sampler failed at iteration {iteration} (seed {seed}): {source}")]
    Sampler {
        iteration: usize,
        seed: u64,
        source: SamplerError,
    },
    #[error("diagnostics failed at iteration {iteration}: {source}")]
    Diagnostics {
        iteration: usize,
        source: DiagnosticsError,
    },
}

/// One checkpoint of the convergence diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckpointRecord {
    pub wall_clock_s: f64,
    pub sym_kl: f64,
    pub ess: f64,
}

/// Everything a run produces before serialization.
pub struct RunResult {
    pub config: ExperimentConfig,
    pub samples: Vec<Position>,
    pub trace: Vec<TraceRecord>,
    pub checkpoints: Vec<CheckpointRecord>,
    pub acceptance_rate: f64,
    pub total_seconds: f64,
}

/// Execution knobs that are not part of the experiment definition.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Replaces wall-clock seconds with the iteration count, making every
    /// output column deterministic.
    pub virtual_clock: bool,
}

/// Minimum collected samples before a checkpoint is emitted.
const MIN_CHECKPOINT_SAMPLES: usize = 10;

fn build_sampler(config: &ExperimentConfig) -> Result<Box<dyn Sampler>, ConfigError> {
    let s = &config.sampler;
    let noise = NoiseSchedule {
        a: s.noise_a.unwrap_or(0.2),
        b: s.noise_b.unwrap_or(1.0),
        decay_rate: s.noise_decay.unwrap_or(0.0),
    };
    Ok(match s.name.as_str() {
        "rw" => Box::new(RandomWalk),
        "am" => Box::new(AdaptiveMetropolis {
            gain: s.rm_stepsize.expect("validated"),
        }),
        "rbam" => Box::new(RaoBlackwellisedAm {
            gain: s.rm_stepsize.expect("validated"),
        }),
        "gam" => Box::new(GlobalAdaptiveMetropolis {
            epsilon: s.rm_rate.expect("validated"),
            alpha_star: s.alpha_star.expect("validated"),
        }),
        "kam" => {
            let kernel = build_kernel(config.kernel.as_ref().expect("validated"))?;
            Box::new(KernelAdaptiveMetropolis {
                proposal: KamProposal {
                    kernel,
                    subsample_size: s.subsample_size.expect("validated"),
                },
                epsilon: s.rm_rate.expect("validated"),
                alpha_star: s.alpha_star.expect("validated"),
                adapt_prob: s.adapt_prob.unwrap_or(1.0),
                noise,
            })
        }
        "ckam" => {
            let kernel = build_kernel(config.kernel.as_ref().expect("validated"))?;
            let c = s.iterations_per_cycle.expect("validated");
            let beta = s.beta.expect("validated");
            Box::new(CyclicalKam::new(
                KamProposal {
                    kernel,
                    subsample_size: s.subsample_size.expect("validated"),
                },
                CycleSchedule::new(c, beta, usize::MAX / c.max(1)),
                s.rm_rate.expect("validated"),
                s.alpha_star.expect("validated"),
                s.adapt_prob.unwrap_or(1.0),
                noise,
            ))
        }
        other => return Err(ConfigError::UnknownSampler(other.to_string())),
    })
}

/// The initial stepsize fed to [`ChainState`]; RBAM carries no stepsize and
/// runs at global scale 1.
fn initial_stepsize(config: &ExperimentConfig) -> f64 {
    config.sampler.stepsize.unwrap_or(1.0)
}

fn burnin_iterations(config: &ExperimentConfig) -> usize {
    match (config.sampler.burnin, config.budget_iterations) {
        (Some(b), _) => b,
        (None, Some(n)) => n / 10,
        (None, None) => 0,
    }
}

/// Symmetric KL of the samples against the target: grid KL in 2-d,
/// mean marginal KL otherwise.
fn sample_kl(
    target: &Target,
    samples: &[Position],
    config: &ExperimentConfig,
) -> Result<f64, DiagnosticsError> {
    if target.dimension() == 2 {
        let xs = target.marginal_support(0).map_err(DiagnosticsError::from)?;
        let ys = target.marginal_support(1).map_err(DiagnosticsError::from)?;
        let mesh = MeshSpec::new(
            [xs.0, ys.0],
            [xs.1, ys.1],
            config.diag.grid_cells,
            config.diag.grid_cells,
        );
        let truth = target.grid_density(&mesh).map_err(DiagnosticsError::from)?;
        let empirical = histogram_2d(samples, &mesh, DEFAULT_SMOOTHING_EPS)?;
        symmetric_kl(truth.as_slice(), empirical.masses.as_slice())
    } else {
        marginal_mean_symmetric_kl(samples, target, config.diag.marginal_bins)
    }
}

/// Runs the experiment described by `config` to its budget.
pub fn run_experiment(
    config: &ExperimentConfig,
    options: RunOptions,
) -> Result<RunResult, RunError> {
    let target = build_target(&config.target)?;
    let mut sampler = build_sampler(config)?;
    sampler.reset();
    let theta0 = Position::from_row_slice(&config.sampler.init);
    let gamma0 = config.sampler.noise_a.unwrap_or(0.2);
    let mut state = ChainState::new(
        theta0,
        &target,
        initial_stepsize(config),
        gamma0,
        config.seed,
    )
    .map_err(|source| RunError::Sampler {
        iteration: 0,
        seed: config.seed,
        source,
    })?;
    let burnin = burnin_iterations(config);
    let phase_aware = matches!(config.sampler.name.as_str(), "ckam");

    let start = Instant::now();
    let clock = |iteration: usize| {
        if options.virtual_clock {
            iteration as f64
        } else {
            start.elapsed().as_secs_f64()
        }
    };

    let mut samples: Vec<Position> = Vec::new();
    let mut trace: Vec<TraceRecord> = Vec::new();
    let mut checkpoints: Vec<CheckpointRecord> = Vec::new();
    let mut accepted = 0usize;

    loop {
        match (config.budget_iterations, config.budget_seconds) {
            (Some(n), _) => {
                if state.iteration >= n {
                    break;
                }
            }
            (_, Some(s)) => {
                if start.elapsed().as_secs_f64() >= s {
                    break;
                }
            }
            (None, None) => break,
        }
        let info = sampler
            .step(&mut state, &target)
            .map_err(|source| RunError::Sampler {
                iteration: state.iteration,
                seed: config.seed,
                source,
            })?;
        if info.accepted {
            accepted += 1;
        }
        let (phase, collect) = if phase_aware {
            (info.phase.unwrap_or(Phase::Sampling), info.collect)
        } else if state.iteration > burnin {
            (Phase::Collected, true)
        } else {
            (Phase::Burnin, false)
        };
        if collect {
            samples.push(state.position.clone());
        }
        let now = clock(state.iteration);
        trace.push(TraceRecord {
            iteration: state.iteration,
            wall_clock_s: now,
            position: state.position.clone(),
            phase,
            stepsize: info.stepsize,
            accepted: info.accepted,
        });
        if state.iteration % config.checkpoint_every == 0 && samples.len() >= MIN_CHECKPOINT_SAMPLES
        {
            let sym_kl =
                sample_kl(&target, &samples, config).map_err(|source| RunError::Diagnostics {
                    iteration: state.iteration,
                    source,
                })?;
            let ess =
                effective_sample_size_multi(&samples).map_err(|source| RunError::Diagnostics {
                    iteration: state.iteration,
                    source,
                })?;
            // Diagnostics above take time; stamp the checkpoint after them
            // and keep the series strictly increasing.
            let mut t = clock(state.iteration);
            if let Some(last) = checkpoints.last() {
                if t <= last.wall_clock_s {
                    t = last.wall_clock_s + f64::EPSILON * last.wall_clock_s.abs().max(1.0);
                }
            }
            checkpoints.push(CheckpointRecord {
                wall_clock_s: t,
                sym_kl,
                ess,
            });
        }
    }

    let total_iterations = state.iteration.max(1);
    Ok(RunResult {
        config: config.clone(),
        samples,
        trace,
        checkpoints,
        acceptance_rate: accepted as f64 / total_iterations as f64,
        total_seconds: if options.virtual_clock {
            state.iteration as f64
        } else {
            start.elapsed().as_secs_f64()
        },
    })
}

/// Draws the same number of samples directly from the target; the oracle
/// baseline the sampler diagnostics are compared against.
pub fn direct_sampling_kl(config: &ExperimentConfig, n: usize, seed: u64) -> Result<f64, RunError> {
    use rand::SeedableRng;
    let target = build_target(&config.target)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<Position> = (0..n).map(|_| target.sample(&mut rng)).collect();
    sample_kl(&target, &samples, config).map_err(|source| RunError::Diagnostics {
        iteration: 0,
        source,
    })
}

/// Budget for `run_experiment` as the samplers module sees it.
pub fn budget_of(config: &ExperimentConfig) -> Budget {
    match (config.budget_iterations, config.budget_seconds) {
        (Some(n), _) => Budget::Iterations(n),
        (_, Some(s)) => Budget::Seconds(s),
        (None, None) => Budget::Iterations(0),
    }
}
