//! Stepsize and noise schedules: the cyclical cosine stepsize, the
//! Robbins-Monro log-stepsize update and the decaying noise schedule.

use super::Phase;

/// Cosine stepsize at 1-based iteration `t`:
/// `nu_t = (nu0 / 2) [cos(pi mod(t-1, C) / C) + 1]`.
pub fn cosine_stepsize(nu0: f64, t: usize, iterations_per_cycle: usize) -> f64 {
    let c = iterations_per_cycle as f64;
    let frac = ((t - 1) % iterations_per_cycle) as f64 / c;
    nu0 / 2.0 * ((std::f64::consts::PI * frac).cos() + 1.0)
}

/// Robbins-Monro update on the log scale:
/// `exp(log nu + eta_t (alpha_t - alpha_star))`.
pub fn rm_stepsize_update(nu: f64, alpha_t: f64, alpha_star: f64, eta_t: f64) -> f64 {
    (nu.ln() + eta_t * (alpha_t - alpha_star)).exp()
}

/// Vanishing adaptation gain `eta_t = (1 + t)^(-epsilon)`.
pub fn adaptation_gain(t: usize, epsilon: f64) -> f64 {
    (1.0 + t as f64).powf(-epsilon)
}

/// Decaying noise `gamma_t = a (b + t)^(-decay_rate)`.
pub fn noise_schedule(a: f64, b: f64, decay_rate: f64, t: usize) -> f64 {
    a * (b + t as f64).powf(-decay_rate)
}

/// Noise schedule parameters; `decay_rate = 0` reproduces a constant gamma.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSchedule {
    pub a: f64,
    pub b: f64,
    pub decay_rate: f64,
}

impl NoiseSchedule {
    pub fn constant(gamma: f64) -> Self {
        NoiseSchedule {
            a: gamma,
            b: 1.0,
            decay_rate: 0.0,
        }
    }

    pub fn value(&self, t: usize) -> f64 {
        noise_schedule(self.a, self.b, self.decay_rate, t)
    }
}

/// Cycle layout for cKAM: cycle length, exploration fraction and count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleSchedule {
    pub iterations_per_cycle: usize,
    pub exploration_fraction: f64,
    pub num_cycles: usize,
}

impl CycleSchedule {
    pub fn new(iterations_per_cycle: usize, exploration_fraction: f64, num_cycles: usize) -> Self {
        assert!(iterations_per_cycle >= 2, "cycle length must be at least 2");
        assert!(
            exploration_fraction > 0.0 && exploration_fraction < 1.0,
            "exploration fraction must lie in (0, 1)"
        );
        CycleSchedule {
            iterations_per_cycle,
            exploration_fraction,
            num_cycles,
        }
    }

    pub fn total_iterations(&self) -> usize {
        self.iterations_per_cycle * self.num_cycles
    }

    /// Offset of a 0-based iteration within its cycle.
    pub fn position_in_cycle(&self, iteration: usize) -> usize {
        iteration % self.iterations_per_cycle
    }

    /// Exploration iff `mod(t-1, C) / C <= beta` for the 1-based counter `t`.
    pub fn phase(&self, iteration: usize) -> Phase {
        let frac = self.position_in_cycle(iteration) as f64 / self.iterations_per_cycle as f64;
        if frac <= self.exploration_fraction {
            Phase::Exploration
        } else {
            Phase::Sampling
        }
    }
}
