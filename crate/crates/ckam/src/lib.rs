//! # ckam
//!
//! A Markov chain Monte Carlo library built around cyclical Kernel Adaptive
//! Metropolis (cKAM) and the adaptive samplers it is usually compared against,
//! together with the multimodal benchmark targets and convergence diagnostics
//! used to evaluate them.
//!
//! The crate is organised in five modules:
//!
//! - [`kernels`]: kernel functions (linear, RBF, Matérn), their analytic
//!   gradients, and the RKHS proposal covariance assembly.
//! - [`targets`]: benchmark target distributions as log-density oracles with
//!   analytic one-dimensional marginals.
//! - [`samplers`]: six samplers (RW, AM, RBAM, GAM, KAM, cKAM) behind a
//!   uniform step interface.
//! - [`diagnostics`]: symmetric KL divergence against gridded or marginal
//!   truth, and effective sample size.
//! - [`harness`]: config parsing, experiment presets, seeded execution and
//!   CSV/JSON trace emission.
//!
//! ## Example
//!
//! ```
//! use ckam::harness::{load_config, run_experiment, RunOptions};
//!
//! let mut config = load_config("bimodal/rw").unwrap();
//! config.budget_iterations = Some(2000);
//! config.checkpoint_every = 1000;
//! let result = run_experiment(&config, RunOptions { virtual_clock: true }).unwrap();
//! assert!(!result.samples.is_empty());
//! ```

pub mod diagnostics;
pub mod harness;
pub mod kernels;
mod linalg;
pub mod samplers;
pub mod targets;

/// A point in the state space; the chain's position.
pub type Position = nalgebra::DVector<f64>;
