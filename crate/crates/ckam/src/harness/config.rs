//! Experiment configuration: TOML documents with fail-closed parsing, plus
//! the in-repo preset files mirroring the benchmark hyperparameter tables.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernels::KernelSpec;
use crate::targets::Target;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unknown target name {0:?} (expected bimodal2d, mixture5_2d or grid5_highd)")]
    UnknownTarget(String),
    #[error("unknown sampler name {0:?} (expected rw, am, rbam, gam, kam or ckam)")]
    UnknownSampler(String),
    #[error("unknown kernel name {0:?} (expected linear, rbf or matern)")]
    UnknownKernel(String),
    #[error("sampler {sampler:?} requires key {key:?}")]
    MissingKey { sampler: String, key: &'static str },
    #[error("key {key:?} is invalid: {reason}")]
    InvalidKey { key: &'static str, reason: String },
    #[error("no preset named {0:?}; `presets list` shows the available names")]
    UnknownPreset(String),
}

/// Known sampler names.
pub const SAMPLER_NAMES: [&str; 6] = ["rw", "am", "rbam", "gam", "kam", "ckam"];
/// Known target names.
pub const TARGET_NAMES: [&str; 3] = ["bimodal2d", "mixture5_2d", "grid5_highd"];

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub name: String,
    /// Dimension for grid5_highd; the 2-d targets ignore it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lengthscale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    pub name: String,
    /// Initial position theta_0.
    pub init: Vec<f64>,
    /// (Initial) proposal stepsize nu, or the fixed global scale for
    /// AM/GAM. RBAM has no stepsize and uses scale 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stepsize: Option<f64>,
    /// Fixed moment-recursion gain eta (AM, RBAM).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rm_stepsize: Option<f64>,
    /// Vanishing-adaptation rate epsilon in eta_t = (1 + t)^(-epsilon)
    /// (GAM, KAM, cKAM).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rm_rate: Option<f64>,
    /// Optimal acceptance alpha* (GAM, KAM, cKAM).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_star: Option<f64>,
    /// Iterations per cycle for cKAM.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations_per_cycle: Option<usize>,
    /// Exploration fraction beta in (0, 1) for cKAM.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Subsample size m (KAM, cKAM).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsample_size: Option<usize>,
    /// Subsample refresh probability p_t (KAM, cKAM); default 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adapt_prob: Option<f64>,
    /// Noise schedule gamma_t = a (b + t)^(-decay); defaults reproduce the
    /// constant gamma = 0.2.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_decay: Option<f64>,
    /// Burn-in iterations for the non-cyclical samplers. If absent, 10% of
    /// the iteration budget (0 for wall-clock budgets).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burnin: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DiagConfig {
    /// Histogram cells per axis for the 2-d grid KL.
    pub grid_cells: usize,
    /// Bins for the per-dimension marginal KL.
    pub marginal_bins: usize,
}

impl Default for DiagConfig {
    fn default() -> Self {
        DiagConfig {
            grid_cells: 50,
            marginal_bins: 50,
        }
    }
}

fn default_checkpoint_every() -> usize {
    1000
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Display name; presets use "<family>/<sampler>".
    #[serde(default)]
    pub name: String,
    pub seed: u64,
    /// Iteration budget. Exactly one of `budget_iterations` and
    /// `budget_seconds` must be set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget_iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget_seconds: Option<f64>,
    #[serde(default = "default_checkpoint_every")]
    pub checkpoint_every: usize,
    pub target: TargetConfig,
    pub sampler: SamplerConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelConfig>,
    #[serde(default)]
    pub diag: DiagConfig,
}

const PRESETS: [(&str, &str); 18] = [
    ("bimodal/rw", include_str!("../../presets/bimodal/rw.toml")),
    ("bimodal/am", include_str!("../../presets/bimodal/am.toml")),
    (
        "bimodal/rbam",
        include_str!("../../presets/bimodal/rbam.toml"),
    ),
    (
        "bimodal/gam",
        include_str!("../../presets/bimodal/gam.toml"),
    ),
    (
        "bimodal/kam",
        include_str!("../../presets/bimodal/kam.toml"),
    ),
    (
        "bimodal/ckam",
        include_str!("../../presets/bimodal/ckam.toml"),
    ),
    (
        "mixture5/rw",
        include_str!("../../presets/mixture5/rw.toml"),
    ),
    (
        "mixture5/am",
        include_str!("../../presets/mixture5/am.toml"),
    ),
    (
        "mixture5/rbam",
        include_str!("../../presets/mixture5/rbam.toml"),
    ),
    (
        "mixture5/gam",
        include_str!("../../presets/mixture5/gam.toml"),
    ),
    (
        "mixture5/kam",
        include_str!("../../presets/mixture5/kam.toml"),
    ),
    (
        "mixture5/ckam",
        include_str!("../../presets/mixture5/ckam.toml"),
    ),
    ("highd/rw", include_str!("../../presets/highd/rw.toml")),
    ("highd/am", include_str!("../../presets/highd/am.toml")),
    ("highd/rbam", include_str!("../../presets/highd/rbam.toml")),
    ("highd/gam", include_str!("../../presets/highd/gam.toml")),
    ("highd/kam", include_str!("../../presets/highd/kam.toml")),
    ("highd/ckam", include_str!("../../presets/highd/ckam.toml")),
];

/// Names of the shipped presets, in listing order.
pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

/// Returns the raw TOML text of a preset.
pub fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
}

/// Loads a config from a file path or, failing that, a preset name.
pub fn load_config(spec: &str) -> Result<ExperimentConfig, ConfigError> {
    let path = Path::new(spec);
    let text = if path.is_file() {
        std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: spec.to_string(),
            source,
        })?
    } else if let Some(text) = preset_text(spec) {
        text.to_string()
    } else if spec.ends_with(".toml")
        || spec.contains(std::path::MAIN_SEPARATOR) && path.extension().is_some()
    {
        return Err(ConfigError::Io {
            path: spec.to_string(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
        });
    } else {
        return Err(ConfigError::UnknownPreset(spec.to_string()));
    };
    parse_config(&text)
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let config: ExperimentConfig = toml::from_str(text)?;
    validate(&config)?;
    Ok(config)
}

fn require<T: Copy>(value: Option<T>, sampler: &str, key: &'static str) -> Result<T, ConfigError> {
    value.ok_or_else(|| ConfigError::MissingKey {
        sampler: sampler.to_string(),
        key,
    })
}

fn check_positive(value: f64, key: &'static str) -> Result<(), ConfigError> {
    if !(value > 0.0) {
        return Err(ConfigError::InvalidKey {
            key,
            reason: format!("must be positive, got {value}"),
        });
    }
    Ok(())
}

fn validate(config: &ExperimentConfig) -> Result<(), ConfigError> {
    if !TARGET_NAMES.contains(&config.target.name.as_str()) {
        return Err(ConfigError::UnknownTarget(config.target.name.clone()));
    }
    let sampler = config.sampler.name.as_str();
    if !SAMPLER_NAMES.contains(&sampler) {
        return Err(ConfigError::UnknownSampler(sampler.to_string()));
    }
    match (config.budget_iterations, config.budget_seconds) {
        (None, None) => {
            return Err(ConfigError::InvalidKey {
                key: "budget_iterations",
                reason: "exactly one of budget_iterations and budget_seconds is required; \
                         neither is set"
                    .to_string(),
            });
        }
        (Some(_), Some(_)) => {
            return Err(ConfigError::InvalidKey {
                key: "budget_seconds",
                reason: "budget_iterations is also set; the budget must be unambiguous".to_string(),
            });
        }
        _ => {}
    }
    if let Some(s) = config.budget_seconds {
        check_positive(s, "budget_seconds")?;
    }
    if config.checkpoint_every == 0 {
        return Err(ConfigError::InvalidKey {
            key: "checkpoint_every",
            reason: "must be at least 1".to_string(),
        });
    }
    if config.sampler.init.is_empty() {
        return Err(ConfigError::InvalidKey {
            key: "sampler.init",
            reason: "initial position must be non-empty".to_string(),
        });
    }
    let expected_dim = match config.target.name.as_str() {
        "grid5_highd" => {
            let d = require(config.target.dimension, sampler, "target.dimension")?;
            if d == 0 {
                return Err(ConfigError::InvalidKey {
                    key: "target.dimension",
                    reason: "must be at least 1".to_string(),
                });
            }
            d
        }
        _ => 2,
    };
    if config.sampler.init.len() != expected_dim {
        return Err(ConfigError::InvalidKey {
            key: "sampler.init",
            reason: format!(
                "target {} has dimension {expected_dim} but init has length {}",
                config.target.name,
                config.sampler.init.len()
            ),
        });
    }
    match sampler {
        "rw" => {
            check_positive(
                require(config.sampler.stepsize, sampler, "sampler.stepsize")?,
                "sampler.stepsize",
            )?;
        }
        "am" => {
            check_positive(
                require(config.sampler.stepsize, sampler, "sampler.stepsize")?,
                "sampler.stepsize",
            )?;
            check_positive(
                require(config.sampler.rm_stepsize, sampler, "sampler.rm_stepsize")?,
                "sampler.rm_stepsize",
            )?;
        }
        "rbam" => {
            check_positive(
                require(config.sampler.rm_stepsize, sampler, "sampler.rm_stepsize")?,
                "sampler.rm_stepsize",
            )?;
        }
        "gam" => {
            check_positive(
                require(config.sampler.stepsize, sampler, "sampler.stepsize")?,
                "sampler.stepsize",
            )?;
            check_positive(
                require(config.sampler.rm_rate, sampler, "sampler.rm_rate")?,
                "sampler.rm_rate",
            )?;
            require(config.sampler.alpha_star, sampler, "sampler.alpha_star")?;
        }
        "kam" | "ckam" => {
            check_positive(
                require(config.sampler.stepsize, sampler, "sampler.stepsize")?,
                "sampler.stepsize",
            )?;
            check_positive(
                require(config.sampler.rm_rate, sampler, "sampler.rm_rate")?,
                "sampler.rm_rate",
            )?;
            require(config.sampler.alpha_star, sampler, "sampler.alpha_star")?;
            let m = require(
                config.sampler.subsample_size,
                sampler,
                "sampler.subsample_size",
            )?;
            if m == 0 {
                return Err(ConfigError::InvalidKey {
                    key: "sampler.subsample_size",
                    reason: "must be at least 1".to_string(),
                });
            }
            if let Some(p) = config.sampler.adapt_prob {
                if !(0.0..=1.0).contains(&p) {
                    return Err(ConfigError::InvalidKey {
                        key: "sampler.adapt_prob",
                        reason: format!("must lie in [0, 1], got {p}"),
                    });
                }
            }
            let kernel = config.kernel.as_ref().ok_or(ConfigError::MissingKey {
                sampler: sampler.to_string(),
                key: "kernel",
            })?;
            build_kernel(kernel)?;
            if sampler == "ckam" {
                let c = require(
                    config.sampler.iterations_per_cycle,
                    sampler,
                    "sampler.iterations_per_cycle",
                )?;
                if c < 2 {
                    return Err(ConfigError::InvalidKey {
                        key: "sampler.iterations_per_cycle",
                        reason: "must be at least 2".to_string(),
                    });
                }
                let beta = require(config.sampler.beta, sampler, "sampler.beta")?;
                if !(beta > 0.0 && beta < 1.0) {
                    return Err(ConfigError::InvalidKey {
                        key: "sampler.beta",
                        reason: format!("must lie in (0, 1), got {beta}"),
                    });
                }
            }
        }
        _ => unreachable!("name already validated"),
    }
    if config.diag.grid_cells == 0 || config.diag.marginal_bins == 0 {
        return Err(ConfigError::InvalidKey {
            key: "diag.grid_cells",
            reason: "grid_cells and marginal_bins must be at least 1".to_string(),
        });
    }
    Ok(())
}

/// Builds the target from its config section.
pub fn build_target(config: &TargetConfig) -> Result<Target, ConfigError> {
    match config.name.as_str() {
        "bimodal2d" => Ok(Target::bimodal2d()),
        "mixture5_2d" => Ok(Target::mixture5_2d()),
        "grid5_highd" => {
            let d = config.dimension.ok_or(ConfigError::MissingKey {
                sampler: "grid5_highd".to_string(),
                key: "target.dimension",
            })?;
            Target::grid5_highd(d).map_err(|e| ConfigError::InvalidKey {
                key: "target.dimension",
                reason: e.to_string(),
            })
        }
        other => Err(ConfigError::UnknownTarget(other.to_string())),
    }
}

/// Builds the kernel from its config section.
pub fn build_kernel(config: &KernelConfig) -> Result<KernelSpec, ConfigError> {
    let invalid = |reason: String| ConfigError::InvalidKey {
        key: "kernel",
        reason,
    };
    match config.name.as_str() {
        "linear" => Ok(KernelSpec::linear()),
        "rbf" => {
            let l = config.lengthscale.ok_or(ConfigError::MissingKey {
                sampler: "rbf".to_string(),
                key: "kernel.lengthscale",
            })?;
            KernelSpec::rbf(l).map_err(|e| invalid(e.to_string()))
        }
        "matern" => {
            let l = config.lengthscale.ok_or(ConfigError::MissingKey {
                sampler: "matern".to_string(),
                key: "kernel.lengthscale",
            })?;
            let v = config.order.ok_or(ConfigError::MissingKey {
                sampler: "matern".to_string(),
                key: "kernel.order",
            })?;
            KernelSpec::matern(v, l).map_err(|e| invalid(e.to_string()))
        }
        other => Err(ConfigError::UnknownKernel(other.to_string())),
    }
}
