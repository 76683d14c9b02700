//! Experiment harness: config parsing, shipped presets, seeded execution
//! with checkpointed diagnostics, and CSV/JSON output emission.

mod config;
mod output;
mod run;

pub use config::{
    build_kernel, build_target, load_config, parse_config, preset_names, preset_text, ConfigError,
    DiagConfig, ExperimentConfig, KernelConfig, SamplerConfig, TargetConfig, SAMPLER_NAMES,
    TARGET_NAMES,
};
pub use output::{checkpoints_csv, emit_outputs, summary_json, trace_csv, OutputError};
pub use run::{
    budget_of, direct_sampling_kl, run_experiment, CheckpointRecord, RunError, RunOptions,
    RunResult,
};
