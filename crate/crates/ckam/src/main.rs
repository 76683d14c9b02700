//! Experiment runner CLI.
//!
//! Exit codes: 0 success, 2 configuration error, 3 runtime error.
//! Set `CKAM_LOG=quiet` to silence progress lines.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ckam::harness::{
    emit_outputs, load_config, preset_names, run_experiment, ExperimentConfig, RunOptions,
};

#[derive(Parser)]
#[command(name = "ckam", about = "Adaptive MCMC experiment harness", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more experiment configs (file paths or preset names).
    Run {
        /// Config file paths or preset names such as "bimodal/ckam".
        #[arg(required = true)]
        configs: Vec<String>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the budget with a fixed iteration count.
        #[arg(long, conflicts_with = "budget_seconds")]
        budget_iters: Option<usize>,
        /// Overrides the budget with a wall-clock limit in seconds.
        #[arg(long)]
        budget_seconds: Option<f64>,
        /// Output root; each run writes into its own subdirectory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Number of configs to run in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Report iteration counts instead of wall-clock seconds, making
        /// outputs fully deterministic.
        #[arg(long)]
        virtual_clock: bool,
    },
    /// Operations on the shipped presets.
    Presets {
        #[command(subcommand)]
        command: PresetsCommand,
    },
    /// Parse and validate a config, reporting problems.
    Validate { config: String },
}

#[derive(Subcommand)]
enum PresetsCommand {
    /// List the available preset names.
    List,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn quiet() -> bool {
    std::env::var("CKAM_LOG").is_ok_and(|v| v.eq_ignore_ascii_case("quiet"))
}

/// Directory name for one run: the config name with '/' flattened, plus
/// the seed so multi-seed sweeps never collide.
fn run_dir_name(config: &ExperimentConfig, fallback: &str) -> String {
    let base = if config.name.is_empty() {
        fallback.replace(['/', '\\'], "_")
    } else {
        config.name.replace('/', "_")
    };
    format!("{base}_seed{}", config.seed)
}

fn run_one(
    spec: &str,
    seed: Option<u64>,
    budget_iters: Option<usize>,
    budget_seconds: Option<f64>,
    out: &std::path::Path,
    options: RunOptions,
) -> Result<(), u8> {
    let mut config = load_config(spec).map_err(|e| {
        eprintln!("error: {spec}: {e}");
        EXIT_CONFIG
    })?;
    if let Some(s) = seed {
        config.seed = s;
    }
    if let Some(n) = budget_iters {
        config.budget_iterations = Some(n);
        config.budget_seconds = None;
    }
    if let Some(s) = budget_seconds {
        config.budget_seconds = Some(s);
        config.budget_iterations = None;
    }
    let result = run_experiment(&config, options).map_err(|e| {
        eprintln!("error: {spec}: {e}");
        EXIT_RUNTIME
    })?;
    let dir = out.join(run_dir_name(&config, spec));
    emit_outputs(&result, &dir).map_err(|e| {
        eprintln!("error: {spec}: {e}");
        EXIT_RUNTIME
    })?;
    if !quiet() {
        println!(
            "{spec}: {} samples, acceptance {:.3}, {:.2}s -> {}",
            result.samples.len(),
            result.acceptance_rate,
            result.total_seconds,
            dir.display()
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            configs,
            seed,
            budget_iters,
            budget_seconds,
            out,
            jobs,
            virtual_clock,
        } => {
            let options = RunOptions { virtual_clock };
            let jobs = jobs.max(1);
            let mut worst: Option<u8> = None;
            // Fan the independent configs over a fixed-size thread pool;
            // each run owns its state and writes to its own directory.
            for batch in configs.chunks(jobs) {
                let results: Vec<Result<(), u8>> = std::thread::scope(|scope| {
                    let handles: Vec<_> = batch
                        .iter()
                        .map(|spec| {
                            let out = out.clone();
                            scope.spawn(move || {
                                run_one(spec, seed, budget_iters, budget_seconds, &out, options)
                            })
                        })
                        .collect();
                    handles.into_iter().map(|h| h.join().unwrap()).collect()
                });
                for r in results {
                    if let Err(code) = r {
                        worst = Some(worst.map_or(code, |w| w.max(code)));
                    }
                }
            }
            match worst {
                None => ExitCode::SUCCESS,
                Some(code) => ExitCode::from(code),
            }
        }
        Command::Presets {
            command: PresetsCommand::List,
        } => {
            for name in preset_names() {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match load_config(&config) {
            Ok(parsed) => {
                println!(
                    "ok: {} ({} on {})",
                    config, parsed.sampler.name, parsed.target.name
                );
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {config}: {e}");
                ExitCode::from(EXIT_CONFIG)
            }
        },
    }
}
