//! Serialization of run results: trace.csv, checkpoints.csv and
//! summary.json.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use super::run::RunResult;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("failed writing {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("failed serializing summary: {0}")]
    Json(#[from] serde_json::Error),
}

/// Renders a float with 17 significant digits so parsing it back yields the
/// identical binary value.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_file(path: &Path, contents: &str) -> Result<(), OutputError> {
    let io_err = |source| OutputError::Io {
        path: path.display().to_string(),
        source,
    };
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_err)?;
    }
    let mut file = std::fs::File::create(path).map_err(io_err)?;
    file.write_all(contents.as_bytes()).map_err(io_err)
}

/// The `summary.json` payload: config echo plus final scalars. Keys
/// serialize in sorted order.
#[derive(Serialize)]
struct Summary<'a> {
    acceptance_rate: f64,
    config: &'a super::config::ExperimentConfig,
    sample_count: usize,
    total_seconds: f64,
}

pub fn trace_csv(result: &RunResult) -> String {
    let d = result.config.sampler.init.len();
    let mut out = String::from("iter,wall_clock_s,phase,stepsize,accepted");
    for i in 0..d {
        out.push_str(&format!(",x{i}"));
    }
    out.push('\n');
    for r in &result.trace {
        out.push_str(&format!(
            "{},{},{},{},{}",
            r.iteration,
            fmt_f64(r.wall_clock_s),
            r.phase.as_str(),
            fmt_f64(r.stepsize),
            r.accepted as u8,
        ));
        for v in r.position.iter() {
            out.push(',');
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    out
}

pub fn checkpoints_csv(result: &RunResult) -> String {
    let mut out = String::from("wall_clock_s,sym_kl,ess\n");
    for c in &result.checkpoints {
        out.push_str(&format!(
            "{},{},{}\n",
            fmt_f64(c.wall_clock_s),
            fmt_f64(c.sym_kl),
            fmt_f64(c.ess)
        ));
    }
    out
}

pub fn summary_json(result: &RunResult) -> Result<String, OutputError> {
    let summary = Summary {
        acceptance_rate: result.acceptance_rate,
        config: &result.config,
        sample_count: result.samples.len(),
        total_seconds: result.total_seconds,
    };
    // serde_json maps are sorted; combined with struct fields declared in
    // alphabetical order every key comes out in fixed sorted order.
    let value = serde_json::to_value(&summary)?;
    Ok(format!("{}\n", serde_json::to_string_pretty(&value)?))
}

/// Writes trace.csv, checkpoints.csv and summary.json into `dir`.
pub fn emit_outputs(result: &RunResult, dir: &Path) -> Result<(), OutputError> {
    write_file(&dir.join("trace.csv"), &trace_csv(result))?;
    write_file(&dir.join("checkpoints.csv"), &checkpoints_csv(result))?;
    write_file(&dir.join("summary.json"), &summary_json(result)?)
}
