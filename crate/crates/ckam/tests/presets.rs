//! Snapshot of the shipped experiment presets: every documented
//! hyperparameter is pinned to its exact decimal value so accidental edits
//! to the preset files are caught.

use ckam::harness::{load_config, preset_names, ExperimentConfig};

const SQRT_15: f64 = 3.872983346207417;
const NU_238_SQRT2: f64 = 1.6829141392239828; // 2.38 / sqrt(2)
const NU_2X238_SQRT2: f64 = 3.3658282784479656; // 2 * 2.38 / sqrt(2)
const NU_238_SQRT32: f64 = 0.4207285348059957; // 2.38 / sqrt(32)
const NU_2X238_SQRT32: f64 = 0.8414570696119914; // 2 * 2.38 / sqrt(32)

fn preset(name: &str) -> ExperimentConfig {
    load_config(name).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn assert_matern_4_2(config: &ExperimentConfig) {
    let kernel = config.kernel.as_ref().expect("kernel section");
    assert_eq!(kernel.name, "matern");
    assert_eq!(kernel.order, Some(4.0));
    assert_eq!(kernel.lengthscale, Some(2.0));
}

fn assert_rm(config: &ExperimentConfig) {
    assert_eq!(config.sampler.rm_rate, Some(0.75));
    assert_eq!(config.sampler.alpha_star, Some(0.234));
}

#[test]
fn preset_list_is_complete() {
    let mut names = preset_names();
    names.sort();
    let mut expected: Vec<String> = Vec::new();
    for family in ["bimodal", "highd", "mixture5"] {
        for sampler in ["am", "ckam", "gam", "kam", "rbam", "rw"] {
            expected.push(format!("{family}/{sampler}"));
        }
    }
    assert_eq!(names, expected);
}

#[test]
fn bimodal_presets_match_documented_table() {
    let init = vec![-8.0, 0.0];
    for name in ["rw", "am", "rbam", "gam", "kam", "ckam"] {
        let config = preset(&format!("bimodal/{name}"));
        assert_eq!(config.target.name, "bimodal2d");
        assert_eq!(config.sampler.init, init, "bimodal/{name} init");
    }
    assert_eq!(preset("bimodal/rw").sampler.stepsize, Some(SQRT_15));
    let am = preset("bimodal/am");
    assert_eq!(am.sampler.stepsize, Some(NU_238_SQRT2));
    assert_eq!(am.sampler.rm_stepsize, Some(0.1));
    let rbam = preset("bimodal/rbam");
    assert_eq!(rbam.sampler.stepsize, None); // scale 1, Sigma_0 = I
    assert_eq!(rbam.sampler.rm_stepsize, Some(0.1));
    let gam = preset("bimodal/gam");
    assert_eq!(gam.sampler.stepsize, Some(NU_238_SQRT2));
    assert_rm(&gam);
    let kam = preset("bimodal/kam");
    assert_eq!(kam.sampler.stepsize, Some(NU_2X238_SQRT2));
    assert_eq!(kam.sampler.subsample_size, Some(30));
    assert_rm(&kam);
    assert_matern_4_2(&kam);
    let ckam = preset("bimodal/ckam");
    assert_eq!(ckam.sampler.stepsize, Some(NU_2X238_SQRT2));
    assert_eq!(ckam.sampler.subsample_size, Some(50));
    assert_eq!(ckam.sampler.iterations_per_cycle, Some(1000));
    assert_eq!(ckam.sampler.beta, Some(0.4));
    assert_rm(&ckam);
    assert_matern_4_2(&ckam);
}

#[test]
fn mixture5_presets_match_documented_table() {
    let init = vec![0.0, 0.0];
    for name in ["rw", "am", "rbam", "gam", "kam", "ckam"] {
        let config = preset(&format!("mixture5/{name}"));
        assert_eq!(config.target.name, "mixture5_2d");
        assert_eq!(config.sampler.init, init, "mixture5/{name} init");
    }
    assert_eq!(preset("mixture5/rw").sampler.stepsize, Some(SQRT_15));
    let am = preset("mixture5/am");
    assert_eq!(am.sampler.stepsize, Some(NU_238_SQRT2));
    assert_eq!(am.sampler.rm_stepsize, Some(0.01));
    assert_eq!(preset("mixture5/rbam").sampler.rm_stepsize, Some(0.001));
    let gam = preset("mixture5/gam");
    assert_eq!(gam.sampler.stepsize, Some(NU_238_SQRT2));
    assert_rm(&gam);
    let kam = preset("mixture5/kam");
    assert_eq!(kam.sampler.stepsize, Some(NU_2X238_SQRT2));
    assert_eq!(kam.sampler.subsample_size, Some(30));
    let ckam = preset("mixture5/ckam");
    assert_eq!(ckam.sampler.stepsize, Some(NU_2X238_SQRT2));
    assert_eq!(ckam.sampler.subsample_size, Some(50));
    assert_eq!(ckam.sampler.iterations_per_cycle, Some(1000));
    assert_eq!(ckam.sampler.beta, Some(0.4));
    assert_rm(&ckam);
    assert_matern_4_2(&ckam);
}

#[test]
fn highd_presets_match_documented_table() {
    for name in ["rw", "am", "rbam", "gam", "kam", "ckam"] {
        let config = preset(&format!("highd/{name}"));
        assert_eq!(config.target.name, "grid5_highd");
        assert_eq!(
            config.target.dimension,
            Some(8),
            "highd/{name} CI dimension"
        );
        assert_eq!(config.sampler.init, vec![0.0; 8], "highd/{name} init");
    }
    assert_eq!(preset("highd/rw").sampler.stepsize, Some(NU_238_SQRT32));
    let am = preset("highd/am");
    assert_eq!(am.sampler.stepsize, Some(NU_238_SQRT32));
    assert_eq!(am.sampler.rm_stepsize, Some(0.01));
    assert_eq!(preset("highd/rbam").sampler.rm_stepsize, Some(0.001));
    let gam = preset("highd/gam");
    assert_eq!(gam.sampler.stepsize, Some(NU_238_SQRT32));
    assert_rm(&gam);
    let kam = preset("highd/kam");
    assert_eq!(kam.sampler.stepsize, Some(NU_2X238_SQRT32));
    assert_eq!(kam.sampler.subsample_size, Some(100));
    let ckam = preset("highd/ckam");
    assert_eq!(ckam.sampler.stepsize, Some(NU_2X238_SQRT32));
    assert_eq!(ckam.sampler.subsample_size, Some(100));
    assert_eq!(ckam.sampler.iterations_per_cycle, Some(8000));
    assert_eq!(ckam.sampler.beta, Some(0.6));
    assert_rm(&ckam);
    assert_matern_4_2(&ckam);
}
