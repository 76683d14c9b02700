//! Shared numerical helpers: log-sum-exp, jittered Cholesky factorization and
//! multivariate normal sampling/density evaluation.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;

pub const LN_2PI: f64 = 1.837877066409345483560659472811;

/// Numerically stable log(sum(exp(x_i))).
pub fn logsumexp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Cholesky factorization with escalating diagonal jitter.
///
/// On failure adds `1e-9 * mean(diag)` to the diagonal, escalating by a
/// factor of 10 for up to `attempts` retries before giving up.
pub fn cholesky_with_jitter(cov: &DMatrix<f64>, attempts: usize) -> Option<Cholesky<f64, Dyn>> {
    if let Some(chol) = Cholesky::new(cov.clone()) {
        return Some(chol);
    }
    let d = cov.nrows();
    let mean_diag = cov.diagonal().iter().map(|v| v.abs()).sum::<f64>() / d as f64;
    let base = if mean_diag > 0.0 { mean_diag } else { 1.0 };
    let mut jitter = 1e-9 * base;
    for _ in 0..attempts {
        let jittered = cov + DMatrix::identity(d, d) * jitter;
        if let Some(chol) = Cholesky::new(jittered) {
            return Some(chol);
        }
        jitter *= 10.0;
    }
    None
}

/// Draw from N(mean, L L^T) given the Cholesky factor L.
pub fn mvn_sample<R: Rng>(
    mean: &DVector<f64>,
    chol: &Cholesky<f64, Dyn>,
    rng: &mut R,
) -> DVector<f64> {
    let d = mean.len();
    let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
    mean + chol.l() * z
}

/// Log-density of N(mean, L L^T) at `x`, given the Cholesky factor L.
pub fn mvn_logpdf(x: &DVector<f64>, mean: &DVector<f64>, chol: &Cholesky<f64, Dyn>) -> f64 {
    let d = x.len() as f64;
    let diff = x - mean;
    let solved = chol
        .l_dirty()
        .solve_lower_triangular(&diff)
        .expect("L is invertible");
    let log_det: f64 = chol
        .l_dirty()
        .diagonal()
        .iter()
        .map(|v| v.ln())
        .sum::<f64>()
        * 2.0;
    -0.5 * (d * LN_2PI + log_det + solved.norm_squared())
}

/// Log-density of the univariate normal N(mean, variance) at `x`.
pub fn normal_logpdf_1d(x: f64, mean: f64, variance: f64) -> f64 {
    let diff = x - mean;
    -0.5 * (LN_2PI + variance.ln() + diff * diff / variance)
}
