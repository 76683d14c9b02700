//! Kernel functions, their analytic gradients, the kernel gradient matrix,
//! the centering matrix and the RKHS proposal covariance assembly.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Position;

mod bessel;

pub use bessel::bessel_k;

#[derive(Debug, Error, PartialEq)]
pub enum KernelError {
    #[error("dimension mismatch: theta has {theta} entries, z has {z}")]
    DimensionMismatch { theta: usize, z: usize },
    #[error("non-finite input coordinate")]
    NonFinite,
    #[error("kernel parameter {name} must be positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error("unsupported Matérn order {0}: only integer and half-integer orders are supported")]
    UnsupportedOrder(f64),
    #[error("Matérn gradient requires order v > 1, got v = {0}")]
    GradientOrderTooSmall(f64),
    #[error("empty subsample")]
    EmptySubsample,
    #[error("degenerate proposal covariance: gamma and nu are both zero")]
    DegenerateCovariance,
}

/// Tagged kernel choice with validated hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum KernelSpec {
    Linear,
    Rbf { lengthscale: f64 },
    Matern { order: f64, lengthscale: f64 },
}

/// Distances below this are treated as exactly zero; the Bessel evaluators
/// diverge as their argument goes to zero.
const RADIUS_FLOOR: f64 = 1e-12;

impl KernelSpec {
    pub fn linear() -> Self {
        KernelSpec::Linear
    }

    pub fn rbf(lengthscale: f64) -> Result<Self, KernelError> {
        if !(lengthscale > 0.0) {
            return Err(KernelError::NonPositiveParameter {
                name: "lengthscale",
                value: lengthscale,
            });
        }
        Ok(KernelSpec::Rbf { lengthscale })
    }

    /// Matérn kernel. The order must be a positive integer or half-integer.
    pub fn matern(order: f64, lengthscale: f64) -> Result<Self, KernelError> {
        if !(lengthscale > 0.0) {
            return Err(KernelError::NonPositiveParameter {
                name: "lengthscale",
                value: lengthscale,
            });
        }
        if !(order > 0.0) {
            return Err(KernelError::NonPositiveParameter {
                name: "order",
                value: order,
            });
        }
        if !bessel::is_supported_order(order) {
            return Err(KernelError::UnsupportedOrder(order));
        }
        Ok(KernelSpec::Matern { order, lengthscale })
    }
}

fn check_pair(theta: &Position, z: &Position) -> Result<(), KernelError> {
    if theta.len() != z.len() {
        return Err(KernelError::DimensionMismatch {
            theta: theta.len(),
            z: z.len(),
        });
    }
    if theta.iter().chain(z.iter()).any(|v| !v.is_finite()) {
        return Err(KernelError::NonFinite);
    }
    Ok(())
}

/// Gamma(v) for integer and half-integer v > 0.
fn gamma_restricted(v: f64) -> f64 {
    let doubled = (2.0 * v).round() as u32;
    if doubled % 2 == 0 {
        // Integer: (n-1)!
        (1..doubled / 2).map(|k| k as f64).product()
    } else {
        // Half-integer: Gamma(1/2) = sqrt(pi), Gamma(v+1) = v Gamma(v).
        let mut acc = std::f64::consts::PI.sqrt();
        let mut arg = 0.5;
        while arg < v - 0.25 {
            acc *= arg;
            arg += 1.0;
        }
        acc
    }
}

/// Normalized Matérn correlation at distance r: equals 1 at r = 0.
fn matern_eval(order: f64, lengthscale: f64, r: f64) -> f64 {
    if r < RADIUS_FLOOR {
        return 1.0;
    }
    let x = (2.0 * order).sqrt() * r / lengthscale;
    let kv = bessel_k(order, x).expect("order validated at construction");
    x.powf(order) * kv / (gamma_restricted(order) * 2f64.powf(order - 1.0))
}

/// Evaluates the kernel at a pair of points.
pub fn kernel_eval(
    kernel: &KernelSpec,
    theta: &Position,
    z: &Position,
) -> Result<f64, KernelError> {
    check_pair(theta, z)?;
    match kernel {
        KernelSpec::Linear => Ok(theta.dot(z)),
        KernelSpec::Rbf { lengthscale } => {
            let r2 = (theta - z).norm_squared();
            Ok((-r2 / (2.0 * lengthscale * lengthscale)).exp())
        }
        KernelSpec::Matern { order, lengthscale } => {
            Ok(matern_eval(*order, *lengthscale, (theta - z).norm()))
        }
    }
}

/// Analytic gradient of the kernel with respect to `theta`.
pub fn kernel_gradient(
    kernel: &KernelSpec,
    theta: &Position,
    z: &Position,
) -> Result<Position, KernelError> {
    check_pair(theta, z)?;
    match kernel {
        KernelSpec::Linear => Ok(z.clone()),
        KernelSpec::Rbf { lengthscale } => {
            let k = kernel_eval(kernel, theta, z)?;
            Ok((z - theta) * (k / (lengthscale * lengthscale)))
        }
        KernelSpec::Matern { order, lengthscale } => {
            let v = *order;
            if v <= 1.0 {
                return Err(KernelError::GradientOrderTooSmall(v));
            }
            let r = (theta - z).norm();
            if r < RADIUS_FLOOR {
                // The (z - theta) factor vanishes and k_{v-1} stays bounded.
                return Ok(Position::zeros(theta.len()));
            }
            // Exact derivative via d/du [u^v K_v(u)] = -u^v K_{v-1}(u): the
            // order-(v-1) factor keeps the parent's sqrt(2v)/l argument
            // scaling, which is what makes the v/(l^2 (v-1)) coefficient
            // close the identity.
            let x = (2.0 * v).sqrt() * r / lengthscale;
            let kv = bessel_k(v - 1.0, x).expect("order validated at construction");
            let k_lower = x.powf(v - 1.0) * kv / (gamma_restricted(v - 1.0) * 2f64.powf(v - 2.0));
            let scale = v / (lengthscale * lengthscale * (v - 1.0));
            Ok((z - theta) * (scale * k_lower))
        }
    }
}

/// The d x m matrix whose i-th column is `2 * grad_theta k(theta, z_i)`.
pub fn kernel_gradient_matrix(
    kernel: &KernelSpec,
    theta: &Position,
    subsample: &[Position],
) -> Result<DMatrix<f64>, KernelError> {
    if subsample.is_empty() {
        return Err(KernelError::EmptySubsample);
    }
    let d = theta.len();
    let mut out = DMatrix::zeros(d, subsample.len());
    for (i, z) in subsample.iter().enumerate() {
        let grad = kernel_gradient(kernel, theta, z)?;
        out.set_column(i, &(grad * 2.0));
    }
    Ok(out)
}

/// The m x m centering matrix `I - (1/m) 1`.
pub fn centering_matrix(m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m, m, |i, j| {
        let sub = 1.0 / m as f64;
        if i == j {
            1.0 - sub
        } else {
            -sub
        }
    })
}

/// Proposal covariance `gamma^2 I + nu^2 M H M^T`.
pub fn proposal_covariance(
    gamma: f64,
    nu: f64,
    kernel_gradients: &DMatrix<f64>,
    centering: &DMatrix<f64>,
) -> Result<DMatrix<f64>, KernelError> {
    if gamma == 0.0 && nu == 0.0 {
        return Err(KernelError::DegenerateCovariance);
    }
    let d = kernel_gradients.nrows();
    let mhm = kernel_gradients * centering * kernel_gradients.transpose();
    let mut cov = mhm * (nu * nu);
    for i in 0..d {
        cov[(i, i)] += gamma * gamma;
    }
    // Symmetrize to wash out accumulation asymmetry from the matrix product.
    let cov = (&cov + cov.transpose()) * 0.5;
    Ok(cov)
}
