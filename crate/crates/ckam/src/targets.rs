//! Benchmark target distributions as log-density oracles, with analytic
//! one-dimensional marginals for diagnostics.

use nalgebra::{Cholesky, DMatrix, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::diagnostics::MeshSpec;
use crate::linalg::{logsumexp, mvn_logpdf, mvn_sample, normal_logpdf_1d};
use crate::Position;

#[derive(Debug, Error)]
pub enum TargetError {
    #[error("dimension mismatch: target has dimension {expected}, point has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite input coordinate")]
    NonFinite,
    #[error("component {index}: {reason}")]
    InvalidComponent { index: usize, reason: String },
    #[error("mixture weights sum to {0}, expected 1")]
    WeightsNotNormalized(f64),
    #[error("marginal dimension {dim} out of range for dimension {dimension}")]
    MarginalIndexOutOfRange { dim: usize, dimension: usize },
    #[error("grid density is only available for 2-d targets, this target has dimension {0}")]
    GridUnsupportedDimension(usize),
    #[error("product grid requires a nonempty mean set and positive variance")]
    InvalidProductGrid,
}

/// One Gaussian component of an explicit mixture.
#[derive(Debug, Clone)]
pub struct GaussianComponent {
    pub mean: Position,
    pub covariance: DMatrix<f64>,
    pub weight: f64,
}

enum TargetForm {
    /// Mixture with explicitly enumerated components.
    ExplicitMixture {
        components: Vec<GaussianComponent>,
        cholesky: Vec<Cholesky<f64, Dyn>>,
    },
    /// Equally weighted mixture over the full Cartesian grid of per-dimension
    /// means with isotropic covariance, evaluated via the per-dimension
    /// factorization rather than component enumeration.
    ProductGrid { means: Vec<f64>, variance: f64 },
}

/// A target distribution: log-density oracle plus analytic 1-d marginals.
pub struct Target {
    dimension: usize,
    form: TargetForm,
}

impl Target {
    pub fn explicit_mixture(components: Vec<GaussianComponent>) -> Result<Self, TargetError> {
        if components.is_empty() {
            return Err(TargetError::InvalidComponent {
                index: 0,
                reason: "mixture has no components".into(),
            });
        }
        let dimension = components[0].mean.len();
        let mut weight_sum = 0.0;
        let mut cholesky = Vec::with_capacity(components.len());
        for (index, c) in components.iter().enumerate() {
            if c.mean.len() != dimension || c.covariance.nrows() != dimension {
                return Err(TargetError::InvalidComponent {
                    index,
                    reason: "component dimension differs from the mixture".into(),
                });
            }
            if !(c.weight > 0.0 && c.weight <= 1.0) {
                return Err(TargetError::InvalidComponent {
                    index,
                    reason: format!("weight {} outside (0, 1]", c.weight),
                });
            }
            weight_sum += c.weight;
            let chol = Cholesky::new(c.covariance.clone()).ok_or_else(|| {
                TargetError::InvalidComponent {
                    index,
                    reason: "covariance is not positive definite".into(),
                }
            })?;
            cholesky.push(chol);
        }
        if (weight_sum - 1.0).abs() > 1e-12 {
            return Err(TargetError::WeightsNotNormalized(weight_sum));
        }
        Ok(Target {
            dimension,
            form: TargetForm::ExplicitMixture {
                components,
                cholesky,
            },
        })
    }

    pub fn product_grid(
        dimension: usize,
        means: Vec<f64>,
        variance: f64,
    ) -> Result<Self, TargetError> {
        if dimension == 0 || means.is_empty() || !(variance > 0.0) {
            return Err(TargetError::InvalidProductGrid);
        }
        Ok(Target {
            dimension,
            form: TargetForm::ProductGrid { means, variance },
        })
    }

    /// Two well-separated modes: N([-8,0], 0.5 I) and N([8,0], 2 I), equal
    /// weights.
    pub fn bimodal2d() -> Self {
        let comp = |mx: f64, var: f64| GaussianComponent {
            mean: Position::from_row_slice(&[mx, 0.0]),
            covariance: DMatrix::identity(2, 2) * var,
            weight: 0.5,
        };
        Target::explicit_mixture(vec![comp(-8.0, 0.5), comp(8.0, 2.0)]).expect("valid preset")
    }

    /// Five components along the diagonal with increasing spread:
    /// means 2.5(i-1)[1,1], covariances sqrt(i) I, equal weights.
    pub fn mixture5_2d() -> Self {
        let components = (1..=5)
            .map(|i| GaussianComponent {
                mean: Position::from_element(2, 2.5 * (i - 1) as f64),
                covariance: DMatrix::identity(2, 2) * (i as f64).sqrt(),
                weight: 0.2,
            })
            .collect();
        Target::explicit_mixture(components).expect("valid preset")
    }

    /// Product-grid mixture with per-dimension means {-30,-15,0,15,30} and
    /// isotropic variance 15: 5^d modes on a hypercube lattice.
    pub fn grid5_highd(dimension: usize) -> Result<Self, TargetError> {
        Target::product_grid(dimension, vec![-30.0, -15.0, 0.0, 15.0, 30.0], 15.0)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    fn check_point(&self, theta: &Position) -> Result<(), TargetError> {
        if theta.len() != self.dimension {
            return Err(TargetError::DimensionMismatch {
                expected: self.dimension,
                got: theta.len(),
            });
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(TargetError::NonFinite);
        }
        Ok(())
    }

    /// Natural log of the normalized mixture density, via log-sum-exp.
    pub fn log_density(&self, theta: &Position) -> Result<f64, TargetError> {
        self.check_point(theta)?;
        match &self.form {
            TargetForm::ExplicitMixture {
                components,
                cholesky,
            } => {
                let terms: Vec<f64> = components
                    .iter()
                    .zip(cholesky)
                    .map(|(c, chol)| c.weight.ln() + mvn_logpdf(theta, &c.mean, chol))
                    .collect();
                Ok(logsumexp(&terms))
            }
            TargetForm::ProductGrid { means, variance } => {
                let ln_w = -(means.len() as f64).ln();
                let mut total = 0.0;
                let mut terms = vec![0.0; means.len()];
                for x in theta.iter() {
                    for (t, mean) in terms.iter_mut().zip(means) {
                        *t = ln_w + normal_logpdf_1d(*x, *mean, *variance);
                    }
                    total += logsumexp(&terms);
                }
                Ok(total)
            }
        }
    }

    /// Analytic marginal density of coordinate `dim` at `x`.
    pub fn marginal_density_1d(&self, dim: usize, x: f64) -> Result<f64, TargetError> {
        if dim >= self.dimension {
            return Err(TargetError::MarginalIndexOutOfRange {
                dim,
                dimension: self.dimension,
            });
        }
        match &self.form {
            TargetForm::ExplicitMixture { components, .. } => Ok(components
                .iter()
                .map(|c| {
                    c.weight * normal_logpdf_1d(x, c.mean[dim], c.covariance[(dim, dim)]).exp()
                })
                .sum()),
            TargetForm::ProductGrid { means, variance } => {
                let w = 1.0 / means.len() as f64;
                Ok(means
                    .iter()
                    .map(|m| w * normal_logpdf_1d(x, *m, *variance).exp())
                    .sum())
            }
        }
    }

    /// Range covering the analytic marginal of coordinate `dim`:
    /// `[min mean - 3 sigma, max mean + 3 sigma]`.
    pub fn marginal_support(&self, dim: usize) -> Result<(f64, f64), TargetError> {
        if dim >= self.dimension {
            return Err(TargetError::MarginalIndexOutOfRange {
                dim,
                dimension: self.dimension,
            });
        }
        match &self.form {
            TargetForm::ExplicitMixture { components, .. } => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for c in components {
                    let sigma = c.covariance[(dim, dim)].sqrt();
                    lo = lo.min(c.mean[dim] - 3.0 * sigma);
                    hi = hi.max(c.mean[dim] + 3.0 * sigma);
                }
                Ok((lo, hi))
            }
            TargetForm::ProductGrid { means, variance } => {
                let sigma = variance.sqrt();
                let lo = means.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                Ok((lo - 3.0 * sigma, hi + 3.0 * sigma))
            }
        }
    }

    /// Cell probabilities on a rectangular mesh: density at cell centers
    /// times cell area, renormalized to sum to 1. Only defined for d = 2.
    pub fn grid_density(&self, mesh: &MeshSpec) -> Result<DMatrix<f64>, TargetError> {
        if self.dimension != 2 {
            return Err(TargetError::GridUnsupportedDimension(self.dimension));
        }
        let area = mesh.cell_area();
        let mut masses = DMatrix::zeros(mesh.nx, mesh.ny);
        for i in 0..mesh.nx {
            for j in 0..mesh.ny {
                let (cx, cy) = mesh.cell_center(i, j);
                let p = self
                    .log_density(&Position::from_row_slice(&[cx, cy]))?
                    .exp();
                masses[(i, j)] = p * area;
            }
        }
        let total: f64 = masses.iter().sum();
        masses /= total;
        Ok(masses)
    }

    /// Direct draw from the mixture; the i.i.d. oracle for the KL baselines.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Position {
        match &self.form {
            TargetForm::ExplicitMixture {
                components,
                cholesky,
            } => {
                let mut u: f64 = rng.random();
                for (c, chol) in components.iter().zip(cholesky) {
                    if u < c.weight {
                        return mvn_sample(&c.mean, chol, rng);
                    }
                    u -= c.weight;
                }
                let last = components.len() - 1;
                mvn_sample(&components[last].mean, &cholesky[last], rng)
            }
            TargetForm::ProductGrid { means, variance } => {
                let sigma = variance.sqrt();
                Position::from_fn(self.dimension, |_, _| {
                    let mean = means[rng.random_range(0..means.len())];
                    mean + sigma * rng.sample::<f64, _>(StandardNormal)
                })
            }
        }
    }
}
