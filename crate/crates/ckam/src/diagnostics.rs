//! Convergence metrics: grid-based symmetric KL divergence, averaged
//! per-dimension marginal symmetric KL for high dimensions, and effective
//! sample size with Geyer initial-positive-sequence truncation.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::targets::Target;
use crate::Position;

/// Per-cell smoothing applied before normalization when none is specified;
/// empirical histograms have empty cells and KL needs strict positivity.
pub const DEFAULT_SMOOTHING_EPS: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("empty sample list")]
    EmptySamples,
    #[error("samples must be 2-dimensional for a grid histogram, got dimension {0}")]
    NotTwoDimensional(usize),
    #[error("distributions have different support sizes: {p} vs {q}")]
    SupportMismatch { p: usize, q: usize },
    #[error("distribution has a nonpositive cell at index {0}; smooth before comparing")]
    NonPositiveCell(usize),
    #[error("effective sample size needs at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("effective sample size is undefined for a constant chain")]
    ConstantChain,
    #[error(transparent)]
    Target(#[from] crate::targets::TargetError),
}

/// Rectangular mesh: bounds and per-axis resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshSpec {
    pub min: [f64; 2],
    pub max: [f64; 2],
    pub nx: usize,
    pub ny: usize,
}

impl MeshSpec {
    pub fn new(min: [f64; 2], max: [f64; 2], nx: usize, ny: usize) -> Self {
        assert!(nx > 0 && ny > 0 && min[0] < max[0] && min[1] < max[1]);
        MeshSpec { min, max, nx, ny }
    }

    pub fn cell_area(&self) -> f64 {
        let dx = (self.max[0] - self.min[0]) / self.nx as f64;
        let dy = (self.max[1] - self.min[1]) / self.ny as f64;
        dx * dy
    }

    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        let dx = (self.max[0] - self.min[0]) / self.nx as f64;
        let dy = (self.max[1] - self.min[1]) / self.ny as f64;
        (
            self.min[0] + (i as f64 + 0.5) * dx,
            self.min[1] + (j as f64 + 0.5) * dy,
        )
    }

    /// Cell index of a point; out-of-mesh points clamp to edge cells.
    pub fn cell_of(&self, x: f64, y: f64) -> (usize, usize) {
        let fx = (x - self.min[0]) / (self.max[0] - self.min[0]);
        let fy = (y - self.min[1]) / (self.max[1] - self.min[1]);
        let i = ((fx * self.nx as f64).floor() as i64).clamp(0, self.nx as i64 - 1);
        let j = ((fy * self.ny as f64).floor() as i64).clamp(0, self.ny as i64 - 1);
        (i as usize, j as usize)
    }
}

/// Normalized, smoothed 2-d sample histogram.
pub struct GridHistogram {
    pub mesh: MeshSpec,
    pub masses: DMatrix<f64>,
}

/// Bins samples on the mesh, adds `smoothing_eps` per cell and normalizes.
pub fn histogram_2d(
    samples: &[Position],
    mesh: &MeshSpec,
    smoothing_eps: f64,
) -> Result<GridHistogram, DiagnosticsError> {
    if samples.is_empty() {
        return Err(DiagnosticsError::EmptySamples);
    }
    if samples[0].len() != 2 {
        return Err(DiagnosticsError::NotTwoDimensional(samples[0].len()));
    }
    let mut masses = DMatrix::from_element(mesh.nx, mesh.ny, smoothing_eps);
    for s in samples {
        let (i, j) = mesh.cell_of(s[0], s[1]);
        masses[(i, j)] += 1.0;
    }
    let total: f64 = masses.iter().sum();
    masses /= total;
    Ok(GridHistogram {
        mesh: *mesh,
        masses,
    })
}

/// Symmetric KL divergence `KL(p||q) + KL(q||p)` in nats.
///
/// Both inputs must be strictly positive; smoothing is the caller's job.
pub fn symmetric_kl(p: &[f64], q: &[f64]) -> Result<f64, DiagnosticsError> {
    if p.len() != q.len() {
        return Err(DiagnosticsError::SupportMismatch {
            p: p.len(),
            q: q.len(),
        });
    }
    let mut acc = 0.0;
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if !(pi > 0.0) || !(qi > 0.0) {
            return Err(DiagnosticsError::NonPositiveCell(i));
        }
        acc += (pi - qi) * (pi / qi).ln();
    }
    Ok(acc)
}

/// Per-dimension 1-d histogram vs analytic marginal symmetric KL, averaged
/// over dimensions. Bins span the target's analytic marginal support.
pub fn marginal_mean_symmetric_kl(
    samples: &[Position],
    target: &Target,
    bins: usize,
) -> Result<f64, DiagnosticsError> {
    if samples.is_empty() {
        return Err(DiagnosticsError::EmptySamples);
    }
    let d = target.dimension();
    let mut acc = 0.0;
    for dim in 0..d {
        let (lo, hi) = target.marginal_support(dim)?;
        let width = (hi - lo) / bins as f64;
        let mut empirical = vec![DEFAULT_SMOOTHING_EPS; bins];
        for s in samples {
            let idx = (((s[dim] - lo) / width).floor() as i64).clamp(0, bins as i64 - 1);
            empirical[idx as usize] += 1.0;
        }
        let e_total: f64 = empirical.iter().sum();
        for v in &mut empirical {
            *v /= e_total;
        }
        let mut analytic = vec![DEFAULT_SMOOTHING_EPS; bins];
        for (b, v) in analytic.iter_mut().enumerate() {
            let center = lo + (b as f64 + 0.5) * width;
            *v += target.marginal_density_1d(dim, center)? * width;
        }
        let a_total: f64 = analytic.iter().sum();
        for v in &mut analytic {
            *v /= a_total;
        }
        acc += symmetric_kl(&empirical, &analytic)?;
    }
    Ok(acc / d as f64)
}

/// Effective sample size `n / (1 + 2 sum rho_k)` with Geyer
/// initial-positive-sequence truncation of the autocorrelations.
pub fn effective_sample_size(samples: &[f64]) -> Result<f64, DiagnosticsError> {
    let n = samples.len();
    if n < 10 {
        return Err(DiagnosticsError::TooFewSamples { min: 10, got: n });
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n as f64;
    if var <= 0.0 {
        return Err(DiagnosticsError::ConstantChain);
    }
    let rho = |lag: usize| -> f64 {
        let mut acc = 0.0;
        for i in 0..n - lag {
            acc += (samples[i] - mean) * (samples[i + lag] - mean);
        }
        acc / (n as f64 * var)
    };
    // Sum Geyer pairs (rho_{2k-1} + rho_{2k}) while they stay positive,
    // walking lags one pair at a time so truncation keeps the cost low.
    // The hard lag cap bounds the cost on extremely sticky chains; beyond
    // it the autocorrelation tail is ignored and the ESS is an upper bound.
    let max_lag = (n / 2).min(1000);
    let mut tail = 0.0;
    let mut lag = 1;
    while lag + 1 <= max_lag {
        let pair = rho(lag) + rho(lag + 1);
        if pair <= 0.0 {
            break;
        }
        tail += pair;
        lag += 2;
    }
    let iact = (1.0 + 2.0 * tail).max(1.0);
    Ok((n as f64 / iact).min(n as f64))
}

/// Per-dimension ESS of a vector chain, reporting the minimum.
pub fn effective_sample_size_multi(samples: &[Position]) -> Result<f64, DiagnosticsError> {
    if samples.is_empty() {
        return Err(DiagnosticsError::EmptySamples);
    }
    let d = samples[0].len();
    let mut min_ess = f64::INFINITY;
    for dim in 0..d {
        let series: Vec<f64> = samples.iter().map(|s| s[dim]).collect();
        min_ess = min_ess.min(effective_sample_size(&series)?);
    }
    Ok(min_ess)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;

    fn vec2(x: f64, y: f64) -> Position {
        Position::from_row_slice(&[x, y])
    }

    #[test]
    fn single_sample_concentrates_mass() {
        let mesh = MeshSpec::new([0.0, 0.0], [1.0, 1.0], 10, 10);
        let h = histogram_2d(&[vec2(0.05, 0.05)], &mesh, 1e-10).unwrap();
        assert!(h.masses[(0, 0)] > 0.999);
        assert_relative_eq!(h.masses.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn uniform_samples_flatten() {
        let mesh = MeshSpec::new([0.0, 0.0], [1.0, 1.0], 5, 5);
        let mut rng = StdRng::seed_from_u64(1);
        let n = 100_000;
        let samples: Vec<Position> = (0..n)
            .map(|_| vec2(rng.random::<f64>(), rng.random::<f64>()))
            .collect();
        let h = histogram_2d(&samples, &mesh, 1e-10).unwrap();
        let tol = 3.0 / (n as f64).sqrt();
        for m in h.masses.iter() {
            assert!((m - 0.04).abs() < tol);
        }
    }

    #[test]
    fn out_of_mesh_samples_clamp_to_edges() {
        let mesh = MeshSpec::new([0.0, 0.0], [1.0, 1.0], 4, 4);
        let h = histogram_2d(&[vec2(-5.0, 20.0)], &mesh, 0.0).unwrap();
        assert_relative_eq!(h.masses[(0, 3)], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn empty_samples_rejected() {
        let mesh = MeshSpec::new([0.0, 0.0], [1.0, 1.0], 4, 4);
        assert!(matches!(
            histogram_2d(&[], &mesh, 1e-10),
            Err(DiagnosticsError::EmptySamples)
        ));
    }

    #[test]
    fn symmetric_kl_identical_is_zero() {
        let p = [0.2, 0.3, 0.5];
        assert_eq!(symmetric_kl(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn symmetric_kl_two_cell_hand_computed() {
        // (0.5-0.9) ln(0.5/0.9) + (0.5-0.1) ln(0.5/0.1) = 0.4 ln 9,
        // verified by independent arithmetic before the build.
        let kl = symmetric_kl(&[0.5, 0.5], &[0.9, 0.1]).unwrap();
        assert_relative_eq!(kl, 0.8788898309344879, epsilon = 1e-9);
    }

    #[test]
    fn symmetric_kl_rejects_zero_cells() {
        assert!(matches!(
            symmetric_kl(&[1.0, 0.0], &[0.5, 0.5]),
            Err(DiagnosticsError::NonPositiveCell(1))
        ));
    }

    #[test]
    fn marginal_kl_of_direct_samples_is_small() {
        let target = Target::mixture5_2d();
        let mut rng = StdRng::seed_from_u64(5);
        let samples: Vec<Position> = (0..100_000).map(|_| target.sample(&mut rng)).collect();
        let kl = marginal_mean_symmetric_kl(&samples, &target, 100).unwrap();
        // Pilot-calibrated noise floor for n = 1e5 i.i.d. draws at 100 bins.
        assert!(kl < 0.01, "kl = {kl}");
        // O(1/n): a tenth of the samples gives a clearly larger value.
        let kl_small = marginal_mean_symmetric_kl(&samples[..10_000], &target, 100).unwrap();
        assert!(kl_small > kl);
    }

    #[test]
    fn marginal_kl_d1_equals_plain_symmetric_kl() {
        let target = Target::product_grid(1, vec![0.0], 1.0).unwrap();
        let mut rng = StdRng::seed_from_u64(6);
        let samples: Vec<Position> = (0..5000).map(|_| target.sample(&mut rng)).collect();
        let bins = 50;
        let mean_kl = marginal_mean_symmetric_kl(&samples, &target, bins).unwrap();

        let (lo, hi) = target.marginal_support(0).unwrap();
        let width = (hi - lo) / bins as f64;
        let mut empirical = vec![DEFAULT_SMOOTHING_EPS; bins];
        for s in &samples {
            let idx = (((s[0] - lo) / width).floor() as i64).clamp(0, bins as i64 - 1);
            empirical[idx as usize] += 1.0;
        }
        let t: f64 = empirical.iter().sum();
        empirical.iter_mut().for_each(|v| *v /= t);
        let mut analytic = vec![DEFAULT_SMOOTHING_EPS; bins];
        for (b, v) in analytic.iter_mut().enumerate() {
            let c = lo + (b as f64 + 0.5) * width;
            *v += target.marginal_density_1d(0, c).unwrap() * width;
        }
        let t: f64 = analytic.iter().sum();
        analytic.iter_mut().for_each(|v| *v /= t);
        assert_relative_eq!(
            mean_kl,
            symmetric_kl(&empirical, &analytic).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn marginal_kl_permutation_invariant_for_product_grid() {
        let target = Target::grid5_highd(3).unwrap();
        let mut rng = StdRng::seed_from_u64(7);
        let samples: Vec<Position> = (0..2000).map(|_| target.sample(&mut rng)).collect();
        let permuted: Vec<Position> = samples
            .iter()
            .map(|s| Position::from_row_slice(&[s[2], s[0], s[1]]))
            .collect();
        let a = marginal_mean_symmetric_kl(&samples, &target, 60).unwrap();
        let b = marginal_mean_symmetric_kl(&permuted, &target, 60).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-12);
    }

    #[test]
    fn ess_of_iid_normals_is_near_n() {
        let mut rng = StdRng::seed_from_u64(8);
        let n = 10_000;
        let samples: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let ess = effective_sample_size(&samples).unwrap();
        let ratio = ess / n as f64;
        assert!((0.8..=1.2).contains(&ratio), "ratio = {ratio}");
    }

    #[test]
    fn ess_of_ar1_chain_matches_analytic_iact() {
        // AR(1) with coefficient phi has ESS/n = (1-phi)/(1+phi).
        let phi = 0.5;
        let n = 100_000;
        let mut rng = StdRng::seed_from_u64(9);
        let mut samples = Vec::with_capacity(n);
        let mut x = 0.0;
        for _ in 0..n {
            x = phi * x + rng.sample::<f64, _>(StandardNormal);
            samples.push(x);
        }
        let ess = effective_sample_size(&samples).unwrap();
        let ratio = ess / n as f64;
        assert!(
            (ratio - 1.0 / 3.0).abs() < 1.0 / 3.0 * 0.2,
            "ratio = {ratio}"
        );
    }

    #[test]
    fn duplicating_samples_halves_ess() {
        let mut rng = StdRng::seed_from_u64(10);
        let n = 20_000;
        let samples: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let doubled: Vec<f64> = samples.iter().flat_map(|&s| [s, s]).collect();
        let base = effective_sample_size(&samples).unwrap() / n as f64;
        let dup = effective_sample_size(&doubled).unwrap() / (2 * n) as f64;
        let ratio = dup / (base / 2.0);
        assert!((0.9..=1.1).contains(&ratio), "ratio = {ratio}");
    }

    #[test]
    fn ess_rejects_degenerate_input() {
        assert!(matches!(
            effective_sample_size(&[1.0; 5]),
            Err(DiagnosticsError::TooFewSamples { .. })
        ));
        assert!(matches!(
            effective_sample_size(&[1.0; 50]),
            Err(DiagnosticsError::ConstantChain)
        ));
    }

    #[test]
    fn ess_affine_invariance() {
        let mut rng = StdRng::seed_from_u64(11);
        let samples: Vec<f64> = (0..5000).map(|_| rng.sample(StandardNormal)).collect();
        let scaled: Vec<f64> = samples.iter().map(|s| 3.0 * s - 7.0).collect();
        assert_relative_eq!(
            effective_sample_size(&samples).unwrap(),
            effective_sample_size(&scaled).unwrap(),
            max_relative = 1e-9
        );
    }

    #[test]
    fn kl_between_sample_sets_shrinks_with_n() {
        let target = Target::bimodal2d();
        let mesh = MeshSpec::new([-14.0, -14.0], [14.0, 14.0], 100, 100);
        let mut medians = Vec::new();
        for &n in &[1000usize, 10_000, 100_000] {
            let mut kls = Vec::new();
            for seed in 0..5 {
                let mut ra = StdRng::seed_from_u64(100 + seed);
                let mut rb = StdRng::seed_from_u64(200 + seed);
                let sa: Vec<Position> = (0..n).map(|_| target.sample(&mut ra)).collect();
                let sb: Vec<Position> = (0..n).map(|_| target.sample(&mut rb)).collect();
                let ha = histogram_2d(&sa, &mesh, DEFAULT_SMOOTHING_EPS).unwrap();
                let hb = histogram_2d(&sb, &mesh, DEFAULT_SMOOTHING_EPS).unwrap();
                kls.push(symmetric_kl(ha.masses.as_slice(), hb.masses.as_slice()).unwrap());
            }
            kls.sort_by(f64::total_cmp);
            medians.push(kls[2]);
        }
        assert!(
            medians[0] > medians[1] && medians[1] > medians[2],
            "{medians:?}"
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn symmetric_kl_nonnegative_and_symmetric(seed in 0u64..5000) {
            let mut rng = StdRng::seed_from_u64(seed);
            let k = rng.random_range(2..20usize);
            let mut p: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..1.0)).collect();
            let mut q: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..1.0)).collect();
            let ps: f64 = p.iter().sum();
            let qs: f64 = q.iter().sum();
            p.iter_mut().for_each(|v| *v /= ps);
            q.iter_mut().for_each(|v| *v /= qs);
            let ab = symmetric_kl(&p, &q).unwrap();
            let ba = symmetric_kl(&q, &p).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert!((ab - ba).abs() < 1e-12);
            // Invariance under simultaneous support permutation.
            let mut perm: Vec<usize> = (0..k).collect();
            perm.reverse();
            let pp: Vec<f64> = perm.iter().map(|&i| p[i]).collect();
            let qp: Vec<f64> = perm.iter().map(|&i| q[i]).collect();
            prop_assert!((symmetric_kl(&pp, &qp).unwrap() - ab).abs() < 1e-12);
        }
    }
}
