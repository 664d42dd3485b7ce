//! Random-matrix ensembles and spectrum-level transforms.
//!
//! Four sources are provided:
//!
//! * [`sample_goe`]: the Gaussian orthogonal ensemble with off-diagonal
//!   variance `sigma^2` and diagonal variance `2 sigma^2`, realized as
//!   `(A + A^T) / sqrt(2)` for an i.i.d. Gaussian square matrix `A`.
//! * [`sample_gp_hessian`]: the Hessian of an isotropic Gaussian-process
//!   loss surface at a fixed point, `sqrt(k2) W + k1 xi I` with `W` a
//!   unit-variance GOE draw and `xi` a single standard normal. Its entry
//!   covariance is `k2 (delta_ik delta_jl + delta_il delta_jk) +
//!   k1^2 delta_ij delta_kl`, so `k2` controls the GOE part and `k1` a
//!   rank-one random shift of the whole spectrum.
//! * [`sample_poisson_spectrum`]: i.i.d. uniform points on `[0, dim]`,
//!   the standard uncorrelated baseline with exponential gaps.
//! * Transforms [`pad_with_zeros`] (exact degenerate directions) and
//!   [`add_diagonal_outliers`] (large diagonal spikes pushing a few
//!   eigenvalues out of the bulk).
//!
//! Every sampler is a pure function of its parameters and an
//! [`RngSeed`], so pools are parallelized by deriving one seed per
//! sample index.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{StandardNormal, Uniform};

use crate::eigensolve::Spectrum;
use crate::error::{Error, Result};
use crate::matrix::SymmetricMatrix;

/// Seed for the deterministic generators. All randomness in the crate
/// flows from explicit seeds; there is no ambient RNG.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

impl RngSeed {
    /// Seed for the `index`-th member of a pool drawn from this seed.
    #[must_use]
    pub fn for_sample(self, index: u64) -> RngSeed {
        RngSeed(self.0.wrapping_add(index))
    }

    /// The deterministic generator this seed denotes.
    #[must_use]
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

impl From<u64> for RngSeed {
    fn from(v: u64) -> Self {
        RngSeed(v)
    }
}

/// Parameters of a GOE draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoeParams {
    dim: usize,
    sigma: f64,
}

impl GoeParams {
    /// `dim >= 1`, `sigma > 0`.
    pub fn new(dim: usize, sigma: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::validation("GOE dimension must be at least 1"));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::validation(format!(
                "GOE sigma must be a positive finite number, got {sigma}"
            )));
        }
        Ok(GoeParams { dim, sigma })
    }

    #[must_use]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[must_use]
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// Parameters of the Gaussian-process Hessian ensemble.
///
/// `k1` and `k2` play the role of the first and second derivative of the
/// process covariance function at zero lag; only `k2 >= 0` is required.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpKernelParams {
    dim: usize,
    k1: f64,
    k2: f64,
}

impl GpKernelParams {
    pub fn new(dim: usize, k1: f64, k2: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::validation(
                "GP Hessian dimension must be at least 1",
            ));
        }
        if !k1.is_finite() || !k2.is_finite() {
            return Err(Error::validation(format!(
                "GP kernel derivatives must be finite, got k1 = {k1}, k2 = {k2}"
            )));
        }
        if k2 < 0.0 {
            return Err(Error::validation(format!(
                "k2 is a variance scale and must be non-negative, got {k2}"
            )));
        }
        Ok(GpKernelParams { dim, k1, k2 })
    }

    #[must_use]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[must_use]
    pub fn k1(&self) -> f64 {
        self.k1
    }

    #[must_use]
    pub fn k2(&self) -> f64 {
        self.k2
    }
}

/// Draws one GOE matrix: `H = (A + A^T) / sqrt(2)` with `A_ij` i.i.d.
/// `N(0, sigma^2)`. Off-diagonal entries then have variance `sigma^2`
/// and diagonal entries `2 sigma^2`.
#[must_use]
pub fn sample_goe(params: &GoeParams, seed: RngSeed) -> SymmetricMatrix {
    let n = params.dim;
    let mut rng = seed.rng();
    let a: Vec<f64> = (0..n * n)
        .map(|_| params.sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    SymmetricMatrix::from_fn(n, |i, j| (a[i * n + j] + a[j * n + i]) * inv_sqrt2)
}

/// Draws one Gaussian-process Hessian: `sqrt(k2) W + k1 xi I` with `W`
/// a `sigma = 1` GOE draw and `xi` one standard normal scalar shared by
/// the whole diagonal.
#[must_use]
pub fn sample_gp_hessian(params: &GpKernelParams, seed: RngSeed) -> SymmetricMatrix {
    let n = params.dim;
    let mut rng = seed.rng();
    let a: Vec<f64> = (0..n * n)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    let xi: f64 = rng.sample(StandardNormal);
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let sqrt_k2 = params.k2.sqrt();
    let shift = params.k1 * xi;
    SymmetricMatrix::from_fn(n, |i, j| {
        let goe = (a[i * n + j] + a[j * n + i]) * inv_sqrt2;
        sqrt_k2 * goe + if i == j { shift } else { 0.0 }
    })
}

/// Embeds `m` in the top-left corner of a `target_dim` zero matrix.
///
/// The added rows and columns are exactly zero, so the enlarged matrix
/// gains `target_dim - m.dim()` eigenvalues at exactly `0.0`.
pub fn pad_with_zeros(m: &SymmetricMatrix, target_dim: usize) -> Result<SymmetricMatrix> {
    let n = m.dim();
    if target_dim < n {
        return Err(Error::dimension(format!(
            "cannot pad a dim-{n} matrix down to dim {target_dim}"
        )));
    }
    Ok(SymmetricMatrix::from_fn(target_dim, |i, j| {
        if i < n && j < n {
            m.get(i, j)
        } else {
            0.0
        }
    }))
}

/// Adds `magnitude` to `count` distinct diagonal entries chosen
/// uniformly at random.
pub fn add_diagonal_outliers(
    m: &SymmetricMatrix,
    count: usize,
    magnitude: f64,
    seed: RngSeed,
) -> Result<SymmetricMatrix> {
    let n = m.dim();
    if count > n {
        return Err(Error::validation(format!(
            "cannot spike {count} diagonal entries of a dim-{n} matrix"
        )));
    }
    if !magnitude.is_finite() {
        return Err(Error::validation(format!(
            "outlier magnitude must be finite, got {magnitude}"
        )));
    }
    let mut rng = seed.rng();
    // Partial Fisher-Yates: the first `count` slots end up holding a
    // uniform sample of distinct indices.
    let mut indices: Vec<usize> = (0..n).collect();
    for k in 0..count {
        let j = rng.random_range(k..n);
        indices.swap(k, j);
    }
    let mut out = m.clone();
    for &i in &indices[..count] {
        out.add_to_diagonal(i, magnitude);
    }
    Ok(out)
}

/// Draws `dim` i.i.d. uniform points on `[0, dim]` and sorts them: a
/// spectrum with Poissonian (uncorrelated) level statistics and unit
/// mean density.
pub fn sample_poisson_spectrum(dim: usize, seed: RngSeed) -> Result<Spectrum> {
    if dim < 2 {
        return Err(Error::validation(format!(
            "a Poisson spectrum needs at least 2 levels, got {dim}"
        )));
    }
    let mut rng = seed.rng();
    let dist = Uniform::new_inclusive(0.0, dim as f64)
        .map_err(|e| Error::validation(format!("uniform range: {e}")))?;
    let mut values: Vec<f64> = (0..dim).map(|_| rng.sample(dist)).collect();
    values.sort_unstable_by(f64::total_cmp);
    Spectrum::new(values, dim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensolve::eigvals_symmetric;
    use rayon::prelude::*;

    fn variance(samples: &[f64]) -> f64 {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    }

    fn covariance(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - ma) * (y - mb))
            .sum::<f64>()
            / (n - 1.0)
    }

    #[test]
    fn goe_entry_moments_match_convention() {
        let params = GoeParams::new(2, 1.0).unwrap();
        let draws = 100_000;
        let mut off = Vec::with_capacity(draws);
        let mut diag = Vec::with_capacity(draws);
        for i in 0..draws {
            let h = sample_goe(&params, RngSeed(5).for_sample(i as u64));
            off.push(h.get(0, 1));
            diag.push(h.get(0, 0));
        }
        let v_off = variance(&off);
        let v_diag = variance(&diag);
        assert!(
            (v_off - 1.0).abs() < 0.03,
            "off-diagonal variance {v_off} should be 1 within 3%"
        );
        assert!(
            (v_diag - 2.0).abs() < 0.06,
            "diagonal variance {v_diag} should be 2 within 3%"
        );
    }

    #[test]
    fn goe_spectral_density_is_semicircular() {
        // Pool the eigenvalues of 100 draws at dim 300 and compare the
        // binned density against the semicircle law with the same sigma.
        let dim = 300;
        let sigma = 1.0;
        let params = GoeParams::new(dim, sigma).unwrap();
        let pooled: Vec<f64> = (0..100u64)
            .into_par_iter()
            .flat_map_iter(|i| {
                let h = sample_goe(&params, RngSeed(11).for_sample(i));
                eigvals_symmetric(&h).unwrap().values().to_vec()
            })
            .collect();

        let edge = 2.0 * sigma * (dim as f64).sqrt();
        let bins = 50;
        let width = 2.0 * edge / bins as f64;
        let mut counts = vec![0usize; bins];
        for &x in &pooled {
            let k = (((x + edge) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        let total = pooled.len() as f64;
        let peak = 1.0 / (std::f64::consts::PI * sigma * (dim as f64).sqrt());
        let mut worst: f64 = 0.0;
        for (k, &c) in counts.iter().enumerate() {
            let center = -edge + (k as f64 + 0.5) * width;
            let density = c as f64 / (total * width);
            let reference = crate::localstats::semicircle_pdf(center, dim, sigma);
            worst = worst.max((density - reference).abs());
        }
        assert!(
            worst <= 0.05 * peak,
            "max binned density error {worst} exceeds 5% of peak {peak}"
        );
    }

    #[test]
    fn gp_hessian_full_covariance_structure_small_dim() {
        // At dim 5 all distinct covariance cases are cheap to estimate:
        // Var(H_01) = k2, Var(H_00) = 2 k2 + k1^2, Cov(H_00, H_11) = k1^2,
        // and disjoint off-diagonal pairs are uncorrelated.
        let params = GpKernelParams::new(5, 0.8, 0.2).unwrap();
        let draws = 100_000;
        let (mut h01, mut h00, mut h11, mut h02) = (
            Vec::with_capacity(draws),
            Vec::with_capacity(draws),
            Vec::with_capacity(draws),
            Vec::with_capacity(draws),
        );
        for i in 0..draws {
            let h = sample_gp_hessian(&params, RngSeed(17).for_sample(i as u64));
            h01.push(h.get(0, 1));
            h00.push(h.get(0, 0));
            h11.push(h.get(1, 1));
            h02.push(h.get(0, 2));
        }
        let k1sq = 0.8f64 * 0.8;
        let k2 = 0.2;
        assert!((variance(&h01) - k2).abs() < 0.03 * k2.max(1.0) + 0.003);
        assert!((variance(&h00) - (2.0 * k2 + k1sq)).abs() < 0.03 * (2.0 * k2 + k1sq));
        assert!((covariance(&h00, &h11) - k1sq).abs() < 0.03 * k1sq + 0.005);
        assert!(covariance(&h01, &h02).abs() < 0.005);
        assert!(covariance(&h00, &h01).abs() < 0.005);
    }

    #[test]
    fn gp_hessian_covariance_at_dim_300() {
        let params = GpKernelParams::new(300, 1.0, 1e-3).unwrap();
        let draws = 100_000u64;
        let entries: Vec<(f64, f64, f64)> = (0..draws)
            .into_par_iter()
            .map(|i| {
                let h = sample_gp_hessian(&params, RngSeed(23).for_sample(i));
                (h.get(0, 0), h.get(0, 1), h.get(1, 1))
            })
            .collect();
        let h00: Vec<f64> = entries.iter().map(|t| t.0).collect();
        let h01: Vec<f64> = entries.iter().map(|t| t.1).collect();
        let h11: Vec<f64> = entries.iter().map(|t| t.2).collect();

        let cov_diag = covariance(&h00, &h11);
        assert!(
            (cov_diag - 1.0).abs() < 0.03,
            "Cov(H00, H11) = {cov_diag}, expected 1 within 3%"
        );
        let v01 = variance(&h01);
        assert!(
            (v01 - 1e-3).abs() < 0.03e-3,
            "Var(H01) = {v01}, expected 1e-3 within 3%"
        );
        let v00 = variance(&h00);
        assert!(
            (v00 - 1.002).abs() < 0.03 * 1.002,
            "Var(H00) = {v00}, expected 2e-3 + 1 within 3%"
        );
    }

    #[test]
    fn padding_adds_exact_zero_eigenvalues() {
        let params = GoeParams::new(30, 1.0).unwrap();
        let h = sample_goe(&params, RngSeed(3));
        let padded = pad_with_zeros(&h, 40).unwrap();
        assert_eq!(padded.dim(), 40);
        let spec = eigvals_symmetric(&padded).unwrap();
        let zeros = spec.values().iter().filter(|&&v| v == 0.0).count();
        assert_eq!(zeros, 10);
        // Non-zero part of the spectrum is untouched.
        let base = eigvals_symmetric(&h).unwrap();
        let nonzero: Vec<f64> = spec.values().iter().copied().filter(|&v| v != 0.0).collect();
        for (a, b) in nonzero.iter().zip(base.values()) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(pad_with_zeros(&h, 20).is_err());
    }

    #[test]
    fn diagonal_outliers_leave_the_bulk() {
        let dim = 300;
        let params = GoeParams::new(dim, 1.0).unwrap();
        let h = sample_goe(&params, RngSeed(31));
        let magnitude = 10.0 * (2.0 * dim as f64).sqrt();
        let spiked = add_diagonal_outliers(&h, 20, magnitude, RngSeed(32)).unwrap();

        // Exactly 20 diagonal entries moved, nothing else.
        let mut moved = 0;
        for i in 0..dim {
            for j in i..dim {
                let delta = spiked.get(i, j) - h.get(i, j);
                if i == j && delta != 0.0 {
                    assert!((delta - magnitude).abs() < 1e-12);
                    moved += 1;
                } else if i != j {
                    assert_eq!(delta, 0.0);
                }
            }
        }
        assert_eq!(moved, 20);

        let bulk_edge = 2.0 * (dim as f64).sqrt();
        let spec = eigvals_symmetric(&spiked).unwrap();
        let escaped = spec.values().iter().filter(|&&v| v > bulk_edge).count();
        assert!(
            escaped >= 15,
            "expected at least 15 eigenvalues beyond the bulk edge, got {escaped}"
        );
        assert!(add_diagonal_outliers(&h, dim + 1, 1.0, RngSeed(1)).is_err());
    }

    #[test]
    fn poisson_spectrum_has_unit_mean_spacing() {
        let dim = 300;
        let mut mean_gaps = Vec::new();
        for s in 0..50u64 {
            let spec = sample_poisson_spectrum(dim, RngSeed(40).for_sample(s)).unwrap();
            let v = spec.values();
            let gaps: f64 = v.windows(2).map(|w| w[1] - w[0]).sum();
            mean_gaps.push(gaps / (v.len() - 1) as f64);
        }
        let mean = mean_gaps.iter().sum::<f64>() / mean_gaps.len() as f64;
        // n uniform points on [0, n]: expected mean gap n/(n+1).
        let expected = dim as f64 / (dim as f64 + 1.0);
        assert!(
            (mean - expected).abs() < 0.02,
            "mean spacing {mean} should be near {expected}"
        );
        assert!(sample_poisson_spectrum(1, RngSeed(0)).is_err());
    }

    #[test]
    fn samplers_are_deterministic_in_the_seed() {
        let params = GoeParams::new(25, 0.5).unwrap();
        let a = sample_goe(&params, RngSeed(77));
        let b = sample_goe(&params, RngSeed(77));
        assert_eq!(a, b);
        assert_ne!(a, sample_goe(&params, RngSeed(78)));

        let gp = GpKernelParams::new(25, 1.0, 0.1).unwrap();
        assert_eq!(sample_gp_hessian(&gp, RngSeed(9)), sample_gp_hessian(&gp, RngSeed(9)));

        let p = sample_poisson_spectrum(50, RngSeed(13)).unwrap();
        let q = sample_poisson_spectrum(50, RngSeed(13)).unwrap();
        assert_eq!(p.values(), q.values());
    }

    #[test]
    fn parameter_validation() {
        assert!(GoeParams::new(0, 1.0).is_err());
        assert!(GoeParams::new(10, 0.0).is_err());
        assert!(GoeParams::new(10, f64::NAN).is_err());
        assert!(GpKernelParams::new(10, 1.0, -0.5).is_err());
        assert!(GpKernelParams::new(0, 1.0, 0.5).is_err());
    }
}
