//! Spectral unfolding: mapping raw eigenvalues to coordinates with unit
//! mean level density so that spacing statistics become comparable
//! across ensembles and energy ranges.
//!
//! Two map constructions are supported.
//!
//! * **Analytic GOE.** The integrated semicircle density. In the scale
//!   convention where the bulk edge sits at `sqrt(2 dim)` (GOE scale
//!   `sigma = 1/sqrt(2)`), the mean counting function is
//!   `N(x) = dim * (1/2 + x sqrt(2 dim - x^2) / (2 pi dim)
//!   + atan(x / sqrt(2 dim - x^2)) / pi)`, clamped to `0` and `dim`
//!   outside the bulk. [`UnfoldingMap::analytic_goe`] rescales inputs by
//!   `sigma sqrt(2)` so spectra sampled at any `sigma` can use it.
//! * **Empirical.** A pooled step-function estimate built from held-out
//!   spectra: the strictly-below fraction within the pool, scaled by the
//!   mean per-spectrum eigenvalue count so that unfolded spacings have
//!   mean close to 1. Pools are split into disjoint fit and analysis
//!   halves by [`split_pool`] so no spectrum is unfolded by a map that
//!   saw its own eigenvalues.
//!
//! Exact and near-zero eigenvalues coming from padded or structurally
//! degenerate directions are removed beforehand by
//! [`filter_degenerate`]; spacings are only ever formed within a single
//! spectrum.

use crate::eigensolve::Spectrum;
use crate::ensembles::RngSeed;
use crate::error::{Error, Result};

/// A collection of spectra treated as draws from one ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumPool {
    spectra: Vec<Spectrum>,
    provenance: String,
}

impl SpectrumPool {
    /// Every member spectrum must be non-empty; spectra that lost all
    /// eigenvalues to the degeneracy filter should be dropped by the
    /// caller (and counted) before pooling.
    pub fn new(spectra: Vec<Spectrum>) -> Result<Self> {
        Self::with_provenance(spectra, String::new())
    }

    /// Like [`SpectrumPool::new`] with a free-text origin label.
    pub fn with_provenance(spectra: Vec<Spectrum>, provenance: String) -> Result<Self> {
        if spectra.iter().any(Spectrum::is_empty) {
            return Err(Error::validation(
                "a spectrum pool cannot contain empty spectra",
            ));
        }
        Ok(SpectrumPool {
            spectra,
            provenance,
        })
    }

    #[must_use]
    pub fn spectra(&self) -> &[Spectrum] {
        &self.spectra
    }

    #[must_use]
    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.spectra.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.spectra.is_empty()
    }

    /// Total number of eigenvalues across all member spectra.
    #[must_use]
    pub fn total_eigenvalues(&self) -> usize {
        self.spectra.iter().map(Spectrum::len).sum()
    }
}

/// How to split a pool into map-fitting and analysis halves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitConfig {
    /// Fraction of spectra used to fit the empirical map; the fit count
    /// is the floor of `fit_fraction * pool_len`.
    pub fit_fraction: f64,
    /// Seed of the shuffle that assigns spectra to the two halves.
    pub seed: RngSeed,
}

impl SplitConfig {
    /// The conventional two-thirds fit / one-third analysis split.
    #[must_use]
    pub fn two_thirds(seed: RngSeed) -> Self {
        SplitConfig {
            fit_fraction: 2.0 / 3.0,
            seed,
        }
    }
}

/// Result of removing near-zero eigenvalues from a spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    /// Surviving eigenvalues; `source_dim` is inherited.
    pub spectrum: Spectrum,
    /// Number of eigenvalues removed.
    pub removed: usize,
    /// Number of eigenvalues before filtering.
    pub total: usize,
}

impl FilterOutcome {
    #[must_use]
    pub fn removed_fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.removed as f64 / self.total as f64
        }
    }
}

/// Monotone map from raw eigenvalues to unfolded coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum UnfoldingMap {
    /// Integrated semicircle density for a GOE of size `dim` sampled at
    /// scale `sigma`.
    AnalyticGoe { dim: usize, sigma: f64 },
    /// Pooled empirical counting function.
    Empirical {
        /// All pooled eigenvalues, sorted ascending.
        sorted: Vec<f64>,
        /// Number of spectra that contributed to the pool.
        n_spectra: usize,
    },
}

/// Mean GOE counting function in the `sigma = 1/sqrt(2)` convention,
/// where the bulk spans `[-sqrt(2 dim), sqrt(2 dim)]`. Returns values
/// in `[0, dim]`, clamped outside the bulk.
#[must_use]
pub fn goe_analytic_cdf(lambda: f64, dim: usize) -> f64 {
    debug_assert!(dim >= 1, "goe_analytic_cdf needs dim >= 1");
    let p = dim as f64;
    let edge_sq = 2.0 * p;
    if lambda * lambda >= edge_sq {
        return if lambda > 0.0 { p } else { 0.0 };
    }
    let root = (edge_sq - lambda * lambda).sqrt();
    let pi = std::f64::consts::PI;
    p * (0.5 + lambda * root / (2.0 * pi * p) + (lambda / root).atan() / pi)
}

impl UnfoldingMap {
    /// Analytic map for GOE spectra sampled at scale `sigma`.
    pub fn analytic_goe(dim: usize, sigma: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::validation("analytic unfolding needs dim >= 1"));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::validation(format!(
                "analytic unfolding needs a positive finite sigma, got {sigma}"
            )));
        }
        Ok(UnfoldingMap::AnalyticGoe { dim, sigma })
    }

    /// Unfolded coordinate of `lambda`.
    #[must_use]
    pub fn evaluate(&self, lambda: f64) -> f64 {
        match self {
            UnfoldingMap::AnalyticGoe { dim, sigma } => {
                goe_analytic_cdf(lambda / (sigma * std::f64::consts::SQRT_2), *dim)
            }
            UnfoldingMap::Empirical { sorted, n_spectra } => {
                let below = sorted.partition_point(|&x| x < lambda);
                below as f64 / *n_spectra as f64
            }
        }
    }

    /// Strictly-below fraction within the pool, in `[0, 1]`. For the
    /// analytic map this is the counting function divided by `dim`.
    #[must_use]
    pub fn raw_fraction(&self, lambda: f64) -> f64 {
        match self {
            UnfoldingMap::AnalyticGoe { dim, sigma } => {
                goe_analytic_cdf(lambda / (sigma * std::f64::consts::SQRT_2), *dim)
                    / *dim as f64
            }
            UnfoldingMap::Empirical { sorted, .. } => {
                let below = sorted.partition_point(|&x| x < lambda);
                below as f64 / sorted.len() as f64
            }
        }
    }
}

/// Builds the pooled empirical counting function from a fit pool.
///
/// The map evaluates to `(strictly-below count) / n_spectra`, i.e. the
/// raw pooled fraction scaled by the mean per-spectrum eigenvalue
/// count, which gives unfolded spacings a mean near 1.
pub fn build_empirical_cdf(pool: &SpectrumPool) -> Result<UnfoldingMap> {
    if pool.is_empty() {
        return Err(Error::validation(
            "cannot build an empirical map from an empty pool",
        ));
    }
    let total = pool.total_eigenvalues();
    if total == 0 {
        return Err(Error::validation(
            "cannot build an empirical map from spectra with no eigenvalues",
        ));
    }
    let mut sorted = Vec::with_capacity(total);
    for spectrum in pool.spectra() {
        sorted.extend_from_slice(spectrum.values());
    }
    sorted.sort_unstable_by(f64::total_cmp);
    Ok(UnfoldingMap::Empirical {
        sorted,
        n_spectra: pool.len(),
    })
}

/// Splits a pool into disjoint (fit, analysis) halves with a seeded
/// shuffle. The fit half receives `floor(fit_fraction * len)` spectra;
/// both halves must end up non-empty.
pub fn split_pool(pool: &SpectrumPool, config: &SplitConfig) -> Result<(SpectrumPool, SpectrumPool)> {
    if !(config.fit_fraction > 0.0 && config.fit_fraction < 1.0) {
        return Err(Error::validation(format!(
            "fit fraction must lie strictly between 0 and 1, got {}",
            config.fit_fraction
        )));
    }
    let m = pool.len();
    let n_fit = (config.fit_fraction * m as f64).floor() as usize;
    if n_fit == 0 || n_fit == m {
        return Err(Error::validation(format!(
            "split of {m} spectra at fraction {} leaves an empty half",
            config.fit_fraction
        )));
    }
    let mut indices: Vec<usize> = (0..m).collect();
    let mut rng = config.seed.rng();
    for k in (1..m).rev() {
        let j = rand::Rng::random_range(&mut rng, 0..=k);
        indices.swap(k, j);
    }
    let fit = indices[..n_fit]
        .iter()
        .map(|&i| pool.spectra()[i].clone())
        .collect();
    let analysis = indices[n_fit..]
        .iter()
        .map(|&i| pool.spectra()[i].clone())
        .collect();
    Ok((SpectrumPool::new(fit)?, SpectrumPool::new(analysis)?))
}

/// Removes eigenvalues with `|lambda| < cutoff`.
pub fn filter_degenerate(spectrum: &Spectrum, cutoff: f64) -> Result<FilterOutcome> {
    if !(cutoff > 0.0) || !cutoff.is_finite() {
        return Err(Error::validation(format!(
            "degeneracy cutoff must be positive and finite, got {cutoff}"
        )));
    }
    let total = spectrum.len();
    let kept: Vec<f64> = spectrum
        .values()
        .iter()
        .copied()
        .filter(|v| v.abs() >= cutoff)
        .collect();
    let removed = total - kept.len();
    Ok(FilterOutcome {
        spectrum: Spectrum::new(kept, spectrum.source_dim())?,
        removed,
        total,
    })
}

/// Nearest-neighbour spacings of one unfolded spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct UnfoldedSpacings {
    spacings: Vec<f64>,
}

impl UnfoldedSpacings {
    #[must_use]
    pub fn spacings(&self) -> &[f64] {
        &self.spacings
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.spacings.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.spacings.is_empty()
    }

    #[must_use]
    pub fn mean(&self) -> f64 {
        if self.spacings.is_empty() {
            return 0.0;
        }
        self.spacings.iter().sum::<f64>() / self.spacings.len() as f64
    }
}

/// Applies `map` to one spectrum and returns consecutive differences.
///
/// Monotonicity of the map over a sorted spectrum makes every spacing
/// non-negative; any sub-epsilon negative value produced by floating
/// point evaluation of the analytic map is clamped to zero.
pub fn unfold(spectrum: &Spectrum, map: &UnfoldingMap) -> Result<UnfoldedSpacings> {
    if spectrum.len() < 2 {
        return Err(Error::validation(format!(
            "unfolding needs at least 2 eigenvalues, got {}",
            spectrum.len()
        )));
    }
    let unfolded: Vec<f64> = spectrum.values().iter().map(|&v| map.evaluate(v)).collect();
    let spacings = unfolded
        .windows(2)
        .map(|w| (w[1] - w[0]).max(0.0))
        .collect();
    Ok(UnfoldedSpacings { spacings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensolve::eigvals_symmetric;
    use crate::ensembles::{sample_goe, sample_poisson_spectrum, GoeParams};
    use crate::localstats::semicircle_pdf;
    use rayon::prelude::*;

    fn goe_pool(dim: usize, sigma: f64, n: usize, seed: u64) -> SpectrumPool {
        let params = GoeParams::new(dim, sigma).unwrap();
        let spectra: Vec<_> = (0..n as u64)
            .into_par_iter()
            .map(|i| eigvals_symmetric(&sample_goe(&params, RngSeed(seed).for_sample(i))).unwrap())
            .collect();
        SpectrumPool::new(spectra).unwrap()
    }

    #[test]
    fn analytic_cdf_endpoints_and_monotonicity() {
        let dim = 300;
        let edge = (2.0 * dim as f64).sqrt();
        assert_eq!(goe_analytic_cdf(-edge - 1.0, dim), 0.0);
        assert_eq!(goe_analytic_cdf(edge + 1.0, dim), dim as f64);
        assert_eq!(goe_analytic_cdf(-edge, dim), 0.0);
        assert_eq!(goe_analytic_cdf(edge, dim), dim as f64);
        assert!((goe_analytic_cdf(0.0, dim) - dim as f64 / 2.0).abs() < 1e-10);

        let mut prev = f64::NEG_INFINITY;
        for k in 0..=2000 {
            let x = -edge - 1.0 + (2.0 * edge + 2.0) * k as f64 / 2000.0;
            let y = goe_analytic_cdf(x, dim);
            assert!(y >= prev, "counting function must be monotone");
            prev = y;
        }
    }

    #[test]
    fn analytic_cdf_derivative_is_the_semicircle() {
        // d/dx N(x) should equal dim * rho(x) with the semicircle at
        // sigma = 1/sqrt(2), whose edge is sqrt(2 dim).
        let dim = 300;
        let sigma = std::f64::consts::FRAC_1_SQRT_2;
        let h = 1e-5;
        for &x in &[-15.0, -4.0, 0.0, 3.3, 11.7] {
            let slope = (goe_analytic_cdf(x + h, dim) - goe_analytic_cdf(x - h, dim)) / (2.0 * h);
            let density = dim as f64 * semicircle_pdf(x, dim, sigma);
            assert!(
                (slope - density).abs() < 1e-5 * density.max(1e-3),
                "at x = {x}: slope {slope} vs density {density}"
            );
        }
    }

    #[test]
    fn analytic_unfolding_gives_unit_mean_spacing() {
        for &(sigma, seed) in &[(std::f64::consts::FRAC_1_SQRT_2, 5u64), (1.0, 6u64)] {
            let dim = 300;
            let params = GoeParams::new(dim, sigma).unwrap();
            let spec = eigvals_symmetric(&sample_goe(&params, RngSeed(seed))).unwrap();
            let map = UnfoldingMap::analytic_goe(dim, sigma).unwrap();
            let spacings = unfold(&spec, &map).unwrap();
            assert_eq!(spacings.len(), dim - 1);
            assert!(
                (spacings.mean() - 1.0).abs() < 0.05,
                "mean unfolded spacing {} should be 1 within 5%",
                spacings.mean()
            );
            assert!(spacings.spacings().iter().all(|&s| s >= 0.0));
        }
    }

    #[test]
    fn empirical_map_counts_strictly_below() {
        let pool = SpectrumPool::new(vec![Spectrum::new(vec![1.0, 2.0, 3.0], 3).unwrap()]).unwrap();
        let map = build_empirical_cdf(&pool).unwrap();
        // One spectrum in the pool: the normalization is its own count.
        assert_eq!(map.evaluate(0.5), 0.0);
        assert_eq!(map.evaluate(1.0), 0.0, "ties are not counted (strict below)");
        assert_eq!(map.evaluate(2.0), 1.0);
        assert_eq!(map.evaluate(10.0), 3.0);
        assert!((map.raw_fraction(2.0) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn empirical_map_reproduces_ranks_on_its_own_pool() {
        let pool = goe_pool(80, 1.0, 8, 71);
        let map = build_empirical_cdf(&pool).unwrap();
        let mut all: Vec<f64> = pool
            .spectra()
            .iter()
            .flat_map(|s| s.values().to_vec())
            .collect();
        all.sort_unstable_by(f64::total_cmp);
        let n = all.len();
        for (k, &x) in all.iter().enumerate().step_by(37) {
            let below = all[..k].iter().filter(|&&y| y < x).count()
                + all[k..].iter().filter(|&&y| y < x).count();
            let got = map.raw_fraction(x);
            assert!(
                (got - below as f64 / n as f64).abs() <= 1.0 / n as f64,
                "rank mismatch at sample {k}"
            );
        }
    }

    #[test]
    fn empirical_matches_analytic_within_glivenko_cantelli_band() {
        // At sigma = 1/sqrt(2) the analytic formula applies verbatim, so
        // a decent-size pool must track it uniformly within 0.02.
        let dim = 300;
        let sigma = std::f64::consts::FRAC_1_SQRT_2;
        let pool = goe_pool(dim, sigma, 66, 81);
        let map = build_empirical_cdf(&pool).unwrap();
        let edge = (2.0 * dim as f64).sqrt();
        let mut worst: f64 = 0.0;
        for k in 0..=1000 {
            let x = -edge + 2.0 * edge * k as f64 / 1000.0;
            let diff = (map.raw_fraction(x) - goe_analytic_cdf(x, dim) / dim as f64).abs();
            worst = worst.max(diff);
        }
        assert!(
            worst <= 0.02,
            "empirical vs analytic counting function: sup deviation {worst}"
        );
    }

    #[test]
    fn split_pool_floor_rule_and_determinism() {
        let spectra: Vec<Spectrum> = (0..157)
            .map(|i| Spectrum::new(vec![i as f64, i as f64 + 1.0], 2).unwrap())
            .collect();
        let pool = SpectrumPool::new(spectra).unwrap();
        let cfg = SplitConfig::two_thirds(RngSeed(7));
        let (fit, analysis) = split_pool(&pool, &cfg).unwrap();
        assert_eq!(fit.len(), 104);
        assert_eq!(analysis.len(), 53);

        let (fit2, analysis2) = split_pool(&pool, &cfg).unwrap();
        assert_eq!(fit, fit2);
        assert_eq!(analysis, analysis2);

        let small = SpectrumPool::new(pool.spectra()[..3].to_vec()).unwrap();
        let (f3, a3) = split_pool(&small, &cfg).unwrap();
        assert_eq!((f3.len(), a3.len()), (2, 1));

        let two = SpectrumPool::new(pool.spectra()[..2].to_vec()).unwrap();
        assert!(split_pool(
            &two,
            &SplitConfig {
                fit_fraction: 0.4,
                seed: RngSeed(0)
            }
        )
        .is_err());
        assert!(split_pool(
            &pool,
            &SplitConfig {
                fit_fraction: 1.0,
                seed: RngSeed(0)
            }
        )
        .is_err());
    }

    #[test]
    fn degeneracy_filter_at_both_cutoffs() {
        let spec = Spectrum::new(vec![-1e-25, 0.0, 2e-20, 0.5], 6).unwrap();
        let strict = filter_degenerate(&spec, 1e-20).unwrap();
        assert_eq!(strict.spectrum.values(), &[2e-20, 0.5]);
        assert_eq!(strict.removed, 2);
        assert!((strict.removed_fraction() - 0.5).abs() < 1e-15);
        assert_eq!(strict.spectrum.source_dim(), 6);

        let loose = filter_degenerate(&spec, 1e-30).unwrap();
        assert_eq!(loose.spectrum.values(), &[-1e-25, 2e-20, 0.5]);
        assert_eq!(loose.removed, 1);

        assert!(filter_degenerate(&spec, 0.0).is_err());
        assert!(filter_degenerate(&spec, f64::NAN).is_err());
    }

    #[test]
    fn filter_fraction_mirrors_heavily_degenerate_spectra() {
        // A spectrum with roughly a third of its mass pinned at zero,
        // the typical situation for curvature matrices with many dead
        // directions: the removed fraction lands in [0.29, 0.40].
        let mut values = vec![0.0; 110];
        values.extend((0..190).map(|i| 0.1 + i as f64));
        values.sort_unstable_by(f64::total_cmp);
        let spec = Spectrum::new(values, 300).unwrap();
        let outcome = filter_degenerate(&spec, 1e-20).unwrap();
        let fraction = outcome.removed_fraction();
        assert!((0.29..=0.40).contains(&fraction), "removed fraction {fraction}");
    }

    #[test]
    fn unfolding_is_affine_invariant_when_pool_is_transformed_too() {
        let pool = goe_pool(60, 1.0, 9, 13);
        let target = eigvals_symmetric(&sample_goe(
            &GoeParams::new(60, 1.0).unwrap(),
            RngSeed(999),
        ))
        .unwrap();

        let map = build_empirical_cdf(&pool).unwrap();
        let base = unfold(&target, &map).unwrap();

        let (a, b) = (3.5, -11.0);
        let transform = |s: &Spectrum| {
            Spectrum::new(s.values().iter().map(|&x| a * x + b).collect(), s.source_dim()).unwrap()
        };
        let pool_t = SpectrumPool::new(pool.spectra().iter().map(transform).collect()).unwrap();
        let target_t = transform(&target);
        let map_t = build_empirical_cdf(&pool_t).unwrap();
        let moved = unfold(&target_t, &map_t).unwrap();

        for (x, y) in base.spacings().iter().zip(moved.spacings()) {
            assert!((x - y).abs() <= 1e-10, "spacing changed under affine map");
        }
    }

    #[test]
    fn poisson_spectra_unfold_to_unit_mean() {
        let spectra: Vec<Spectrum> = (0..30u64)
            .map(|i| sample_poisson_spectrum(300, RngSeed(21).for_sample(i)).unwrap())
            .collect();
        let pool = SpectrumPool::new(spectra).unwrap();
        let (fit, analysis) = split_pool(&pool, &SplitConfig::two_thirds(RngSeed(2))).unwrap();
        let map = build_empirical_cdf(&fit).unwrap();
        let mut total = 0.0;
        let mut count = 0;
        for spectrum in analysis.spectra() {
            let s = unfold(spectrum, &map).unwrap();
            total += s.spacings().iter().sum::<f64>();
            count += s.len();
        }
        let mean = total / count as f64;
        assert!((mean - 1.0).abs() < 0.05, "pooled mean spacing {mean}");
    }

    #[test]
    fn unfold_needs_two_eigenvalues() {
        let map = UnfoldingMap::analytic_goe(10, 1.0).unwrap();
        let single = Spectrum::new(vec![0.3], 10).unwrap();
        assert!(unfold(&single, &map).is_err());
    }

    #[test]
    fn pools_reject_empty_member_spectra_and_keep_their_label() {
        let empty = Spectrum::new(vec![], 4).unwrap();
        let full = Spectrum::new(vec![1.0, 2.0], 4).unwrap();
        assert!(SpectrumPool::new(vec![full.clone(), empty]).is_err());
        let pool =
            SpectrumPool::with_provenance(vec![full], "goe dim=4 seed=0".to_string()).unwrap();
        assert_eq!(pool.provenance(), "goe dim=4 seed=0");
        assert_eq!(pool.len(), 1);
    }
}
