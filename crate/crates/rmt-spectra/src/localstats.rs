//! Local spectral statistics and their reference laws.
//!
//! The observables are nearest-neighbour spacings of an unfolded
//! spectrum and consecutive spacing ratios of a raw spectrum. The
//! reference laws they are compared against:
//!
//! * Wigner surmise for GOE spacings, `p(s) = (pi s / 2) exp(-pi s^2/4)`,
//!   unit mean by construction.
//! * The GOE spacing-ratio surmise
//!   `p(r) = 27 (r + r^2) / (8 (1 + r + r^2)^(5/2))`, heavy-tailed with
//!   `P(r <= 10)` just under 0.985, which motivates the default ratio
//!   truncation of 10.
//! * The exponential law `p(s) = exp(-s)` for uncorrelated (Poisson)
//!   levels.
//! * The Wigner semicircle for the global GOE density, used for
//!   best-fit density comparisons rather than local statistics.
//!
//! Goodness of fit is the exact two-sided Kolmogorov-Smirnov statistic;
//! no asymptotic p-value approximation is used anywhere.

use serde::{Deserialize, Serialize};

use crate::eigensolve::Spectrum;
use crate::error::{Error, Result};

/// Ratios above this value are dropped by default. The surmise puts
/// about 1.5% of its mass beyond 10, so the retained fraction of a GOE
/// sample should hover near 0.985.
pub const DEFAULT_RATIO_TRUNCATION: f64 = 10.0;

/// Consecutive-spacing ratios of one spectrum, after truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioSample {
    /// Retained ratios, in spectrum order.
    pub ratios: Vec<f64>,
    /// Truncation threshold that was applied.
    pub truncation: f64,
    /// Number of ratios that exceeded the threshold and were dropped.
    pub dropped: usize,
}

/// Result of a Kolmogorov-Smirnov comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    /// Exact two-sided KS statistic.
    pub ks_statistic: f64,
    /// Number of samples compared.
    pub n_samples: usize,
    /// Label of the reference law.
    pub reference: String,
}

/// Binned density of a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralHistogram {
    /// `n_bins + 1` ascending edges.
    pub bin_edges: Vec<f64>,
    /// Raw counts per bin.
    pub counts: Vec<u64>,
    /// Per-bin density; integrates to the retained fraction of the
    /// sample, i.e. to 1 minus the clipped fraction.
    pub density: Vec<f64>,
    /// Samples outside the range, tallied but not binned.
    pub clipped: usize,
    /// Total number of samples offered.
    pub total: usize,
}

impl SpectralHistogram {
    /// Fraction of samples that fell outside the histogram range.
    #[must_use]
    pub fn clipped_fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.clipped as f64 / self.total as f64
        }
    }
}

fn require_nonneg(x: f64, what: &str) -> Result<()> {
    if x < 0.0 || !x.is_finite() {
        return Err(Error::validation(format!(
            "{what} is defined for non-negative arguments, got {x}"
        )));
    }
    Ok(())
}

/// Wigner surmise density `(pi s / 2) exp(-pi s^2 / 4)`.
pub fn wigner_surmise_pdf(s: f64) -> Result<f64> {
    require_nonneg(s, "wigner_surmise_pdf")?;
    let pi = std::f64::consts::PI;
    Ok(0.5 * pi * s * (-0.25 * pi * s * s).exp())
}

/// Wigner surmise CDF `1 - exp(-pi s^2 / 4)`.
pub fn wigner_surmise_cdf(s: f64) -> Result<f64> {
    require_nonneg(s, "wigner_surmise_cdf")?;
    let pi = std::f64::consts::PI;
    Ok(1.0 - (-0.25 * pi * s * s).exp())
}

/// GOE spacing-ratio surmise density
/// `27 (r + r^2) / (8 (1 + r + r^2)^(5/2))`.
pub fn ratio_surmise_pdf(r: f64) -> Result<f64> {
    require_nonneg(r, "ratio_surmise_pdf")?;
    let u = 1.0 + r + r * r;
    Ok(27.0 * (r + r * r) / (8.0 * u.powf(2.5)))
}

/// GOE spacing-ratio surmise CDF in closed form,
/// `1/2 + (2r^3 + 3r^2 - 3r - 2) / (4 (1 + r + r^2)^(3/2))`.
///
/// The antiderivative is checked against adaptive quadrature in the
/// tests; note `F(1) = 1/2` exactly, reflecting the `r <-> 1/r`
/// symmetry of the law.
pub fn ratio_surmise_cdf(r: f64) -> Result<f64> {
    require_nonneg(r, "ratio_surmise_cdf")?;
    let u = 1.0 + r + r * r;
    Ok(0.5 + (2.0 * r * r * r + 3.0 * r * r - 3.0 * r - 2.0) / (4.0 * u.powf(1.5)))
}

/// Exponential spacing density `exp(-s)` of uncorrelated levels.
pub fn poisson_spacing_pdf(s: f64) -> Result<f64> {
    require_nonneg(s, "poisson_spacing_pdf")?;
    Ok((-s).exp())
}

/// Exponential spacing CDF `1 - exp(-s)`.
pub fn poisson_spacing_cdf(s: f64) -> Result<f64> {
    require_nonneg(s, "poisson_spacing_cdf")?;
    Ok(1.0 - (-s).exp())
}

/// Wigner semicircle density for a GOE of size `dim` and scale `sigma`:
/// `sqrt(4 dim sigma^2 - x^2) / (2 pi sigma^2 dim)` on its support,
/// zero outside. Total function; integrates to 1 over the real line.
#[must_use]
pub fn semicircle_pdf(x: f64, dim: usize, sigma: f64) -> f64 {
    let r2 = 4.0 * dim as f64 * sigma * sigma;
    if x * x >= r2 {
        return 0.0;
    }
    (r2 - x * x).sqrt() / (2.0 * std::f64::consts::PI * sigma * sigma * dim as f64)
}

/// Scale of the best-fit semicircle for a pooled spectrum, matching the
/// second moment: `sigma^2 = mean(lambda^2) / dim`.
pub fn fit_semicircle_sigma(pooled: &[f64], dim: usize) -> Result<f64> {
    if pooled.is_empty() {
        return Err(Error::validation(
            "cannot fit a semicircle to an empty sample",
        ));
    }
    if dim == 0 {
        return Err(Error::validation("semicircle fit needs dim >= 1"));
    }
    let second = pooled.iter().map(|x| x * x).sum::<f64>() / pooled.len() as f64;
    Ok((second / dim as f64).sqrt())
}

/// Consecutive spacing ratios with the default truncation of
/// [`DEFAULT_RATIO_TRUNCATION`].
pub fn spacing_ratios(spectrum: &Spectrum) -> Result<RatioSample> {
    spacing_ratios_with_truncation(spectrum, DEFAULT_RATIO_TRUNCATION)
}

/// Consecutive spacing ratios
/// `r_i = (x_i - x_(i-1)) / (x_(i-1) - x_(i-2))` for `i = 2 .. len-1`,
/// dropping ratios strictly above `truncation`.
///
/// Needs at least three eigenvalues; a zero denominator (two exactly
/// coincident levels) is reported as a numerical error naming the
/// offending index.
pub fn spacing_ratios_with_truncation(spectrum: &Spectrum, truncation: f64) -> Result<RatioSample> {
    if !(truncation > 0.0) {
        return Err(Error::validation(format!(
            "ratio truncation must be positive, got {truncation}"
        )));
    }
    let v = spectrum.values();
    if v.len() < 3 {
        return Err(Error::validation(format!(
            "spacing ratios need at least 3 eigenvalues, got {}",
            v.len()
        )));
    }
    let mut ratios = Vec::with_capacity(v.len() - 2);
    let mut dropped = 0;
    for i in 2..v.len() {
        let denom = v[i - 1] - v[i - 2];
        if denom == 0.0 {
            return Err(Error::Numerical {
                index: i,
                message: "zero spacing in ratio denominator (degenerate levels)".to_string(),
            });
        }
        let r = (v[i] - v[i - 1]) / denom;
        if r > truncation {
            dropped += 1;
        } else {
            ratios.push(r);
        }
    }
    Ok(RatioSample {
        ratios,
        truncation,
        dropped,
    })
}

/// Exact two-sided Kolmogorov-Smirnov statistic of `samples` against
/// the continuous reference CDF `cdf`:
/// `D = max_i max(|i/n - F(x_(i))|, |(i-1)/n - F(x_(i))|)`.
pub fn ks_statistic(
    samples: &[f64],
    reference: &str,
    cdf: impl Fn(f64) -> f64,
) -> Result<GofReport> {
    if samples.is_empty() {
        return Err(Error::validation(
            "KS statistic of an empty sample set",
        ));
    }
    let mut sorted = samples.to_vec();
    for (i, x) in sorted.iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::validation(format!(
                "sample {i} is not finite: {x}"
            )));
        }
    }
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        if !f.is_finite() {
            return Err(Error::Numerical {
                index: i,
                message: format!("reference CDF returned {f} at {x}"),
            });
        }
        let hi = (i as f64 + 1.0) / n - f;
        let lo = f - i as f64 / n;
        d = d.max(hi.abs()).max(lo.abs());
    }
    Ok(GofReport {
        ks_statistic: d,
        n_samples: sorted.len(),
        reference: reference.to_string(),
    })
}

/// Bins `samples` into `n_bins` equal bins over `range`, tallying
/// out-of-range samples separately. The right edge is inclusive for the
/// last bin.
pub fn histogram(samples: &[f64], n_bins: usize, range: (f64, f64)) -> Result<SpectralHistogram> {
    let (lo, hi) = range;
    if n_bins == 0 {
        return Err(Error::validation("histogram needs at least one bin"));
    }
    if samples.is_empty() {
        return Err(Error::validation("histogram of an empty sample set"));
    }
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::validation(format!(
            "histogram range must be finite with lo < hi, got ({lo}, {hi})"
        )));
    }
    let width = (hi - lo) / n_bins as f64;
    let mut counts = vec![0u64; n_bins];
    let mut clipped = 0usize;
    for &x in samples {
        if x < lo || x > hi || !x.is_finite() {
            clipped += 1;
            continue;
        }
        let k = (((x - lo) / width) as usize).min(n_bins - 1);
        counts[k] += 1;
    }
    let total = samples.len();
    let density = counts
        .iter()
        .map(|&c| c as f64 / (total as f64 * width))
        .collect();
    let bin_edges = (0..=n_bins).map(|k| lo + width * k as f64).collect();
    Ok(SpectralHistogram {
        bin_edges,
        counts,
        density,
        clipped,
        total,
    })
}
