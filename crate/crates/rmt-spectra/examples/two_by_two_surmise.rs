//! The 2x2 ensemble where the Wigner surmise is exact.
//!
//! For 2x2 GOE matrices the gap between the two eigenvalues,
//! normalized to unit mean, has density exactly `(pi s / 2)
//! exp(-pi s^2 / 4)`. At large sample sizes the empirical distribution
//! should match to within pure sampling noise, which shrinks like
//! `1 / sqrt(n)`.
//!
//! ```bash
//! cargo run --release --example two_by_two_surmise
//! ```

use rayon::prelude::*;
use rmt_spectra::eigensolve::eigvals_symmetric;
use rmt_spectra::ensembles::{sample_goe, GoeParams, RngSeed};
use rmt_spectra::localstats::{ks_statistic, wigner_surmise_cdf};
use rmt_spectra::Result;

fn main() -> Result<()> {
    let n_matrices: u64 = 400_000;
    let sigma = 1.0;
    let seed = RngSeed(3);
    let params = GoeParams::new(2, sigma)?;

    println!("sampling {n_matrices} GOE matrices of dimension 2");
    let gaps: Vec<f64> = (0..n_matrices)
        .into_par_iter()
        .map(|i| {
            let spectrum = eigvals_symmetric(&sample_goe(&params, seed.for_sample(i)))?;
            Ok(spectrum.values()[1] - spectrum.values()[0])
        })
        .collect::<Result<_>>()?;

    // The raw gap is sigma times a chi-distributed variable with two
    // degrees of freedom scaled by 2, so its mean is sigma sqrt(2 pi).
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    let expected_mean = sigma * (2.0 * std::f64::consts::PI).sqrt();
    println!("mean gap {mean:.4} (exact value {expected_mean:.4})");

    let spacings: Vec<f64> = gaps.iter().map(|g| g / mean).collect();
    let report = ks_statistic(&spacings, "wigner", |s| wigner_surmise_cdf(s).unwrap())?;
    println!("KS vs Wigner surmise over {} spacings: {:.5}", spacings.len(), report.ks_statistic);

    // Spot-check a few quantiles against the closed-form inverse CDF
    // s = sqrt(-4 ln(1 - q) / pi).
    let mut sorted = spacings.clone();
    sorted.sort_unstable_by(f64::total_cmp);
    for q in [0.25, 0.5, 0.9] {
        let measured = sorted[(q * sorted.len() as f64) as usize];
        let exact = (-4.0 * (1.0 - q).ln() / std::f64::consts::PI).sqrt();
        println!("quantile {q:.2}: measured {measured:.4}, exact {exact:.4}");
    }

    assert!((mean - expected_mean).abs() / expected_mean < 0.01);
    assert!(report.ks_statistic < 0.006, "the surmise is exact for 2x2");
    println!("ok: the 2x2 gap law reproduces the Wigner surmise");
    Ok(())
}
