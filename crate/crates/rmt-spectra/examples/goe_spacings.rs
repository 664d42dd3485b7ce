//! Nearest-neighbour spacings of the Gaussian orthogonal ensemble.
//!
//! Samples GOE matrices, computes all eigenvalues with the dense
//! symmetric solver, unfolds each spectrum with the integrated
//! semicircle law, and tests the pooled spacing distribution against
//! the Wigner surmise and the Poisson (exponential) law.
//!
//! ```bash
//! cargo run --release --example goe_spacings
//! ```

use rayon::prelude::*;
use rmt_spectra::eigensolve::eigvals_symmetric;
use rmt_spectra::ensembles::{sample_goe, GoeParams, RngSeed};
use rmt_spectra::localstats::{ks_statistic, poisson_spacing_cdf, wigner_surmise_cdf};
use rmt_spectra::unfold::{unfold, UnfoldingMap};
use rmt_spectra::Result;

fn main() -> Result<()> {
    let dim = 120;
    let n_matrices = 60;
    let sigma = 1.0;
    let seed = RngSeed(2024);
    let params = GoeParams::new(dim, sigma)?;

    println!("sampling {n_matrices} GOE matrices of dimension {dim}");
    let spectra = (0..n_matrices as u64)
        .into_par_iter()
        .map(|i| eigvals_symmetric(&sample_goe(&params, seed.for_sample(i))))
        .collect::<Result<Vec<_>>>()?;

    // The semicircle bulk ends at 2 sigma sqrt(dim); the extreme
    // sampled eigenvalues should sit close to that edge.
    let edge = 2.0 * sigma * (dim as f64).sqrt();
    let max_abs = spectra
        .iter()
        .flat_map(|s| s.values())
        .fold(0.0_f64, |acc, &v| acc.max(v.abs()));
    println!("semicircle edge {edge:.2}, largest sampled |eigenvalue| {max_abs:.2}");

    // Unfolding with the integrated semicircle law flattens the mean
    // level density, so spacings become comparable across the bulk.
    let map = UnfoldingMap::analytic_goe(dim, sigma)?;
    let mut spacings = Vec::new();
    for spectrum in &spectra {
        spacings.extend_from_slice(unfold(spectrum, &map)?.spacings());
    }
    let mean = spacings.iter().sum::<f64>() / spacings.len() as f64;
    println!(
        "{} unfolded spacings, mean {mean:.4} (unfolding targets 1)",
        spacings.len()
    );

    let wigner = ks_statistic(&spacings, "wigner", |s| wigner_surmise_cdf(s).unwrap())?;
    let poisson = ks_statistic(&spacings, "poisson", |s| poisson_spacing_cdf(s).unwrap())?;
    println!("KS vs Wigner surmise  {:.4}", wigner.ks_statistic);
    println!("KS vs exponential     {:.4}", poisson.ks_statistic);

    assert!(
        wigner.ks_statistic < 0.05,
        "GOE spacings should follow the Wigner surmise"
    );
    assert!(
        poisson.ks_statistic > 0.15,
        "GOE spacings should be far from the Poisson law"
    );
    println!("ok: level repulsion matches the Wigner surmise");
    Ok(())
}
